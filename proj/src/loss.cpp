#include "logseg/loss.hpp"

#include <cmath>
#include <numeric>

#include "logseg/eigen_sym3.hpp"
#include "logseg/error.hpp"
#include "logseg/polyfit.hpp"
#include "logseg/simd/kernels.hpp"
#include "logseg/stats.hpp"

namespace logseg {

const char* to_string(Term term) noexcept {
  switch (term) {
    case Term::Fit: return "fit";
    case Term::Distance: return "distance";
    case Term::Deviation: return "deviation";
    case Term::Plane: return "plane";
    case Term::Normal: return "normal";
    case Term::Weights: return "weights";
  }
  return "?";
}

double LossWeights::operator[](Term t) const noexcept {
  return const_cast<LossWeights&>(*this)[t];
}

double& LossWeights::operator[](Term t) noexcept {
  switch (t) {
    case Term::Fit: return fit;
    case Term::Distance: return rho;
    case Term::Deviation: return sigma;
    case Term::Plane: return plane;
    case Term::Normal: return normal;
    case Term::Weights: break;
  }
  return weights;
}

void LossWeights::validate() const {
  for (Term t : kAllTerms) {
    const double v = (*this)[t];
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorKind::InvalidArgument,
                  std::string("loss weight for ") + to_string(t) + " must be finite and >= 0");
    }
  }
}

LossWeights LossWeights::zero() noexcept {
  LossWeights z;
  for (Term t : kAllTerms) z[t] = 0.0;
  return z;
}

LossWeights LossWeights::only(Term term) noexcept {
  LossWeights z = zero();
  z[term] = 1.0;
  return z;
}

double LossBreakdown::operator[](Term t) const noexcept {
  return const_cast<LossBreakdown&>(*this)[t];
}

double& LossBreakdown::operator[](Term t) noexcept {
  switch (t) {
    case Term::Fit: return fit;
    case Term::Distance: return rho;
    case Term::Deviation: return sigma;
    case Term::Plane: return plane;
    case Term::Normal: return normal;
    case Term::Weights: break;
  }
  return weights;
}

std::vector<double> SegmentationState::weights() const {
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = sigmoid(logits[i]);
  return w;
}

double plane_term(const std::array<double, 3>& l) noexcept {
  if (!(l[0] > kEigenClamp)) return 1.0;
  const double flat = l[1] / l[0];
  const double thin = l[1] > kEigenClamp ? l[2] / l[1] : 0.0;
  return 1.0 - flat + thin;
}

namespace {

/// d plane_term / d eigenvalue, matching the guards in plane_term.
std::array<double, 3> plane_term_slopes(const std::array<double, 3>& l) noexcept {
  if (!(l[0] > kEigenClamp)) return {0.0, 0.0, 0.0};
  std::array<double, 3> d{l[1] / (l[0] * l[0]), -1.0 / l[0], 0.0};
  if (l[1] > kEigenClamp) {
    d[1] -= l[2] / (l[1] * l[1]);
    d[2] = 1.0 / l[1];
  }
  return d;
}

}  // namespace

LossModel::LossModel(const PointCloud& cloud, const Neighborhoods* neighborhoods, int degree)
    : cloud_(&cloud), neighborhoods_(neighborhoods), degree_(degree) {
  if (degree < 0 || degree > kMaxCurveDegree) {
    throw Error(ErrorKind::InvalidArgument, "curve degree must be in [0, 3]");
  }
  if (neighborhoods != nullptr && neighborhoods->size() != cloud.size()) {
    throw Error(ErrorKind::LengthMismatch, "neighborhoods were built for a different cloud");
  }
  xs_.reserve(cloud.size());
  ys_.reserve(cloud.size());
  zs_.reserve(cloud.size());
  for (const Vec3& p : cloud.points) {
    xs_.push_back(p.x);
    ys_.push_back(p.y);
    zs_.push_back(p.z);
  }
}

LossBreakdown LossModel::evaluate(std::span<const double> w, std::span<const Vec2> rho,
                                  const LossWeights& lambda, const Options& options,
                                  WeightGradient* grad) const {
  const std::size_t n = size();
  if (w.size() != n || rho.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "segmentation state does not match the cloud");
  }
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty cloud");

  std::vector<std::uint32_t> every;
  std::span<const std::uint32_t> subset = options.subset;
  if (subset.empty()) {
    every.resize(n);
    std::iota(every.begin(), every.end(), 0u);
    subset = every;
  }
  const std::size_t ns = subset.size();

  if (grad != nullptr) {
    grad->weights.assign(n, 0.0);
    grad->rho.assign(n, Vec2{});
    grad->degenerate_spectrum = 0;
  }
  auto needed = [&](Term t) { return options.all_terms || lambda[t] != 0.0; };
  auto differentiate = [&](Term t) { return grad != nullptr && lambda[t] != 0.0; };

  double wsum = 0.0;
  for (std::uint32_t i : subset) wsum += w[i];
  const bool weighted_terms =
      needed(Term::Fit) || needed(Term::Distance) || needed(Term::Deviation) || needed(Term::Plane);
  if (weighted_terms && !(wsum > kWeightEpsilon)) {
    throw Error(ErrorKind::AllWeightsZero, "all point weights are zero");
  }

  LossBreakdown out;

  if (needed(Term::Fit)) {
    VandermondeSystem system(degree_);
    const int m = system.size();
    std::array<double, 4> ay{}, az{};
    for (std::uint32_t i : subset) {
      system.add(xs_[i], w[i]);
      const auto p = monomials(xs_[i], degree_);
      const double cy = ys_[i] + rho[i].y;
      const double cz = zs_[i] + rho[i].z;
      for (int d = 0; d < m; ++d) {
        ay[d] += w[i] * p[d] * cy;
        az[d] += w[i] * p[d] * cz;
      }
    }
    system.factor();
    system.solve(std::span<double>(ay.data(), m));
    system.solve(std::span<double>(az.data(), m));

    std::vector<Vec2> residual(ns);
    std::vector<double> dist(ns);
    double total = 0.0;
    for (std::size_t t = 0; t < ns; ++t) {
      const std::uint32_t i = subset[t];
      const auto p = monomials(xs_[i], degree_);
      double fy = 0.0, fz = 0.0;
      for (int d = 0; d < m; ++d) {
        fy += p[d] * ay[d];
        fz += p[d] * az[d];
      }
      residual[t] = {ys_[i] + rho[i].y - fy, zs_[i] + rho[i].z - fz};
      dist[t] = norm(residual[t]);
      total += w[i] * dist[t];
    }
    out.fit = total / wsum;

    if (differentiate(Term::Fit)) {
      const double scale = lambda.fit / wsum;
      // Adjoint of the coefficients: H = (X^T W X)^-1 dF/dA.
      std::array<double, 4> hy{}, hz{};
      for (std::size_t t = 0; t < ns; ++t) {
        if (dist[t] == 0.0) continue;
        const std::uint32_t i = subset[t];
        const auto p = monomials(xs_[i], degree_);
        const double uy = residual[t].y / dist[t];
        const double uz = residual[t].z / dist[t];
        for (int d = 0; d < m; ++d) {
          hy[d] -= w[i] * p[d] * uy;
          hz[d] -= w[i] * p[d] * uz;
        }
      }
      system.solve(std::span<double>(hy.data(), m));
      system.solve(std::span<double>(hz.data(), m));
      for (std::size_t t = 0; t < ns; ++t) {
        const std::uint32_t i = subset[t];
        const auto p = monomials(xs_[i], degree_);
        double xhy = 0.0, xhz = 0.0;
        for (int d = 0; d < m; ++d) {
          xhy += p[d] * hy[d];
          xhz += p[d] * hz[d];
        }
        const Vec2& r = residual[t];
        grad->weights[i] += scale * ((dist[t] - out.fit) + xhy * r.y + xhz * r.z);
        const double uy = dist[t] > 0.0 ? r.y / dist[t] : 0.0;
        const double uz = dist[t] > 0.0 ? r.z / dist[t] : 0.0;
        grad->rho[i].y += scale * w[i] * (uy + xhy);
        grad->rho[i].z += scale * w[i] * (uz + xhz);
      }
    }
  }

  if (needed(Term::Distance)) {
    double total = 0.0;
    for (std::uint32_t i : subset) total += w[i] * norm(rho[i]);
    out.rho = total / wsum;
    if (differentiate(Term::Distance)) {
      const double scale = lambda.rho / wsum;
      for (std::uint32_t i : subset) {
        const double a = norm(rho[i]);
        grad->weights[i] += scale * (a - out.rho);
        if (a > 0.0) {
          grad->rho[i].y += scale * w[i] * rho[i].y / a;
          grad->rho[i].z += scale * w[i] * rho[i].z / a;
        }
      }
    }
  }

  if (needed(Term::Deviation)) {
    // Weighted line through (x_i, |rho_i|) removes the taper before measuring spread.
    VandermondeSystem system(1);
    std::array<double, 2> beta{};
    for (std::uint32_t i : subset) {
      const double a = norm(rho[i]);
      system.add(xs_[i], w[i]);
      beta[0] += w[i] * a;
      beta[1] += w[i] * xs_[i] * a;
    }
    system.factor();
    system.solve(beta);
    std::vector<double> resid(ns);
    double total = 0.0;
    for (std::size_t t = 0; t < ns; ++t) {
      const std::uint32_t i = subset[t];
      resid[t] = norm(rho[i]) - (beta[0] + beta[1] * xs_[i]);
      total += w[i] * resid[t] * resid[t];
    }
    out.sigma = total / wsum;

    if (differentiate(Term::Deviation)) {
      const double scale = lambda.sigma / wsum;
      // Vanishes at the exact least-squares solution; kept for round-off.
      std::array<double, 2> h{};
      for (std::size_t t = 0; t < ns; ++t) {
        const std::uint32_t i = subset[t];
        h[0] -= 2.0 * w[i] * resid[t];
        h[1] -= 2.0 * w[i] * resid[t] * xs_[i];
      }
      system.solve(h);
      for (std::size_t t = 0; t < ns; ++t) {
        const std::uint32_t i = subset[t];
        const double xh = h[0] + h[1] * xs_[i];
        const double e = resid[t];
        grad->weights[i] += scale * ((e * e - out.sigma) + xh * e);
        const double a = norm(rho[i]);
        if (a > 0.0) {
          const double d_a = scale * w[i] * (2.0 * e + xh);
          grad->rho[i].y += d_a * rho[i].y / a;
          grad->rho[i].z += d_a * rho[i].z / a;
        }
      }
    }
  }

  if (needed(Term::Plane) || needed(Term::Normal)) {
    if (neighborhoods_ == nullptr) {
      throw Error(ErrorKind::InvalidArgument, "plane and normal terms need neighborhoods");
    }
    const Neighborhoods& nb = *neighborhoods_;
    const std::size_t local = static_cast<std::size_t>(nb.k) + 1;
    const simd::KernelTable& kernels = simd::active();
    const bool grad_plane = differentiate(Term::Plane);
    const bool grad_normal = differentiate(Term::Normal);

    std::vector<std::uint32_t> members(local);
    std::vector<double> bx(local), by(local), bz(local), bw(local), q0(local), q1(local), q2(local);
    std::vector<double> plane_values(ns, 1.0);
    std::vector<double> normal_values(ns, 0.0);
    std::vector<char> normal_used(ns, 0);
    // Neighbor contributions, scaled by the (not yet known) mean denominators later.
    std::vector<double> plane_acc(grad_plane ? n : 0, 0.0);
    std::vector<double> normal_acc(grad_normal ? n : 0, 0.0);
    std::vector<Vec2> normal_rho(grad_normal ? ns : 0);
    double plane_total = 0.0;
    double normal_total = 0.0;
    double normal_wsum = 0.0;

    for (std::size_t t = 0; t < ns; ++t) {
      const std::uint32_t i = subset[t];
      members[0] = i;
      const auto nbr = nb.of(i);
      std::copy(nbr.begin(), nbr.end(), members.begin() + 1);
      for (std::size_t j = 0; j < local; ++j) {
        const std::uint32_t g = members[j];
        bx[j] = xs_[g];
        by[j] = ys_[g];
        bz[j] = zs_[g];
        bw[j] = w[g];
      }
      const LocalFrame frame = analyze_neighborhood(kernels, bw.data(), bx.data(), by.data(), bz.data(), local);
      if (!(frame.weight_sum > kWeightEpsilon)) {
        plane_total += w[i];  // worst case; no normal available
        continue;
      }
      const auto& l = frame.eigen.values;
      const auto& v = frame.eigen.vectors;
      plane_values[t] = plane_term(l);
      plane_total += w[i] * plane_values[t];

      const double a = norm(rho[i]);
      const bool use_normal = a > kRhoEpsilon;
      double s = 0.0;
      if (use_normal) {
        s = rho[i].y * v[2].y + rho[i].z * v[2].z;
        normal_values[t] = 1.0 - std::abs(s) / a;
        normal_used[t] = 1;
        normal_total += w[i] * normal_values[t];
        normal_wsum += w[i];
      }

      const bool need_plane_grad = grad_plane;
      const bool need_normal_grad = grad_normal && use_normal;
      if (!need_plane_grad && !need_normal_grad) continue;

      const double axes[9] = {v[0].x, v[0].y, v[0].z, v[1].x, v[1].y, v[1].z, v[2].x, v[2].y, v[2].z};
      kernels.project3(bx.data(), by.data(), bz.data(), local, frame.mean.x, frame.mean.y,
                       frame.mean.z, axes, q0.data(), q1.data(), q2.data());
      const double inv_mass = 1.0 / frame.weight_sum;

      if (need_plane_grad) {
        // d lambda_a / d w_j = ((v_a . (p_j - mean))^2 - lambda_a) / sum w
        const auto slope = plane_term_slopes(l);
        const double base = slope[0] * l[0] + slope[1] * l[1] + slope[2] * l[2];
        const double c = w[i] * inv_mass;
        for (std::size_t j = 0; j < local; ++j) {
          const double d = slope[0] * q0[j] * q0[j] + slope[1] * q1[j] * q1[j] + slope[2] * q2[j] * q2[j] - base;
          plane_acc[members[j]] += c * d;
        }
      }

      if (need_normal_grad) {
        const double sign = s >= 0.0 ? 1.0 : -1.0;
        normal_rho[t] = {-sign * (v[2].y / a - s * rho[i].y / (a * a * a)),
                         -sign * (v[2].z / a - s * rho[i].z / (a * a * a))};
        // dN/dv3 = -sign * rho / a; dv3/dw_j = sum_b v_b q_b q_3 / (sum w (l3 - l_b)).
        const double gy = -sign * rho[i].y / a;
        const double gz = -sign * rho[i].z / a;
        double coef[2] = {0.0, 0.0};
        bool degenerate = false;
        for (int b = 0; b < 2; ++b) {
          const double gap = l[2] - l[static_cast<std::size_t>(b)];
          if (std::abs(gap) < kSpectralGapEpsilon) {
            degenerate = true;
            continue;
          }
          coef[b] = (gy * v[static_cast<std::size_t>(b)].y + gz * v[static_cast<std::size_t>(b)].z) * inv_mass / gap;
        }
        if (degenerate) ++grad->degenerate_spectrum;
        const double c = w[i];
        for (std::size_t j = 0; j < local; ++j) {
          normal_acc[members[j]] += c * q2[j] * (coef[0] * q0[j] + coef[1] * q1[j]);
        }
      }
    }

    out.plane = plane_total / wsum;
    out.normal = normal_wsum > kWeightEpsilon ? normal_total / normal_wsum : 0.0;

    if (grad_plane) {
      const double scale = lambda.plane / wsum;
      for (std::size_t t = 0; t < ns; ++t) grad->weights[subset[t]] += scale * (plane_values[t] - out.plane);
      for (std::size_t j = 0; j < n; ++j) grad->weights[j] += scale * plane_acc[j];
    }
    if (grad_normal && normal_wsum > kWeightEpsilon) {
      const double scale = lambda.normal / normal_wsum;
      for (std::size_t t = 0; t < ns; ++t) {
        if (!normal_used[t]) continue;
        const std::uint32_t i = subset[t];
        grad->weights[i] += scale * (normal_values[t] - out.normal);
        grad->rho[i].y += scale * w[i] * normal_rho[t].y;
        grad->rho[i].z += scale * w[i] * normal_rho[t].z;
      }
      for (std::size_t j = 0; j < n; ++j) grad->weights[j] += scale * normal_acc[j];
    }
  }

  if (needed(Term::Weights)) {
    double total = 0.0;
    for (std::uint32_t i : subset) total += w[i];
    out.weights = 1.0 - total / static_cast<double>(ns);
    if (differentiate(Term::Weights)) {
      const double g = -lambda.weights / static_cast<double>(ns);
      for (std::uint32_t i : subset) grad->weights[i] += g;
    }
  }

  out.total = 0.0;
  for (Term t : kAllTerms) out.total += lambda[t] * out[t];
  return out;
}

LossBreakdown LossModel::evaluate(const SegmentationState& state, const LossWeights& lambda,
                                  const Options& options, LossGradient* gradient) const {
  const std::vector<double> w = state.weights();
  if (gradient == nullptr) return evaluate(w, state.rho, lambda, options, nullptr);
  WeightGradient wg;
  const LossBreakdown out = evaluate(w, state.rho, lambda, options, &wg);
  gradient->logits.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) gradient->logits[i] = wg.weights[i] * w[i] * (1.0 - w[i]);
  gradient->rho = std::move(wg.rho);
  gradient->degenerate_spectrum = wg.degenerate_spectrum;
  return out;
}

std::vector<Vec3> centreline_points(const PointCloud& cloud, const SegmentationState& state) {
  if (state.rho.size() != cloud.size()) {
    throw Error(ErrorKind::LengthMismatch, "segmentation state does not match the cloud");
  }
  std::vector<Vec3> c(cloud.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    c[i] = cloud.points[i] + Vec3{0.0, state.rho[i].y, state.rho[i].z};
  }
  return c;
}

namespace {

double single_term(const PointCloud& cloud, const Neighborhoods* nb, int degree,
                   std::span<const double> w, std::span<const Vec2> rho, Term term) {
  const LossModel model(cloud, nb, degree);
  LossModel::Options options;
  options.all_terms = false;
  return model.evaluate(w, rho, LossWeights::only(term), options)[term];
}

// Stand-in geometry for the terms that never look at point positions.
PointCloud placeholder_cloud(std::size_t n) {
  PointCloud c;
  c.points.resize(n);
  return c;
}

}  // namespace

double fit_loss(const PointCloud& cloud, std::span<const double> w, std::span<const Vec2> rho, int degree) {
  return single_term(cloud, nullptr, degree, w, rho, Term::Fit);
}
double fit_loss(const PointCloud& cloud, const SegmentationState& state, int degree) {
  return fit_loss(cloud, state.weights(), state.rho, degree);
}

double distance_loss(std::span<const double> w, std::span<const Vec2> rho) {
  return single_term(placeholder_cloud(w.size()), nullptr, 0, w, rho, Term::Distance);
}
double distance_loss(const SegmentationState& state) { return distance_loss(state.weights(), state.rho); }

double deviation_loss(const PointCloud& cloud, std::span<const double> w, std::span<const Vec2> rho) {
  return single_term(cloud, nullptr, 1, w, rho, Term::Deviation);
}
double deviation_loss(const PointCloud& cloud, const SegmentationState& state) {
  return deviation_loss(cloud, state.weights(), state.rho);
}

double plane_loss(const PointCloud& cloud, std::span<const double> w, const Neighborhoods& nb) {
  const std::vector<Vec2> rho(w.size());
  return single_term(cloud, &nb, 1, w, rho, Term::Plane);
}
double plane_loss(const PointCloud& cloud, const SegmentationState& state, const Neighborhoods& nb) {
  return plane_loss(cloud, state.weights(), nb);
}

double normal_loss(const PointCloud& cloud, std::span<const double> w, std::span<const Vec2> rho,
                   const Neighborhoods& nb) {
  return single_term(cloud, &nb, 1, w, rho, Term::Normal);
}
double normal_loss(const PointCloud& cloud, const SegmentationState& state, const Neighborhoods& nb) {
  return normal_loss(cloud, state.weights(), state.rho, nb);
}

double weights_loss(std::span<const double> w) {
  if (w.empty()) throw Error(ErrorKind::InvalidArgument, "weights_loss needs at least one point");
  double total = 0.0;
  for (double v : w) total += v;
  return 1.0 - total / static_cast<double>(w.size());
}
double weights_loss(const SegmentationState& state) { return weights_loss(state.weights()); }

LossBreakdown total_loss(const PointCloud& cloud, const SegmentationState& state,
                         const Neighborhoods& nb, const LossWeights& lambda, int degree) {
  lambda.validate();
  const LossModel model(cloud, &nb, degree);
  return model.evaluate(state, lambda, {});
}

LossGradient total_loss_gradient(const PointCloud& cloud, const SegmentationState& state,
                                 const Neighborhoods& nb, const LossWeights& lambda, int degree) {
  lambda.validate();
  const LossModel model(cloud, &nb, degree);
  LossGradient g;
  model.evaluate(state, lambda, {}, &g);
  return g;
}

}  // namespace logseg
