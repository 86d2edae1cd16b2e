#include "logseg/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "logseg/knn.hpp"

namespace logseg {

double GradcheckReport::worst() const noexcept {
  double w = total_error;
  for (double e : term_error) w = std::max(w, e);
  return w;
}

namespace {

struct Trial {
  PointCloud cloud;
  SegmentationState state;
};

Trial random_trial(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Trial t;
  t.cloud.points.reserve(n);
  t.state.logits.reserve(n);
  t.state.rho.reserve(n);
  const double radius = 0.8 + 0.4 * unit(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -2.0 + 4.0 * unit(rng);
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    // A tenth of the points float off the surface like ambient noise.
    const double r = unit(rng) < 0.1 ? radius * (1.3 + unit(rng)) : radius * (1.0 + 0.05 * gauss(rng));
    const double y = r * std::cos(theta);
    const double z = r * std::sin(theta);
    t.cloud.points.push_back({x, y, z});
    t.state.logits.push_back(1.5 * gauss(rng));
    const double shrink = 0.7 + 0.6 * unit(rng);
    t.state.rho.push_back({-shrink * y + 0.1 * gauss(rng), -shrink * z + 0.1 * gauss(rng)});
  }
  return t;
}

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  return scale > 0.0 ? diff / scale : diff;
}

std::vector<double> flatten(const LossGradient& g) {
  std::vector<double> out(g.logits);
  for (const Vec2& r : g.rho) {
    out.push_back(r.y);
    out.push_back(r.z);
  }
  return out;
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  GradcheckReport report;
  std::mt19937_64 rng(config.seed);
  const LossWeights defaults;

  for (int trial = 0; trial < config.trials; ++trial) {
    Trial t = random_trial(config.points, rng);
    const Neighborhoods nb = build_neighborhoods(t.cloud, config.k);
    const LossModel model(t.cloud, &nb, config.degree);
    const std::size_t n = t.cloud.size();

    std::array<std::vector<double>, 6> analytic;
    std::size_t degenerate = 0;
    for (std::size_t ti = 0; ti < kAllTerms.size(); ++ti) {
      LossGradient g;
      model.evaluate(t.state, LossWeights::only(kAllTerms[ti]), {}, &g);
      degenerate += g.degenerate_spectrum;
      analytic[ti] = flatten(g);
    }
    LossGradient total_grad;
    model.evaluate(t.state, defaults, {}, &total_grad);
    degenerate += total_grad.degenerate_spectrum;
    if (degenerate > 0) {
      ++report.trials_excluded;
      report.degenerate_neighborhoods += degenerate;
      continue;
    }

    // One pair of evaluations per coordinate yields every term at once.
    std::array<std::vector<double>, 6> numeric;
    for (auto& v : numeric) v.assign(3 * n, 0.0);
    std::vector<double> numeric_total(3 * n, 0.0);
    const double h = config.step;
    auto probe = [&](std::size_t slot, double& variable) {
      const double saved = variable;
      variable = saved + h;
      const LossBreakdown up = model.evaluate(t.state, defaults, {});
      variable = saved - h;
      const LossBreakdown down = model.evaluate(t.state, defaults, {});
      variable = saved;
      for (std::size_t ti = 0; ti < kAllTerms.size(); ++ti) {
        numeric[ti][slot] = (up[kAllTerms[ti]] - down[kAllTerms[ti]]) / (2.0 * h);
      }
      numeric_total[slot] = (up.total - down.total) / (2.0 * h);
    };
    for (std::size_t i = 0; i < n; ++i) probe(i, t.state.logits[i]);
    for (std::size_t i = 0; i < n; ++i) {
      probe(n + 2 * i, t.state.rho[i].y);
      probe(n + 2 * i + 1, t.state.rho[i].z);
    }

    for (std::size_t ti = 0; ti < kAllTerms.size(); ++ti) {
      report.term_error[ti] = std::max(report.term_error[ti], relative_error(analytic[ti], numeric[ti]));
    }
    report.total_error = std::max(report.total_error, relative_error(flatten(total_grad), numeric_total));
    ++report.trials_run;
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace logseg
