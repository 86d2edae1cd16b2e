#include "logseg/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "logseg/error.hpp"
#include "logseg/knn.hpp"
#include "logseg/optimizer.hpp"
#include "logseg/stats.hpp"

namespace logseg {

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (max_steps < 0) fail("max_steps must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must be in [0, 1)");
  if (!(adam_eps > 0.0)) fail("adam_eps must be positive");
  if (convergence_window < 1) fail("convergence_window must be >= 1");
  if (!(convergence_tol >= 0.0)) fail("convergence_tol must be >= 0");
  if (!(subsample_fraction > 0.0 && subsample_fraction <= 1.0)) fail("subsample_fraction must be in (0, 1]");
  if (batches_along_x < 1) fail("batches_along_x must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must be in (0, 1)");
  if (degree < 0 || degree > kMaxCurveDegree) fail("degree must be in [0, 3]");
  if (k < 1) fail("k must be >= 1");
}

std::size_t SegmentationResult::inlier_count() const noexcept {
  return static_cast<std::size_t>(std::count(inlier_mask.begin(), inlier_mask.end(), true));
}

SegmentationState initialize_state(const PointCloud& cloud, std::uint64_t /*seed*/) {
  validate(cloud);
  const std::size_t n = cloud.size();
  double lo = cloud.points[0].x, hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = std::min(lo, p.x);
    hi = std::max(hi, p.x);
  }
  const double width = (hi - lo) / kInitSlices;
  std::vector<int> slice(n, 0);
  std::vector<std::vector<double>> ys(kInitSlices), zs(kInitSlices);
  for (std::size_t i = 0; i < n; ++i) {
    int s = width > 0.0 ? static_cast<int>((cloud.points[i].x - lo) / width) : 0;
    s = std::clamp(s, 0, kInitSlices - 1);
    slice[i] = s;
    ys[static_cast<std::size_t>(s)].push_back(cloud.points[i].y);
    zs[static_cast<std::size_t>(s)].push_back(cloud.points[i].z);
  }
  std::vector<double> all_y(n), all_z(n);
  for (std::size_t i = 0; i < n; ++i) {
    all_y[i] = cloud.points[i].y;
    all_z[i] = cloud.points[i].z;
  }
  const Vec2 global{median(all_y), median(all_z)};
  std::vector<Vec2> centre(kInitSlices, global);
  for (std::size_t s = 0; s < centre.size(); ++s) {
    if (!ys[s].empty()) centre[s] = {median(ys[s]), median(zs[s])};
  }

  SegmentationState state;
  state.logits.assign(n, kInitLogit);
  state.rho.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& c = centre[static_cast<std::size_t>(slice[i])];
    state.rho[i] = {c.y - cloud.points[i].y, c.z - cloud.points[i].z};
  }
  return state;
}

namespace {

// Portable bounded draw so subsamples do not depend on the standard library's
// distribution implementations.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

std::vector<std::vector<std::uint32_t>> lengthwise_batches(const PointCloud& cloud, int count,
                                                          std::size_t min_size) {
  double lo = cloud.points[0].x, hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = std::min(lo, p.x);
    hi = std::max(hi, p.x);
  }
  std::vector<std::vector<std::uint32_t>> batches(static_cast<std::size_t>(count));
  const double span = hi - lo;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    int b = span > 0.0 ? static_cast<int>((cloud.points[i].x - lo) / span * count) : 0;
    b = std::clamp(b, 0, count - 1);
    batches[static_cast<std::size_t>(b)].push_back(static_cast<std::uint32_t>(i));
  }
  std::erase_if(batches, [&](const auto& b) { return b.size() < min_size; });
  return batches;
}

bool finite(const LossGradient& g) {
  for (double v : g.logits) {
    if (!std::isfinite(v)) return false;
  }
  for (const Vec2& r : g.rho) {
    if (!std::isfinite(r.y) || !std::isfinite(r.z)) return false;
  }
  return true;
}

}  // namespace

SegmentationResult segment(const PointCloud& cloud, const LossWeights& weights,
                           const OptimizerConfig& config) {
  validate(cloud);
  weights.validate();
  config.validate();
  const std::size_t n = cloud.size();
  if (n < 4) throw Error(ErrorKind::InvalidArgument, "segmentation needs at least 4 points");

  // Built even when the local terms are switched off so the final evaluation
  // can report every term.
  const int k = std::min<int>(config.k, static_cast<int>(n) - 1);
  const Neighborhoods nb = build_neighborhoods(cloud, k);
  const LossModel model(cloud, &nb, config.degree);

  SegmentationResult result;
  result.state = initialize_state(cloud, config.seed);
  SegmentationState& state = result.state;

  const std::size_t min_batch = static_cast<std::size_t>(config.degree) + 2;
  auto batches = lengthwise_batches(cloud, config.batches_along_x, min_batch);
  if (batches.empty()) {
    batches = lengthwise_batches(cloud, 1, 1);
  }

  std::mt19937_64 rng(config.seed);
  Adam adam(3 * n, config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps);
  std::vector<double> params(3 * n), flat_grad(3 * n);
  auto pack = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      params[i] = state.logits[i];
      params[n + 2 * i] = state.rho[i].y;
      params[n + 2 * i + 1] = state.rho[i].z;
    }
  };
  auto unpack = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      state.logits[i] = params[i];
      state.rho[i] = {params[n + 2 * i], params[n + 2 * i + 1]};
    }
  };
  pack();

  std::vector<std::uint32_t> pool, subset;
  std::vector<double> best_history;
  double best = std::numeric_limits<double>::infinity();
  LossGradient grad;
  LossModel::Options options;
  options.all_terms = false;

  for (int step = 0; step < config.max_steps; ++step) {
    const auto& batch = batches[static_cast<std::size_t>(step) % batches.size()];
    pool = batch;
    std::size_t take = static_cast<std::size_t>(std::llround(config.subsample_fraction * static_cast<double>(pool.size())));
    take = std::clamp(take, std::min(min_batch, pool.size()), pool.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(draw_below(rng, pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    subset.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
    std::sort(subset.begin(), subset.end());
    options.subset = subset;

    const LossBreakdown loss = model.evaluate(state, weights, options, &grad);
    if (!std::isfinite(loss.total) || !finite(grad)) {
      throw Error(ErrorKind::NonFinite, "loss or gradient is not finite at step " + std::to_string(step));
    }
    result.loss_history.push_back(loss);
    result.degenerate_spectrum += grad.degenerate_spectrum;

    for (std::size_t i = 0; i < n; ++i) {
      flat_grad[i] = grad.logits[i];
      flat_grad[n + 2 * i] = grad.rho[i].y;
      flat_grad[n + 2 * i + 1] = grad.rho[i].z;
    }
    adam.step(params, flat_grad);
    unpack();
    result.steps_used = step + 1;

    // Stop once the best loss seen has not improved by more than the tolerance
    // over the trailing window.
    best = std::min(best, loss.total);
    best_history.push_back(best);
    const auto window = static_cast<std::size_t>(config.convergence_window);
    if (best_history.size() > window &&
        best_history[best_history.size() - 1 - window] - best < config.convergence_tol) {
      result.converged = true;
      break;
    }
  }

  const LossBreakdown final_loss = model.evaluate(state, weights, LossModel::Options{});
  if (!std::isfinite(final_loss.total)) {
    throw Error(ErrorKind::NonFinite, "final loss is not finite");
  }
  result.loss_history.push_back(final_loss);

  result.final_weights = state.weights();
  result.inlier_mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.inlier_mask[i] = result.final_weights[i] >= config.threshold;
  result.centreline = centreline_points(cloud, state);
  return result;
}

CurveFit extract_centreline(const SegmentationResult& result, const PointCloud& cloud, int degree) {
  if (result.centreline.size() != cloud.size() || result.final_weights.size() != cloud.size()) {
    throw Error(ErrorKind::LengthMismatch, "segmentation result does not match the cloud");
  }
  const std::size_t n = cloud.size();
  std::vector<double> xs(n), w(n);
  std::vector<Vec2> yz(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = result.centreline[i].x;
    yz[i] = {result.centreline[i].y, result.centreline[i].z};
    w[i] = result.inlier_mask[i] ? result.final_weights[i] : 0.0;
  }
  return fit_weighted_polynomial(xs, yz, w, degree);
}

}  // namespace logseg
