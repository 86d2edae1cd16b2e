#include "logseg/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>
#include <utility>

#include "logseg/error.hpp"
#include "logseg/polyfit.hpp"

namespace logseg {
namespace {

// Uniform grid with cell size eps; a range query scans the 3x3 block around
// the query cell and returns indices in ascending order.
class Grid {
 public:
  Grid(std::span<const Vec2> points, double eps) : points_(points), eps_(eps) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      cells_[key(cell(points[i].y), cell(points[i].z))].push_back(static_cast<std::uint32_t>(i));
    }
  }

  void query(std::size_t i, std::vector<std::uint32_t>& out) const {
    out.clear();
    const Vec2& p = points_[i];
    const std::int64_t cy = cell(p.y), cz = cell(p.z);
    const double eps2 = eps_ * eps_;
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const auto it = cells_.find(key(cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (std::uint32_t j : it->second) {
          const double ey = points_[j].y - p.y, ez = points_[j].z - p.z;
          if (ey * ey + ez * ez <= eps2) out.push_back(j);
        }
      }
    }
    std::sort(out.begin(), out.end());
  }

 private:
  using Key = std::pair<std::int64_t, std::int64_t>;
  // Buckets compare the exact cell pair; a hash collision only costs time.
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(static_cast<std::uint64_t>(k.first) * 0x9E3779B97F4A7C15ull ^
                                         static_cast<std::uint64_t>(k.second));
    }
  };

  // Clamped so coordinates far beyond eps cannot overflow the cast.
  std::int64_t cell(double v) const {
    return static_cast<std::int64_t>(std::clamp(std::floor(v / eps_), -4e18, 4e18));
  }
  static Key key(std::int64_t a, std::int64_t b) { return {a, b}; }

  std::span<const Vec2> points_;
  double eps_;
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> cells_;
};

}  // namespace

std::vector<int> dbscan(std::span<const Vec2> points, double eps, int min_pts) {
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (min_pts < 1) throw Error(ErrorKind::InvalidArgument, "min_pts must be >= 1");
  for (const Vec2& p : points) {
    if (!std::isfinite(p.y) || !std::isfinite(p.z)) throw Error(ErrorKind::NonFinite, "dbscan input is not finite");
  }
  constexpr int kUnvisited = -2;
  const std::size_t n = points.size();
  std::vector<int> label(n, kUnvisited);
  const Grid grid(points, eps);
  std::vector<std::uint32_t> nb, nb2;
  std::deque<std::uint32_t> queue;
  int cluster = 0;

  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    grid.query(i, nb);
    if (nb.size() < static_cast<std::size_t>(min_pts)) {
      label[i] = kNoise;
      continue;
    }
    label[i] = cluster;
    queue.assign(nb.begin(), nb.end());
    while (!queue.empty()) {
      const std::uint32_t j = queue.front();
      queue.pop_front();
      if (label[j] == kNoise) label[j] = cluster;  // border point
      if (label[j] != kUnvisited) continue;
      label[j] = cluster;
      grid.query(j, nb2);
      if (nb2.size() >= static_cast<std::size_t>(min_pts)) queue.insert(queue.end(), nb2.begin(), nb2.end());
    }
    ++cluster;
  }
  return label;
}

Circle fit_circle(std::span<const Vec2> points, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != points.size()) {
    throw Error(ErrorKind::LengthMismatch, "circle weights do not match the points");
  }
  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  std::size_t used = 0;
  double sw = 0.0, my = 0.0, mz = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weight(i);
    if (w <= 0.0) continue;
    ++used;
    sw += w;
    my += w * points[i].y;
    mz += w * points[i].z;
  }
  if (used < 3) throw Error(ErrorKind::CollinearPoints, "circle fit needs at least 3 points");
  my /= sw;
  mz /= sw;

  // Centred (and scaled) coordinates keep the normal matrix well conditioned.
  double scale = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weight(i) > 0.0) scale = std::max({scale, std::abs(points[i].y - my), std::abs(points[i].z - mz)});
  }
  if (!(scale > 0.0)) throw Error(ErrorKind::CollinearPoints, "circle fit points coincide");

  double a[3][3] = {};
  double b[3] = {};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weight(i);
    if (w <= 0.0) continue;
    const double y = (points[i].y - my) / scale, z = (points[i].z - mz) / scale;
    const double row[3] = {y, z, 1.0};
    const double rhs = -(y * y + z * z);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] += w * row[r] * row[c];
      b[r] += w * row[r] * rhs;
    }
  }

  // Inverse by cofactors; the 1-norm condition number decides collinearity.
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  auto norm1 = [](const double m[3][3]) {
    double best = 0.0;
    for (int c = 0; c < 3; ++c) best = std::max(best, std::abs(m[0][c]) + std::abs(m[1][c]) + std::abs(m[2][c]));
    return best;
  };
  if (det == 0.0 || !std::isfinite(det)) throw Error(ErrorKind::CollinearPoints, "circle normal system is singular");
  double inv[3][3];
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const int r1 = (c + 1) % 3, r2 = (c + 2) % 3, c1 = (r + 1) % 3, c2 = (r + 2) % 3;
      inv[r][c] = (a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1]) / det;
    }
  }
  if (norm1(a) * norm1(inv) > kMaxConditionNumber) {
    throw Error(ErrorKind::CollinearPoints, "circle normal system is ill-conditioned");
  }
  double sol[3] = {};
  for (int r = 0; r < 3; ++r) sol[r] = inv[r][0] * b[0] + inv[r][1] * b[1] + inv[r][2] * b[2];
  const double cy = -sol[0] / 2.0, cz = -sol[1] / 2.0;
  const double r2 = cy * cy + cz * cz - sol[2];
  if (!(r2 > 0.0)) throw Error(ErrorKind::CollinearPoints, "circle fit produced no real radius");
  return {my + scale * cy, mz + scale * cz, scale * std::sqrt(r2)};
}

void BaselineConfig::validate() const {
  if (!(slice_width > 0.0)) throw Error(ErrorKind::InvalidArgument, "slice_width must be positive");
  if (!(eps > 0.0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
  if (min_pts < 1) throw Error(ErrorKind::InvalidArgument, "min_pts must be >= 1");
  if (!(dist_threshold >= 0.0)) throw Error(ErrorKind::InvalidArgument, "dist_threshold must be >= 0");
}

BaselineResult baseline_segment(const PointCloud& cloud, const BaselineConfig& config) {
  validate(cloud);
  config.validate();
  const std::size_t n = cloud.size();
  double lo = cloud.points[0].x, hi = lo;
  for (const Vec3& p : cloud.points) {
    lo = std::min(lo, p.x);
    hi = std::max(hi, p.x);
  }
  const auto slices = static_cast<std::size_t>(std::floor((hi - lo) / config.slice_width)) + 1;
  std::vector<std::vector<std::uint32_t>> members(slices);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = static_cast<std::size_t>(std::floor((cloud.points[i].x - lo) / config.slice_width));
    members[std::min(s, slices - 1)].push_back(static_cast<std::uint32_t>(i));
  }

  BaselineResult result;
  result.inlier_mask.assign(n, false);
  result.diagnostics.slices = slices;
  std::vector<Vec2> yz;
  for (const auto& idx : members) {
    if (idx.empty()) {
      ++result.diagnostics.empty_slices;
      continue;
    }
    yz.clear();
    for (std::uint32_t i : idx) yz.push_back({cloud.points[i].y, cloud.points[i].z});
    const std::vector<int> labels = dbscan(yz, config.eps, config.min_pts);
    const int clusters = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    if (clusters == 0) {
      ++result.diagnostics.empty_slices;
      continue;
    }
    std::vector<std::size_t> score(static_cast<std::size_t>(clusters), 0);
    if (config.choice == ClusterChoice::Largest) {
      for (int l : labels) {
        if (l >= 0) ++score[static_cast<std::size_t>(l)];
      }
    } else {
      const double eps2 = config.eps * config.eps;
      for (std::size_t a = 0; a < yz.size(); ++a) {
        if (labels[a] < 0) continue;
        std::size_t count = 0;
        for (std::size_t b = 0; b < yz.size(); ++b) {
          const double dy = yz[a].y - yz[b].y, dz = yz[a].z - yz[b].z;
          if (dy * dy + dz * dz <= eps2) ++count;
        }
        if (count >= static_cast<std::size_t>(config.min_pts)) ++score[static_cast<std::size_t>(labels[a])];
      }
    }
    // Ties go to the lowest label.
    const int pick = static_cast<int>(std::max_element(score.begin(), score.end()) - score.begin());
    std::vector<double> w(yz.size(), 0.0);
    for (std::size_t a = 0; a < yz.size(); ++a) w[a] = labels[a] == pick ? 1.0 : 0.0;
    Circle circle;
    try {
      circle = fit_circle(yz, w);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::CollinearPoints) throw;
      ++result.diagnostics.degenerate_slices;
      continue;
    }
    result.diagnostics.circles.push_back(circle);
    for (std::size_t a = 0; a < yz.size(); ++a) {
      const double d = std::hypot(yz[a].y - circle.centre_y, yz[a].z - circle.centre_z);
      if (std::abs(d - circle.radius) <= config.dist_threshold) result.inlier_mask[idx[a]] = true;
    }
  }
  return result;
}

}  // namespace logseg
