#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "logseg/geometry.hpp"

namespace logseg {

/// k nearest neighbors of every cloud point, excluding the point itself,
/// ordered by (squared distance, index).
struct Neighborhoods {
  int k = 0;
  std::vector<std::uint32_t> indices;  // size() * k, row-major

  std::size_t size() const noexcept { return k > 0 ? indices.size() / static_cast<std::size_t>(k) : 0; }
  std::span<const std::uint32_t> of(std::size_t i) const noexcept {
    return {indices.data() + i * static_cast<std::size_t>(k), static_cast<std::size_t>(k)};
  }
};

/// Static kd-tree over a point set with exact k-nearest-neighbor queries.
/// Ties in distance go to the lower point index.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 32);

  std::size_t size() const noexcept { return index_.size(); }

  /// The k nearest points to `query` in (squared distance, index) order,
  /// skipping the point whose index equals `exclude` (pass size() for none).
  /// Returns fewer than k entries only when the set is too small.
  std::vector<std::uint32_t> nearest(const Vec3& query, std::size_t k, std::size_t exclude) const;

  /// Same as nearest() but writes into out (cleared first), reusing its storage.
  void nearest(const Vec3& query, std::size_t k, std::size_t exclude,
               std::vector<std::uint32_t>& out) const;

 private:
  struct Node {
    Vec3 lo;
    Vec3 hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, std::span<const Vec3> points);

  std::size_t leaf_size_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> index_;  // tree order -> original index
  std::vector<double> xs_, ys_, zs_;  // tree order
};

/// Throws KTooLarge when k >= cloud size and InvalidArgument when k < 1.
Neighborhoods build_neighborhoods(const PointCloud& cloud, int k);

}  // namespace logseg
