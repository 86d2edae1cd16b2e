#include "logseg/knn.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>
#include <utility>

#include "logseg/error.hpp"
#include "logseg/simd/kernels.hpp"

namespace logseg {
namespace {

struct Candidate {
  double d2;
  std::uint32_t index;
  bool operator<(const Candidate& o) const noexcept {
    return d2 < o.d2 || (d2 == o.d2 && index < o.index);
  }
};

double box_distance2(const Vec3& q, const Vec3& lo, const Vec3& hi) noexcept {
  double d2 = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    const double v = q[a] < lo[a] ? lo[a] - q[a] : (q[a] > hi[a] ? q[a] - hi[a] : 0.0);
    d2 += v * v;
  }
  return d2;
}

}  // namespace

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  index_.resize(points.size());
  std::iota(index_.begin(), index_.end(), 0u);
  if (!points.empty()) {
    nodes_.reserve(2 * points.size() / leaf_size_ + 2);
    build(0, static_cast<std::uint32_t>(points.size()), points);
  }
  xs_.resize(points.size());
  ys_.resize(points.size());
  zs_.resize(points.size());
  for (std::size_t t = 0; t < index_.size(); ++t) {
    const Vec3& p = points[index_[t]];
    xs_[t] = p.x;
    ys_[t] = p.y;
    zs_[t] = p.z;
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, std::span<const Vec3> points) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = node.hi = points[index_[begin]];
  for (std::uint32_t t = begin; t < end; ++t) {
    const Vec3& p = points[index_[t]];
    for (std::size_t a = 0; a < 3; ++a) {
      node.lo[a] = std::min(node.lo[a], p[a]);
      node.hi[a] = std::max(node.hi[a], p[a]);
    }
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  std::size_t axis = 0;
  const Vec3 extent = node.hi - node.lo;
  if (extent.y > extent[axis]) axis = 1;
  if (extent.z > extent[axis]) axis = 2;
  if (extent[axis] <= 0.0) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points[a][axis];
                     const double pb = points[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const std::int32_t left = build(begin, mid, points);
  const std::int32_t right = build(mid, end, points);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

std::vector<std::uint32_t> KdTree::nearest(const Vec3& query, std::size_t k, std::size_t exclude) const {
  std::vector<std::uint32_t> out;
  nearest(query, k, exclude, out);
  return out;
}

void KdTree::nearest(const Vec3& query, std::size_t k, std::size_t exclude,
                     std::vector<std::uint32_t>& out) const {
  out.clear();
  if (k == 0 || nodes_.empty()) return;

  const simd::KernelTable& kernels = simd::active();
  std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top
  std::vector<double> d2(leaf_size_);
  std::vector<std::pair<double, std::int32_t>> stack;
  stack.emplace_back(0.0, 0);

  while (!stack.empty()) {
    const auto [bound, id] = stack.back();
    stack.pop_back();
    // Equal bounds must still be visited: they may hold a lower-index tie.
    if (heap.size() == k && bound > heap.top().d2) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      const std::size_t count = node.end - node.begin;
      if (d2.size() < count) d2.resize(count);
      kernels.squared_distances(xs_.data() + node.begin, ys_.data() + node.begin,
                                zs_.data() + node.begin, count, query.x, query.y, query.z, d2.data());
      for (std::size_t t = 0; t < count; ++t) {
        const std::uint32_t idx = index_[node.begin + t];
        if (idx == exclude) continue;
        const Candidate c{d2[t], idx};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_distance2(query, l.lo, l.hi);
    const double dr = box_distance2(query, r.lo, r.hi);
    // Push the farther child first so the nearer one is explored next.
    if (dl <= dr) {
      stack.emplace_back(dr, node.right);
      stack.emplace_back(dl, node.left);
    } else {
      stack.emplace_back(dl, node.left);
      stack.emplace_back(dr, node.right);
    }
  }

  out.resize(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = heap.top().index;
    heap.pop();
  }
}

Neighborhoods build_neighborhoods(const PointCloud& cloud, int k) {
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "neighborhood size must be positive");
  const std::size_t n = cloud.size();
  if (static_cast<std::size_t>(k) >= n) {
    throw Error(ErrorKind::KTooLarge,
                "k = " + std::to_string(k) + " needs more than " + std::to_string(n) + " points");
  }
  const KdTree tree(cloud.points);
  Neighborhoods nb;
  nb.k = k;
  nb.indices.resize(n * static_cast<std::size_t>(k));
  std::vector<std::uint32_t> found;
  for (std::size_t i = 0; i < n; ++i) {
    tree.nearest(cloud.points[i], static_cast<std::size_t>(k), i, found);
    std::copy(found.begin(), found.end(), nb.indices.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(k)));
  }
  return nb;
}

}  // namespace logseg
