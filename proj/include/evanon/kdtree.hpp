#pragma once

// Exact nearest-neighbor search over a static 3D point set. Median-split
// build, branch-and-bound query; returns the true nearest point, never an
// approximation.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace evanon {

class KdTree3 {
 public:
  using Point = std::array<double, 3>;

  explicit KdTree3(std::vector<Point> points) : points_(std::move(points)) {
    ids_.resize(points_.size());
    for (std::uint32_t i = 0; i < ids_.size(); ++i) ids_[i] = i;
    if (!points_.empty()) {
      nodes_.reserve(2 * points_.size() / kLeafSize + 2);
      root_ = build(0, static_cast<std::uint32_t>(points_.size()));
    }
  }

  std::size_t size() const { return points_.size(); }

  /// Index (into the constructor's point order) and squared distance of the
  /// exact nearest point. Requires a non-empty tree.
  std::pair<std::size_t, double> nearest(const Point& q) const {
    std::size_t best_id = 0;
    double best_sq = std::numeric_limits<double>::infinity();
    search(root_, q, best_id, best_sq);
    return {best_id, best_sq};
  }

 private:
  static constexpr std::uint32_t kLeafSize = 16;
  static constexpr std::uint32_t kNoChild = 0xffffffffu;

  struct Node {
    double split = 0.0;
    std::uint32_t axis = 0;
    std::uint32_t left = kNoChild;   // kNoChild marks a leaf
    std::uint32_t right = kNoChild;
    std::uint32_t begin = 0, end = 0;
  };

  static double sq_dist(const Point& a, const Point& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
  }

  std::uint32_t build(std::uint32_t begin, std::uint32_t end) {
    const std::uint32_t node_index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});
    Node node;
    node.begin = begin;
    node.end = end;

    if (end - begin > kLeafSize) {
      // Split on the widest axis at the median point.
      Point lo = points_[ids_[begin]], hi = points_[ids_[begin]];
      for (std::uint32_t i = begin + 1; i < end; ++i) {
        const Point& p = points_[ids_[i]];
        for (int a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
      int axis = 0;
      for (int a = 1; a < 3; ++a) {
        if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
      }
      if (hi[axis] > lo[axis]) {
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(ids_.begin() + begin, ids_.begin() + mid,
                         ids_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                           return points_[a][static_cast<std::size_t>(axis)] <
                                  points_[b][static_cast<std::size_t>(axis)];
                         });
        node.axis = static_cast<std::uint32_t>(axis);
        node.split = points_[ids_[mid]][static_cast<std::size_t>(axis)];
        node.left = build(begin, mid);
        node.right = build(mid, end);
      }
      // All points identical on every axis: keep as a leaf.
    }
    nodes_[node_index] = node;
    return node_index;
  }

  void search(std::uint32_t node_index, const Point& q, std::size_t& best_id,
              double& best_sq) const {
    const Node& node = nodes_[node_index];
    if (node.left == kNoChild) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const double d = sq_dist(points_[ids_[i]], q);
        if (d < best_sq) {
          best_sq = d;
          best_id = ids_[i];
        }
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const std::uint32_t near_child = delta < 0.0 ? node.left : node.right;
    const std::uint32_t far_child = delta < 0.0 ? node.right : node.left;
    search(near_child, q, best_id, best_sq);
    if (delta * delta < best_sq) {
      search(far_child, q, best_id, best_sq);
    }
  }

  std::vector<Point> points_;
  std::vector<std::uint32_t> ids_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
};

}  // namespace evanon
