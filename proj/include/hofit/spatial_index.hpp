#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Core>

#include "hofit/common.hpp"

namespace hofit {

// KD-tree over a fixed vertex set. Queries are exact: the result always equals
// the brute-force nearest vertex, with distance ties broken by lowest index.
// Read-only after construction.
class SpatialIndex {
 public:
  SpatialIndex() = default;

  explicit SpatialIndex(std::vector<Eigen::Vector3d> points)
      : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(points_.size());
    if (!points_.empty()) {
      root_ = build(0, static_cast<int>(points_.size()));
    }
  }

  struct Result {
    int index = -1;
    double distance = 0.0;
  };

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

  Result nearest(const Eigen::Vector3d& query) const {
    require(!points_.empty(), errc::empty_index, "nearest on empty index");
    Best best;
    search(root_, query, best);
    return {best.index, std::sqrt(best.dist_sq)};
  }

 private:
  struct Node {
    int axis = 0;
    int point = -1;   // index into points_
    int left = -1;
    int right = -1;
  };

  struct Best {
    double dist_sq = std::numeric_limits<double>::infinity();
    int index = -1;
  };

  int build(int lo, int hi) {
    if (lo >= hi) return -1;
    // Split on the widest axis for balanced boxes.
    Eigen::Vector3d mn = points_[order_[lo]], mx = mn;
    for (int i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(points_[order_[i]]);
      mx = mx.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);
    const int mid = (lo + hi) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid,
                     order_.begin() + hi, [&](int a, int b) {
                       const double ca = points_[a](axis);
                       const double cb = points_[b](axis);
                       return ca < cb || (ca == cb && a < b);
                     });
    Node node;
    node.axis = axis;
    node.point = order_[mid];
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(lo, mid);
    const int right = build(mid + 1, hi);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void consider(int point, const Eigen::Vector3d& query, Best& best) const {
    const double d2 = (points_[point] - query).squaredNorm();
    if (d2 < best.dist_sq ||
        (d2 == best.dist_sq && point < best.index)) {
      best.dist_sq = d2;
      best.index = point;
    }
  }

  void search(int node_id, const Eigen::Vector3d& query, Best& best) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    consider(node.point, query, best);
    const double delta = query(node.axis) - points_[node.point](node.axis);
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    search(near, query, best);
    // Visit the far side on exact ties too, so equal-distance points with a
    // lower index are never pruned away.
    if (delta * delta <= best.dist_sq) {
      search(far, query, best);
    }
  }

  std::vector<Eigen::Vector3d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

inline SpatialIndex::Result nearest_vertex(const SpatialIndex& index,
                                           const Eigen::Vector3d& query) {
  return index.nearest(query);
}

}  // namespace hofit
