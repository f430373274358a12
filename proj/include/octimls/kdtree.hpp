#pragma once

#include "octimls/common.hpp"

#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace octimls {

struct Neighbor {
  double distance_sq;
  std::uint32_t index;

  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.distance_sq < b.distance_sq || (a.distance_sq == b.distance_sq && a.index < b.index);
  }
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Static 3-d tree over a point array. All queries are exact; ties in
/// distance are broken by ascending point index, so results match a brute
/// force scan that orders by (squared distance, index).
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points);

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }

  Neighbor nearest(const Vec3& q) const;
  /// Up to k neighbors sorted by (distance, index).
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k) const;
  /// Indices with squared distance strictly below radius_sq, ascending.
  std::vector<std::uint32_t> radius(const Vec3& q, double radius_sq) const;

 private:
  struct Node {
    std::uint32_t first = 0, count = 0;
    std::int32_t left = -1, right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t first, std::uint32_t count);
  template <typename Visit>
  void search(std::int32_t node, const Vec3& q, Visit& visit) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace octimls
