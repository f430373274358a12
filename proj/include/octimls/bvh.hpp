#pragma once

#include "octimls/mesh.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace octimls {

/// Bounding-volume hierarchy over a triangle mesh answering exact
/// closest-point queries and generalized winding numbers.
///
/// Winding numbers use the hierarchical dipole approximation: a node whose
/// area-weighted centroid is farther than `accuracy` times its radius from
/// the query contributes through its summed area vector; nearer nodes recurse
/// down to exact per-triangle solid angles.
class MeshBvh {
 public:
  explicit MeshBvh(const TriangleMesh& mesh);

  struct Closest {
    double distance_sq = std::numeric_limits<double>::infinity();
    Vec3 point = Vec3::Zero();
    std::size_t triangle = 0;
  };

  /// Closest point on the mesh; the search is pruned with upper_bound_sq, so
  /// a too-small bound yields distance_sq == infinity.
  Closest closest(const Vec3& q, double upper_bound_sq = std::numeric_limits<double>::infinity()) const;
  double unsigned_distance(const Vec3& q) const;

  double winding_number(const Vec3& q, double accuracy = 2.0) const;
  /// Brute-force sum over all triangles.
  double winding_number_exact(const Vec3& q) const;

  const TriangleMesh& mesh() const { return mesh_; }

 private:
  struct Node {
    Vec3 lo, hi;
    Vec3 centroid;   // area-weighted
    Vec3 area_vec;   // sum of 0.5 * (b-a) x (c-a)
    double radius = 0.0;
    std::uint32_t first = 0, count = 0;  // leaf range into order_
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::uint32_t first, std::uint32_t count);
  void closest_rec(std::int32_t node, const Vec3& q, Closest& best) const;
  double winding_rec(std::int32_t node, const Vec3& q, double accuracy) const;
  double triangle_solid_angle(std::size_t t, const Vec3& q) const;

  TriangleMesh mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Vec3> tri_centroid_;
};

/// Closest point on triangle abc to p.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

}  // namespace octimls
