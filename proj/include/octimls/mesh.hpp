#pragma once

#include "octimls/common.hpp"

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace octimls {

struct Bounds {
  Vec3 min = Vec3::Constant(-1.0);
  Vec3 max = Vec3::Constant(1.0);

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

/// Indexed triangle list. Per-vertex normals are optional (empty or one per
/// vertex).
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> normals;

  bool empty() const { return triangles.empty(); }

  /// Throws Error("invalid-mesh") on out-of-range indices, non-finite
  /// coordinates, or normals that are not unit length.
  void validate() const;

  Bounds bounds() const;
  Vec3 face_normal(std::size_t t) const;  // unit, zero for degenerate faces
  double face_area(std::size_t t) const;
  double area() const;
};

/// Drops zero-area triangles and unreferenced vertices.
TriangleMesh sanitized(const TriangleMesh& mesh);

/// x' = (x - center) * scale
struct AffineTransform {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;

  Vec3 apply(const Vec3& x) const { return (x - center) * scale; }
  Vec3 inverse(const Vec3& x) const { return x / scale + center; }
};

struct NormalizedMesh {
  TriangleMesh mesh;
  AffineTransform transform;
};

/// Centers the bounding box at the origin and scales its longest side to 1.9,
/// leaving 5% padding inside [-1,1]^3 on each side.
NormalizedMesh normalize_mesh(const TriangleMesh& mesh);

inline constexpr double kNormalizedExtent = 1.9;

/// Points with optional unit normals and optional radii.
struct OrientedPointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> normals;  // empty or positions.size()
  std::vector<double> radii;  // empty or positions.size()

  std::size_t size() const { return positions.size(); }
  bool has_normals() const { return !positions.empty() && normals.size() == positions.size(); }
  bool has_radii() const { return !positions.empty() && radii.size() == positions.size(); }
  void validate() const;
};

/// Area-uniform samples with face normals, perturbed by isotropic Gaussian
/// noise of standard deviation noise_sigma * (longest bounding-box side).
OrientedPointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, double noise_sigma,
                                  std::uint64_t seed);

/// Euler characteristic V - E + F over referenced vertices and unique edges.
long euler_characteristic(const TriangleMesh& mesh);

/// True when every undirected edge is shared by exactly two triangles.
bool is_closed_manifold(const TriangleMesh& mesh);

}  // namespace octimls
