#pragma once

#include "octimls/imls.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace octimls {

/// Value assigned to grid corners outside the narrow band.
inline constexpr double kOutsideValue = 10.0;

struct MeshOptions {
  /// Cells per axis over [-1,1]^3.
  int resolution = 128;
  /// Evaluate only cells that touch a finest scaffold octant or one of its
  /// 26 neighbours. When false (or when the set has no scaffold) every cell
  /// is evaluated and F uses the plain k nearest points with no band cutoff.
  bool band_only = true;
};

/// Evaluated corner values of one band cell, for debugging dumps.
struct BandRecord {
  std::uint32_t cell = 0;  // (ix * R + iy) * R + iz
  std::array<float, 8> values{};
};

struct MeshStats {
  std::size_t cells = 0;
  std::size_t corners = 0;
  std::size_t outside_corners = 0;
  std::size_t degenerate_triangles = 0;
};

/// Marching cubes of the F = 0 level set. Vertices are ordered by the grid
/// edge they lie on and triangles by cell, so output is reproducible. Normals
/// are the normalized IMLS gradient. Returns an empty mesh when F has no sign
/// change on the grid.
TriangleMesh extract_mesh(const MlsPointSet& points, const MeshOptions& options = {}, MeshStats* stats = nullptr,
                          std::vector<BandRecord>* band = nullptr);

/// Cells (sorted ids) touching a finest octant of `octree` or one of its
/// neighbours.
std::vector<std::uint32_t> band_cells(const Octree& octree, int resolution);

}  // namespace octimls
