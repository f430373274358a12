#pragma once

#include "octimls/mesh.hpp"

#include <functional>
#include <vector>

namespace octimls {

/// Signed distances sampled on an R^3 lattice of points spanning `bounds`
/// (corner to corner, so spacing = extent / (R - 1)). Negative inside.
/// Storage is x-major: index = (ix * R + iy) * R + iz.
class SdfGrid {
 public:
  /// Validates R >= 2, finite values, and the distance-field Lipschitz bound
  /// (adjacent samples differ by at most sqrt(3) * spacing, +10% slack).
  SdfGrid(int resolution, const Bounds& bounds, std::vector<double> values);

  static SdfGrid from_function(int resolution, const Bounds& bounds, const std::function<double(const Vec3&)>& sdf);

  int resolution() const { return resolution_; }
  const Bounds& bounds() const { return bounds_; }
  const Vec3& spacing() const { return spacing_; }
  const std::vector<double>& values() const { return values_; }

  std::size_t index(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * resolution_ + iy) * resolution_ + iz;
  }
  double at(int ix, int iy, int iz) const { return values_[index(ix, iy, iz)]; }
  Vec3 position(int ix, int iy, int iz) const {
    return bounds_.min + Vec3(ix * spacing_.x(), iy * spacing_.y(), iz * spacing_.z());
  }

  /// Central differences (one-sided on the boundary faces).
  Vec3 gradient_at(int ix, int iy, int iz) const;

  /// Trilinear interpolation, clamped to the grid bounds.
  double sample(const Vec3& x) const;
  /// Trilinear interpolation of the lattice gradients.
  Vec3 sample_gradient(const Vec3& x) const;

 private:
  void locate(const Vec3& x, int cell[3], double frac[3]) const;

  int resolution_;
  Bounds bounds_;
  Vec3 spacing_;
  std::vector<double> values_;
};

struct MeshToSdfReport {
  std::size_t winding_probes = 0;
  std::size_t offending_probes = 0;
};

/// Signed distance grid of a watertight mesh over [-1,1]^3. Magnitudes are
/// exact unsigned distances; a grid point is inside where the generalized
/// winding number is >= 0.5. Throws Error("open-mesh") when more than 1% of
/// the winding-number probes are not within 0.1 of an integer.
SdfGrid mesh_to_sdf(const TriangleMesh& mesh, int resolution, MeshToSdfReport* report = nullptr);

}  // namespace octimls
