#include "octimls/sdf_grid.hpp"

#include "octimls/bvh.hpp"
#include "octimls/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace octimls {

SdfGrid::SdfGrid(int resolution, const Bounds& bounds, std::vector<double> values)
    : resolution_(resolution), bounds_(bounds), values_(std::move(values)) {
  if (resolution_ < 2) throw Error("invalid-sdf", "resolution too small (need R >= 2)");
  const std::size_t r = static_cast<std::size_t>(resolution_);
  if (values_.size() != r * r * r) throw Error("invalid-sdf", "value count does not match R^3");
  const Vec3 extent = bounds_.extent();
  if (!(extent.minCoeff() > 0.0)) throw Error("invalid-sdf", "bounds must have positive extent");
  spacing_ = extent / static_cast<double>(resolution_ - 1);

  for (double v : values_)
    if (!std::isfinite(v)) throw Error("invalid-sdf", "non-finite SDF value");

  const double limit = 1.1 * std::sqrt(3.0) * spacing_.maxCoeff();
  for (int ix = 0; ix < resolution_; ++ix)
    for (int iy = 0; iy < resolution_; ++iy)
      for (int iz = 0; iz < resolution_; ++iz) {
        const double v = at(ix, iy, iz);
        if ((ix + 1 < resolution_ && std::abs(at(ix + 1, iy, iz) - v) > limit) ||
            (iy + 1 < resolution_ && std::abs(at(ix, iy + 1, iz) - v) > limit) ||
            (iz + 1 < resolution_ && std::abs(at(ix, iy, iz + 1) - v) > limit))
          throw Error("invalid-sdf", "adjacent samples violate the distance-field Lipschitz bound");
      }
}

SdfGrid SdfGrid::from_function(int resolution, const Bounds& bounds,
                               const std::function<double(const Vec3&)>& sdf) {
  if (resolution < 2) throw Error("invalid-sdf", "resolution too small (need R >= 2)");
  const std::size_t r = static_cast<std::size_t>(resolution);
  std::vector<double> values(r * r * r);
  const Vec3 spacing = bounds.extent() / static_cast<double>(resolution - 1);
  parallel_for(r, [&](std::size_t ix) {
    for (std::size_t iy = 0; iy < r; ++iy)
      for (std::size_t iz = 0; iz < r; ++iz) {
        const Vec3 p = bounds.min + Vec3(ix * spacing.x(), iy * spacing.y(), iz * spacing.z());
        values[(ix * r + iy) * r + iz] = sdf(p);
      }
  });
  return SdfGrid(resolution, bounds, std::move(values));
}

Vec3 SdfGrid::gradient_at(int ix, int iy, int iz) const {
  Vec3 g;
  const int idx[3] = {ix, iy, iz};
  for (int axis = 0; axis < 3; ++axis) {
    int lo[3] = {ix, iy, iz};
    int hi[3] = {ix, iy, iz};
    lo[axis] = std::max(0, idx[axis] - 1);
    hi[axis] = std::min(resolution_ - 1, idx[axis] + 1);
    const double span = (hi[axis] - lo[axis]) * spacing_[axis];
    g[axis] = (at(hi[0], hi[1], hi[2]) - at(lo[0], lo[1], lo[2])) / span;
  }
  return g;
}

void SdfGrid::locate(const Vec3& x, int cell[3], double frac[3]) const {
  for (int axis = 0; axis < 3; ++axis) {
    const double u = std::clamp((x[axis] - bounds_.min[axis]) / spacing_[axis], 0.0,
                                static_cast<double>(resolution_ - 1));
    int c = static_cast<int>(std::floor(u));
    c = std::min(c, resolution_ - 2);
    cell[axis] = c;
    frac[axis] = u - c;
  }
}

double SdfGrid::sample(const Vec3& x) const {
  int c[3];
  double f[3];
  locate(x, c, f);
  double result = 0.0;
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
    const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
    result += w * at(c[0] + dx, c[1] + dy, c[2] + dz);
  }
  return result;
}

Vec3 SdfGrid::sample_gradient(const Vec3& x) const {
  int c[3];
  double f[3];
  locate(x, c, f);
  Vec3 result = Vec3::Zero();
  for (int corner = 0; corner < 8; ++corner) {
    const int dx = corner & 1, dy = (corner >> 1) & 1, dz = (corner >> 2) & 1;
    const double w = (dx ? f[0] : 1.0 - f[0]) * (dy ? f[1] : 1.0 - f[1]) * (dz ? f[2] : 1.0 - f[2]);
    result += w * gradient_at(c[0] + dx, c[1] + dy, c[2] + dz);
  }
  return result;
}

SdfGrid mesh_to_sdf(const TriangleMesh& mesh, int resolution, MeshToSdfReport* report) {
  if (resolution < 2) throw Error("invalid-sdf", "resolution too small (need R >= 2)");
  if (mesh.empty()) throw Error("empty-input", "mesh has no triangles");
  const MeshBvh bvh(mesh);
  const Bounds bounds;  // [-1,1]^3
  const std::size_t r = static_cast<std::size_t>(resolution);
  const Vec3 spacing = bounds.extent() / static_cast<double>(resolution - 1);
  std::vector<double> values(r * r * r);
  std::vector<std::size_t> probes(r, 0), offending(r, 0);

  // Each x-slab is processed sequentially along z: the distance of the
  // previous sample bounds the closest-point search, and when that distance
  // exceeds the z step the open ball around the previous sample contains the
  // current one, so the sign carries over without a winding-number query.
  parallel_for(r, [&](std::size_t ix) {
    for (std::size_t iy = 0; iy < r; ++iy) {
      double prev_dist = 0.0;
      bool prev_inside = false;
      for (std::size_t iz = 0; iz < r; ++iz) {
        const Vec3 q = bounds.min + Vec3(ix * spacing.x(), iy * spacing.y(), iz * spacing.z());
        double bound = std::numeric_limits<double>::infinity();
        if (iz > 0) {
          const double b = (prev_dist + spacing.z()) * (1.0 + 1e-9) + 1e-12;
          bound = b * b;
        }
        auto hit = bvh.closest(q, bound);
        if (std::isinf(hit.distance_sq)) hit = bvh.closest(q);
        const double dist = std::sqrt(hit.distance_sq);

        bool inside;
        if (iz > 0 && prev_dist > spacing.z()) {
          inside = prev_inside;
        } else {
          const double w = bvh.winding_number(q);
          inside = w >= 0.5;
          if (dist > 1e-9) {
            ++probes[ix];
            if (std::abs(w - std::round(w)) > 0.1) ++offending[ix];
          }
        }
        values[(ix * r + iy) * r + iz] = inside ? -dist : dist;
        prev_dist = dist;
        prev_inside = inside;
      }
    }
  });

  std::size_t total_probes = 0, total_offending = 0;
  for (std::size_t i = 0; i < r; ++i) {
    total_probes += probes[i];
    total_offending += offending[i];
  }
  if (report) {
    report->winding_probes = total_probes;
    report->offending_probes = total_offending;
  }
  if (total_offending * 100 > total_probes)
    throw Error("open-mesh", std::to_string(total_offending) + " of " + std::to_string(total_probes) +
                                 " winding-number probes are fractional");
  return SdfGrid(resolution, bounds, std::move(values));
}

}  // namespace octimls
