#include "octimls/recon.hpp"

#include "octimls/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace octimls {

MlsPointSet reconstruct(const OrientedPointCloud& cloud, const ReconOptions& options) {
  if (cloud.size() == 0) throw Error("empty-input", "point cloud is empty");
  if (!cloud.has_normals()) throw Error("missing-normals", "classical reconstruction needs oriented points");
  cloud.validate();
  if (options.k < 1) throw Error("invalid-config", "k must be >= 1");
  if (!(options.min_radius > 0.0 && options.min_radius <= options.max_radius && options.max_radius <= 1.0))
    throw Error("invalid-config", "radius clamp must satisfy 0 < min <= max <= 1");

  auto octree = std::make_shared<const Octree>(build_octree(cloud, options.depth));
  const KdTree tree(cloud.positions);
  const std::size_t n = cloud.size();
  const std::size_t k = std::min(options.k, n - 1);

  std::vector<MlsPoint> points(n);
  parallel_for(n, [&](std::size_t i) {
    auto& p = points[i];
    p.position = cloud.positions[i].cwiseMax(Vec3::Constant(-1.0)).cwiseMin(Vec3::Constant(1.0));
    p.normal = cloud.normals[i].normalized();
    p.host = static_cast<std::uint32_t>(*octree->finest_index(octant_key(p.position, options.depth)));
    double r = options.max_radius;
    if (k > 0) {
      const auto nbrs = tree.knn(cloud.positions[i], k + 1);
      // Drop the query point itself; duplicates at distance zero stay.
      std::size_t self = nbrs.size();
      for (std::size_t j = 0; j < nbrs.size(); ++j)
        if (nbrs[j].index == i) self = j;
      std::size_t seen = 0;
      for (std::size_t j = 0; j < nbrs.size(); ++j) {
        if (j == self) continue;
        if (++seen == k) r = std::sqrt(nbrs[j].distance_sq);
      }
    }
    p.radius = std::clamp(r, options.min_radius, options.max_radius);
  });
  return MlsPointSet(std::move(points), std::move(octree));
}

}  // namespace octimls
