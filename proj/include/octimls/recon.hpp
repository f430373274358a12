#pragma once

#include "octimls/imls.hpp"

namespace octimls {

struct ReconOptions {
  std::size_t k = kDefaultNeighbors;
  int depth = 6;
  double min_radius = 1e-4;
  double max_radius = 0.5;
};

/// Classical IMLS: every oriented input point becomes an MLS point hosted by
/// the finest octant of an octree built from the cloud. Its radius is the
/// distance to its k-th nearest other input point (k clamped to n - 1),
/// clamped to [min_radius, max_radius]. Throws Error("missing-normals").
MlsPointSet reconstruct(const OrientedPointCloud& cloud, const ReconOptions& options = {});

}  // namespace octimls
