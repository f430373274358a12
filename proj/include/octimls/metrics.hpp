#pragma once

#include "octimls/mesh.hpp"

#include <cstdint>
#include <span>
#include <string>

namespace octimls {

/// (1/2N_x) sum_x |x - nn_Y(x)| + (1/2N_y) sum_y |y - nn_X(y)|, unscaled.
/// Throws Error("empty-input") when either set is empty.
double chamfer_l1(std::span<const Vec3> x, std::span<const Vec3> y);

/// Mean |n(x) . n(nn(x))| over both directions, in [0, 1]. Nearest-neighbour
/// ties resolve to the lowest index.
double normal_consistency(std::span<const Vec3> x, std::span<const Vec3> x_normals, std::span<const Vec3> y,
                          std::span<const Vec3> y_normals);

struct FScore {
  double f = 0.0;
  double precision = 0.0;  // fraction of y within tau of x
  double recall = 0.0;     // fraction of x within tau of y
};

/// `x` holds ground-truth samples, `y` predicted samples.
FScore fscore(std::span<const Vec3> x, std::span<const Vec3> y, double tau = 0.1);

/// Monte-Carlo volumetric IoU over the union of the two bounding boxes,
/// inside tests by generalized winding number. Throws Error("open-mesh")
/// unless both meshes are closed manifolds.
double iou(const TriangleMesh& a, const TriangleMesh& b, std::size_t samples = 100000, std::uint64_t seed = 0);

struct MetricOptions {
  std::size_t surface_samples = 100000;
  std::size_t volume_samples = 100000;
  double tau = 0.1;
  std::uint64_t seed = 0;
  /// Skip IoU (for open meshes).
  bool volume = true;
};

inline constexpr double kChamferScale = 10.0;

struct MetricReport {
  double cd1 = 0.0;      // scaled by kChamferScale
  double cd1_raw = 0.0;
  double nc = 0.0;
  double iou = 0.0;
  double fscore = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double tau = 0.1;
  std::size_t surface_samples = 0;
  std::size_t volume_samples = 0;
  std::uint64_t seed = 0;

  /// "key=value" lines.
  std::string to_text() const;
  /// Single line of space-separated key=value pairs.
  std::string to_record() const;
};

/// Samples both surfaces and computes every metric. Throws
/// Error("empty-prediction") for an empty predicted mesh.
MetricReport evaluate(const TriangleMesh& predicted, const TriangleMesh& ground_truth, const MetricOptions& options = {});

}  // namespace octimls
