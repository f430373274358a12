#pragma once

#include "octimls/imls.hpp"

#include <span>
#include <string>
#include <vector>

namespace octimls {

struct LossWeights {
  double octree = 0.1;
  double sdf_level6 = 200.0;
  double sdf_level7 = 800.0;
  double gradient = 0.05;
  double repulsion = 0.05;
  double projection = 10.0;
  double radius = 10.0;
  double weight_decay = 5e-5;

  double sdf_for_level(int level) const { return level >= 7 ? sdf_level7 : sdf_level6; }
  void validate() const;
};

/// Euclidean partials with respect to one MLS point's position, normal and
/// radius. The normal is treated as an unconstrained 3-vector unless stated
/// otherwise.
struct PointGradient {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  double radius = 0.0;
};
using GradientTable = std::vector<PointGradient>;

/// Frozen neighbor sets of the SDF probes (CSR). An empty row marks a sample
/// that was outside the narrow band when frozen.
struct SampleNeighbors {
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::size_t out_of_band = 0;

  std::size_t size() const { return offsets.size() - 1; }
  std::span<const std::uint32_t> row(std::size_t s) const {
    return {indices.data() + offsets[s], indices.data() + offsets[s + 1]};
  }
};

/// Frozen MLS-to-MLS neighbor sets with their bilateral weights w_ij.
struct PointNeighbors {
  std::vector<std::uint32_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;

  std::size_t size() const { return offsets.size() - 1; }
};

/// w_ij = exp(-|p_i - p_j|^2 / r_j^2 - (1 - <n_i, n_j>)). Not symmetric.
double bilateral_weight(const MlsPoint& i, const MlsPoint& j);

SampleNeighbors freeze_sample_neighbors(const ImlsFunction& f, const SdfSampleSet& samples);
/// Omega(p_i) excluding p_i itself, with w_ij evaluated at the current state.
PointNeighbors freeze_point_neighbors(const MlsNeighborIndex& index, std::size_t k = kDefaultNeighbors);

struct SdfLossTerms {
  double value_term = 0.0;     // sum lambda_s (F - F_o)^2
  double gradient_term = 0.0;  // sum lambda_g |1 - grad F . grad F_o|
  std::size_t used = 0;
  std::size_t skipped = 0;

  double total() const { return value_term + gradient_term; }
};

// Term evaluators over frozen neighbor sets. When `grad` is non-null the
// analytic partials are added into it (it must hold one entry per point).
SdfLossTerms sdf_loss(std::span<const MlsPoint> points, const SdfSampleSet& samples,
                      const SampleNeighbors& neighbors, const LossWeights& w, GradientTable* grad = nullptr);
double repulsion_loss(std::span<const MlsPoint> points, const PointNeighbors& neighbors, const LossWeights& w,
                      GradientTable* grad = nullptr);
double projection_loss(std::span<const MlsPoint> points, const PointNeighbors& neighbors, const LossWeights& w,
                       GradientTable* grad = nullptr);
double radius_loss(std::span<const MlsPoint> points, const PointNeighbors& neighbors, const LossWeights& w,
                   GradientTable* grad = nullptr);

// Convenience forms that freeze neighbor sets at the given state first.
SdfLossTerms sdf_loss(const MlsPointSet& mls, const SdfSampleSet& samples, const LossWeights& w,
                      GradientTable* grad = nullptr);
double repulsion_loss(const MlsPointSet& mls, const LossWeights& w, GradientTable* grad = nullptr);
double projection_loss(const MlsPointSet& mls, const LossWeights& w, GradientTable* grad = nullptr);
double radius_loss(const MlsPointSet& mls, const LossWeights& w, GradientTable* grad = nullptr);

/// lambda_o * sum over levels >= 3 of the mean sigmoid cross-entropy.
/// Throws Error("shape-mismatch") when logits and labels differ in length.
double octree_structure_loss(std::span<const OccupancyPrediction> predictions, const LossWeights& w);

struct LossReport {
  double octree = 0.0;
  double sdf = 0.0;
  double gradient = 0.0;
  double repulsion = 0.0;
  double projection = 0.0;
  double radius = 0.0;
  double weight_decay = 0.0;
  double total = 0.0;
  std::size_t samples_used = 0;
  std::size_t samples_skipped = 0;

  /// Per-point partials; normal partials are projected onto the tangent
  /// space of the unit sphere at n_i.
  GradientTable point_gradients;
  /// 2 * lambda_w * raw, the weight-decay partials.
  std::vector<double> raw_gradients;

  double sdf_total() const { return sdf + gradient; }
  /// Flat "key=value" block, one pair per line.
  std::string to_text() const;
};

LossReport total_loss(std::span<const MlsPoint> points, const SdfSampleSet& samples,
                      const SampleNeighbors& sample_neighbors, const PointNeighbors& point_neighbors,
                      std::span<const OccupancyPrediction> predictions, std::span<const double> raw_params,
                      const LossWeights& w);

LossReport total_loss(const MlsPointSet& mls, const SdfSampleSet& samples,
                      std::span<const OccupancyPrediction> predictions, std::span<const double> raw_params,
                      const LossWeights& w);

}  // namespace octimls
