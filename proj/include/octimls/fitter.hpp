#pragma once

#include "octimls/losses.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace octimls {

struct FitConfig {
  int points_per_octant = 1;
  double beta = kDefaultBeta;
  double learning_rate = 1e-3;
  double lr_decay = 0.8;
  int lr_decay_every = 10;
  double lr_floor = 1e-4;
  int stage1_epochs = 30;
  int stage2_epochs = 30;
  /// Full-batch Adam steps per epoch. Neighbor sets are re-frozen before
  /// every step.
  int steps_per_epoch = 10;
  std::size_t neighbors = kDefaultNeighbors;
  LossWeights weights;
  std::uint64_t seed = 0;

  void validate() const;
  double lr_at(int epoch) const;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

/// Raw parameters, seven scalars per MLS point: u (3), v (3), rho.
/// Point index = octant * points_per_octant + slot.
struct FitState {
  int points_per_octant = 1;
  std::vector<double> raw;
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
  int epoch = 0;
  /// Decodes that had to reset a vanishing normal to +z.
  std::size_t normal_resets = 0;

  static constexpr std::size_t kStride = 7;
  std::size_t num_points() const { return raw.size() / kStride; }
};

/// u = 0, rho = 0, v = the SDF gradient at the octant center (or +z when the
/// grid is absent or flat there). For more than one point per octant u gets
/// a small seeded jitter so that the slots can separate.
FitState init_state(const Octree& octree, const SdfGrid* sdf, int points_per_octant, std::uint64_t seed = 0);

/// t = beta h tanh(u), p = c + t, n = v / |v|, r = 1.25 l_r + 0.75 l_r tanh(rho)
/// with l_r = h / sqrt(s).
MlsPointSet decode(FitState& state, std::shared_ptr<const Octree> octree, double beta = kDefaultBeta);

/// Pulls per-point partials back to the raw parameters and adds them to
/// `raw_grad` (which must already hold the weight-decay partials).
void raw_gradient(const FitState& state, const Octree& octree, double beta, const GradientTable& point_grad,
                  std::vector<double>& raw_grad);

/// One bias-corrected Adam update of every raw scalar.
void adam_step(FitState& state, std::span<const double> gradient, double lr, double beta1 = kAdamBeta1,
               double beta2 = kAdamBeta2, double eps = kAdamEpsilon);

struct EpochRecord {
  int epoch = 0;
  int stage = 1;
  double lr = 0.0;
  LossReport loss;
  /// Probes used in the epoch's last step and how many of them were out of band.
  std::size_t samples = 0;
  std::size_t out_of_band = 0;
};

/// `epoch total sdf grad rep proj rad wd lr stage`
std::string format_trace_line(const EpochRecord& record);

struct FitResult {
  MlsPointSet points;
  FitState state;
  std::vector<EpochRecord> trace;
  /// SDF term (value + gradient) over the whole sample set before the first
  /// and after the last update.
  double initial_sdf_loss = 0.0;
  double final_sdf_loss = 0.0;
  bool diverged = false;
};

/// Fits the MLS parameters of every finest octant of `scaffold` to the SDF
/// samples. Stage 1 uses the level-6 samples only, stage 2 all of them.
FitResult fit(std::shared_ptr<const Octree> scaffold, const SdfGrid& sdf, const FitConfig& cfg);
FitResult fit(std::shared_ptr<const Octree> scaffold, const SdfGrid& sdf, const SdfSampleSet& samples,
              const FitConfig& cfg);

/// Neighbor machinery specialised to a fixed scaffold: candidate octants are
/// precomputed once, so re-freezing per step is a bounded scan.
class ScaffoldNeighborCache {
 public:
  ScaffoldNeighborCache(std::shared_ptr<const Octree> scaffold, const SdfSampleSet& samples, double beta);

  SampleNeighbors sample_neighbors(const MlsPointSet& set, std::size_t k) const;
  PointNeighbors point_neighbors(const MlsPointSet& set, std::size_t k) const;

 private:
  std::shared_ptr<const Octree> scaffold_;
  std::vector<Vec3> sample_positions_;
  std::vector<std::uint32_t> sample_offsets_, sample_octants_;
  std::vector<double> sample_distances_;
  std::vector<std::uint32_t> host_offsets_, host_octants_;
  std::vector<double> host_distances_;
};

}  // namespace octimls
