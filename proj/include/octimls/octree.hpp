#pragma once

#include "octimls/mesh.hpp"
#include "octimls/sdf_grid.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace octimls {

std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z);
std::array<std::uint32_t, 3> morton_decode(std::uint64_t key);

inline constexpr int kMaxOctreeDepth = 10;

/// Occupancy octree over [-1,1]^3. Level j has 2^j octants per axis; each
/// level stores the Morton keys of its non-empty octants in ascending order.
/// Finest octants are indexed by their position in that order.
class Octree {
 public:
  /// levels[j] holds the keys of level j for j = 0..depth. Keys are sorted
  /// and the parent-closure invariant is checked.
  Octree(int depth, std::vector<std::vector<std::uint64_t>> levels, std::size_t clamped_points = 0);

  int depth() const { return depth_; }
  /// Finest cell size h = 2 / 2^depth.
  double cell_size() const { return cell_size(depth_); }
  static double cell_size(int level) { return 2.0 / static_cast<double>(1u << level); }

  const std::vector<std::uint64_t>& keys(int level) const { return levels_.at(level); }
  bool occupied(int level, std::uint64_t key) const;

  std::size_t num_finest() const { return levels_[depth_].size(); }
  std::uint64_t finest_key(std::size_t k) const { return levels_[depth_][k]; }
  const Vec3& center(std::size_t k) const { return centers_[k]; }
  const std::vector<Vec3>& centers() const { return centers_; }
  std::optional<std::size_t> finest_index(std::uint64_t key) const;

  /// Points that fell outside [-1,1]^3 and were clamped during construction.
  std::size_t clamped_points() const { return clamped_; }

  static Vec3 octant_center(int level, std::uint32_t x, std::uint32_t y, std::uint32_t z);

  /// Debug text: one line per level, "level <j> <count>: key key ...".
  std::string dump() const;

 private:
  int depth_;
  std::vector<std::vector<std::uint64_t>> levels_;
  std::vector<Vec3> centers_;
  std::size_t clamped_;
};

/// Key of the level-`level` octant containing p (clamped into [-1,1]^3).
std::uint64_t octant_key(const Vec3& p, int level);

/// Octree whose finest level holds exactly `keys` (plus the forced-full
/// levels 1 and 2), with coarser levels completed as unions.
Octree octree_from_finest(int depth, std::vector<std::uint64_t> keys);

/// Finest octant non-empty iff at least one point falls in it; coarser levels
/// are unions of their children; levels 1 and 2 are forced full.
Octree build_octree(const std::vector<Vec3>& points, int depth);
Octree build_octree(const OrientedPointCloud& cloud, int depth);

/// Finest octant non-empty iff the SDF sampled at its 8 corners changes sign
/// or any corner has |sdf| < h*sqrt(3)/2.
Octree build_gt_octree(const SdfGrid& sdf, int depth);

struct SdfSample {
  Vec3 position;
  double value;
  Vec3 gradient;  // unit
  int level;      // 6 or 7
};

using SdfSampleSet = std::vector<SdfSample>;

inline constexpr double kLevel6Threshold = 1.0 / 8.0;
inline constexpr double kLevel7Threshold = 1.0 / 16.0;

/// Level-6 lattice (every R/64-th grid point) with |s| < 1/8, united with the
/// level-7 lattice (every R/128-th point) with |s| < 1/16. Points on both
/// lattices are reported once, at level 6. Requires R >= 128.
SdfSampleSet generate_sdf_samples(const SdfGrid& sdf);

/// Per-level occupancy logits with ground-truth labels (0 empty, 1 occupied).
struct OccupancyPrediction {
  int level = 0;
  std::vector<double> logits;
  std::vector<std::uint8_t> labels;
};

/// Labels of the octants a top-down decoder visits at `level`: the eight
/// children of every non-empty octant at level - 1, in Morton order.
std::vector<std::uint8_t> occupancy_labels(const Octree& octree, int level);

}  // namespace octimls
