#pragma once

#include "octimls/kdtree.hpp"
#include "octimls/octree.hpp"

#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace octimls {

inline constexpr double kDefaultBeta = 1.5;
inline constexpr std::size_t kDefaultNeighbors = 10;
inline constexpr double kBandWeightEpsilon = 1e-12;

/// Oriented point with a Gaussian support radius. `host` is the index of the
/// finest scaffold octant the point belongs to.
struct MlsPoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  double radius = 1.0;
  std::uint32_t host = 0;
};

/// MLS points together with the octree scaffold that hosts them. Neighbor
/// queries only consider points whose host-octant center lies within 4h of
/// the query. A set without a scaffold has no such restriction.
class MlsPointSet {
 public:
  MlsPointSet() = default;

  /// Checks unit normals (re-normalized when within 1e-6), radii in (0, 1],
  /// host indices, and that each point is within beta*h*sqrt(3) of its host
  /// octant center.
  MlsPointSet(std::vector<MlsPoint> points, std::shared_ptr<const Octree> scaffold, double beta = kDefaultBeta);

  static MlsPointSet unscaffolded(std::vector<MlsPoint> points);

  std::span<const MlsPoint> points() const { return points_; }
  const MlsPoint& operator[](std::size_t i) const { return points_[i]; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  const std::shared_ptr<const Octree>& scaffold() const { return scaffold_; }
  /// 4h for a scaffolded set, +inf otherwise.
  double neighbor_cutoff() const;

 private:
  std::vector<MlsPoint> points_;
  std::shared_ptr<const Octree> scaffold_;
};

/// Spatial index answering the neighbor rule Omega(x): the k nearest MLS
/// points among those whose host-octant center is within the cutoff of x,
/// ordered by (distance, index).
class MlsNeighborIndex {
 public:
  explicit MlsNeighborIndex(const MlsPointSet& set);

  std::vector<Neighbor> query(const Vec3& x, std::size_t k, double cutoff,
                              std::optional<std::uint32_t> exclude = std::nullopt) const;

  /// Same rule, searching only the given candidate octants. The result equals
  /// query() whenever `octants` contains every octant within the cutoff.
  std::vector<Neighbor> query_octants(const Vec3& x, std::span<const std::uint32_t> octants, std::size_t k,
                                      double cutoff, std::optional<std::uint32_t> exclude = std::nullopt) const;

  /// Scaffold octants whose centers lie strictly within `radius` of x.
  std::vector<std::uint32_t> octants_within(const Vec3& x, double radius) const;

  const MlsPointSet& set() const { return *set_; }

 private:
  const MlsPointSet* set_;
  KdTree centers_;
  KdTree points_;
  std::vector<std::uint32_t> host_offsets_;
  std::vector<std::uint32_t> host_points_;
};

/// Neighbor rule as a free function (builds a temporary index).
std::vector<std::uint32_t> knn_mls(const Vec3& x, const MlsPointSet& set, std::size_t k, double cutoff);

/// Gaussian weight exp(-d^2/r^2). Throws Error("invalid-radius") for r <= 0.
double theta(double d, double r);

struct ImlsValue {
  double value = 0.0;
  bool in_band = false;
  double weight_sum = 0.0;
};

/// Weighted plane-distance average and weighted normal average over the
/// given neighbor indices. Weights are shifted by the smallest exponent
/// before exponentiation; weight_sum is the unshifted total.
struct KernelResult {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  double weight_sum = 0.0;
  bool in_band = false;
};
KernelResult imls_kernel(const Vec3& x, std::span<const MlsPoint> points, std::span<const Neighbor> neighbors,
                         double weight_epsilon = kBandWeightEpsilon);

struct ImlsOptions {
  std::size_t k = kDefaultNeighbors;
  double weight_epsilon = kBandWeightEpsilon;
  /// When false the host-octant cutoff is dropped (plain k nearest points).
  bool restrict_to_scaffold = true;
};

/// Implicit function F of an MLS point set and its weighted-normal gradient.
class ImlsFunction {
 public:
  /// Keeps its own shared copy of the point set.
  explicit ImlsFunction(MlsPointSet set, ImlsOptions options = {});
  explicit ImlsFunction(std::shared_ptr<const MlsPointSet> set, ImlsOptions options = {});

  ImlsValue eval(const Vec3& x) const;
  KernelResult eval_with_gradient(const Vec3& x) const;
  /// Unnormalized weighted normal average. Throws Error("outside-band").
  Vec3 gradient(const Vec3& x) const;
  std::vector<Neighbor> neighbors(const Vec3& x) const;

  const MlsPointSet& set() const { return *set_; }
  const MlsNeighborIndex& index() const { return *index_; }
  const ImlsOptions& options() const { return options_; }
  double cutoff() const;

 private:
  std::shared_ptr<const MlsPointSet> set_;
  ImlsOptions options_;
  std::unique_ptr<MlsNeighborIndex> index_;
};

ImlsValue eval_f(const Vec3& x, const ImlsFunction& f);
Vec3 eval_grad(const Vec3& x, const ImlsFunction& f);

}  // namespace octimls
