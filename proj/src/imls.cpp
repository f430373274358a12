#include "octimls/imls.hpp"

#include <algorithm>
#include <cmath>

namespace octimls {

MlsPointSet::MlsPointSet(std::vector<MlsPoint> points, std::shared_ptr<const Octree> scaffold, double beta)
    : points_(std::move(points)), scaffold_(std::move(scaffold)) {
  const double reach = scaffold_ ? beta * scaffold_->cell_size() * std::sqrt(3.0) * (1.0 + 1e-9) : 0.0;
  for (auto& p : points_) {
    if (!p.position.allFinite() || !p.normal.allFinite() || !std::isfinite(p.radius))
      throw Error("invalid-mls", "non-finite MLS point parameter");
    const double n = p.normal.norm();
    if (std::abs(n - 1.0) > 1e-6) throw Error("invalid-mls", "MLS normal is not unit length");
    p.normal /= n;
    if (!(p.radius > 0.0 && p.radius <= 1.0)) throw Error("invalid-mls", "MLS radius must lie in (0, 1]");
    if (scaffold_) {
      if (p.host >= scaffold_->num_finest()) throw Error("invalid-mls", "host octant index out of range");
      if ((p.position - scaffold_->center(p.host)).norm() > reach)
        throw Error("invalid-mls", "MLS point too far from its host octant");
    }
  }
}

MlsPointSet MlsPointSet::unscaffolded(std::vector<MlsPoint> points) {
  for (auto& p : points) p.host = 0;
  return MlsPointSet(std::move(points), nullptr);
}

double MlsPointSet::neighbor_cutoff() const {
  return scaffold_ ? 4.0 * scaffold_->cell_size() : std::numeric_limits<double>::infinity();
}

MlsNeighborIndex::MlsNeighborIndex(const MlsPointSet& set) : set_(&set) {
  std::vector<Vec3> positions;
  positions.reserve(set.size());
  for (const auto& p : set.points()) positions.push_back(p.position);
  points_ = KdTree(std::move(positions));

  if (const auto& octree = set.scaffold()) {
    centers_ = KdTree(octree->centers());
    host_offsets_.assign(octree->num_finest() + 1, 0);
    for (const auto& p : set.points()) ++host_offsets_[p.host + 1];
    for (std::size_t i = 1; i < host_offsets_.size(); ++i) host_offsets_[i] += host_offsets_[i - 1];
    host_points_.resize(set.size());
    std::vector<std::uint32_t> fill(host_offsets_.begin(), host_offsets_.end() - 1);
    for (std::uint32_t i = 0; i < set.size(); ++i) host_points_[fill[set[i].host]++] = i;
  }
}

std::vector<std::uint32_t> MlsNeighborIndex::octants_within(const Vec3& x, double radius) const {
  if (!set_->scaffold()) return {};
  return centers_.radius(x, radius * radius);
}

std::vector<Neighbor> MlsNeighborIndex::query(const Vec3& x, std::size_t k, double cutoff,
                                              std::optional<std::uint32_t> exclude) const {
  if (k == 0 || set_->empty()) return {};
  if (!set_->scaffold() || std::isinf(cutoff)) {
    auto found = points_.knn(x, k + (exclude ? 1 : 0));
    if (exclude) std::erase_if(found, [&](const Neighbor& n) { return n.index == *exclude; });
    if (found.size() > k) found.resize(k);
    return found;
  }
  const auto octants = centers_.radius(x, cutoff * cutoff);
  return query_octants(x, octants, k, cutoff, exclude);
}

std::vector<Neighbor> MlsNeighborIndex::query_octants(const Vec3& x, std::span<const std::uint32_t> octants,
                                                      std::size_t k, double cutoff,
                                                      std::optional<std::uint32_t> exclude) const {
  std::vector<Neighbor> candidates;
  if (k == 0 || !set_->scaffold()) return candidates;
  const auto& centers = set_->scaffold()->centers();
  const double cutoff_sq = cutoff * cutoff;
  const auto pts = set_->points();
  for (std::uint32_t o : octants) {
    if (!((centers[o] - x).squaredNorm() < cutoff_sq)) continue;
    for (std::uint32_t slot = host_offsets_[o]; slot < host_offsets_[o + 1]; ++slot) {
      const std::uint32_t i = host_points_[slot];
      if (exclude && i == *exclude) continue;
      candidates.push_back({(pts[i].position - x).squaredNorm(), i});
    }
  }
  if (candidates.size() > k) {
    std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());
    candidates.resize(k);
  }
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

std::vector<std::uint32_t> knn_mls(const Vec3& x, const MlsPointSet& set, std::size_t k, double cutoff) {
  const MlsNeighborIndex index(set);
  std::vector<std::uint32_t> ids;
  for (const auto& n : index.query(x, k, cutoff)) ids.push_back(n.index);
  return ids;
}

double theta(double d, double r) {
  if (!(r > 0.0)) throw Error("invalid-radius", "weight radius must be positive");
  return std::exp(-(d * d) / (r * r));
}

KernelResult imls_kernel(const Vec3& x, std::span<const MlsPoint> points, std::span<const Neighbor> neighbors,
                         double weight_epsilon) {
  KernelResult out;
  if (neighbors.empty()) return out;
  double shift = std::numeric_limits<double>::infinity();
  for (const auto& n : neighbors) {
    const auto& p = points[n.index];
    shift = std::min(shift, n.distance_sq / (p.radius * p.radius));
  }
  double weights = 0.0, distance = 0.0;
  Vec3 normal = Vec3::Zero();
  for (const auto& n : neighbors) {
    const auto& p = points[n.index];
    const double w = std::exp(-(n.distance_sq / (p.radius * p.radius) - shift));
    weights += w;
    distance += w * (x - p.position).dot(p.normal);
    normal += w * p.normal;
  }
  out.value = distance / weights;
  out.gradient = normal / weights;
  out.weight_sum = std::exp(-shift) * weights;
  out.in_band = weight_epsilon > 0.0 ? out.weight_sum > weight_epsilon : true;
  return out;
}

ImlsFunction::ImlsFunction(MlsPointSet set, ImlsOptions options)
    : ImlsFunction(std::make_shared<const MlsPointSet>(std::move(set)), options) {}

ImlsFunction::ImlsFunction(std::shared_ptr<const MlsPointSet> set, ImlsOptions options)
    : set_(std::move(set)), options_(options) {
  if (!set_ || set_->empty()) throw Error("empty-input", "MLS point set is empty");
  index_ = std::make_unique<MlsNeighborIndex>(*set_);
}

double ImlsFunction::cutoff() const {
  return options_.restrict_to_scaffold ? set_->neighbor_cutoff() : std::numeric_limits<double>::infinity();
}

std::vector<Neighbor> ImlsFunction::neighbors(const Vec3& x) const { return index_->query(x, options_.k, cutoff()); }

KernelResult ImlsFunction::eval_with_gradient(const Vec3& x) const {
  const auto nbrs = neighbors(x);
  return imls_kernel(x, set_->points(), nbrs, options_.weight_epsilon);
}

ImlsValue ImlsFunction::eval(const Vec3& x) const {
  const auto k = eval_with_gradient(x);
  return {k.value, k.in_band, k.weight_sum};
}

Vec3 ImlsFunction::gradient(const Vec3& x) const {
  const auto k = eval_with_gradient(x);
  if (!k.in_band) throw Error("outside-band", "query point lies outside the IMLS narrow band");
  return k.gradient;
}

ImlsValue eval_f(const Vec3& x, const ImlsFunction& f) { return f.eval(x); }

Vec3 eval_grad(const Vec3& x, const ImlsFunction& f) { return f.gradient(x); }

}  // namespace octimls
