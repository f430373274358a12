#include "octimls/metrics.hpp"

#include "octimls/bvh.hpp"
#include "octimls/kdtree.hpp"
#include "octimls/parallel.hpp"

#include <cmath>
#include <random>
#include <utility>

namespace octimls {

namespace {

KdTree tree_of(std::span<const Vec3> pts) { return KdTree(std::vector<Vec3>(pts.begin(), pts.end())); }

void require_points(std::span<const Vec3> x, std::span<const Vec3> y) {
  if (x.empty() || y.empty()) throw Error("empty-input", "metric needs two non-empty point sets");
}

// Per-point nearest neighbour of every query in the tree.
std::vector<Neighbor> nearest_all(const KdTree& tree, std::span<const Vec3> queries) {
  std::vector<Neighbor> out(queries.size());
  parallel_for(queries.size(), [&](std::size_t i) { out[i] = tree.nearest(queries[i]); });
  return out;
}

double mean_distance(const KdTree& tree, std::span<const Vec3> queries) {
  const auto nn = nearest_all(tree, queries);
  std::vector<double> d(nn.size());
  for (std::size_t i = 0; i < nn.size(); ++i) d[i] = std::sqrt(nn[i].distance_sq);
  return pairwise_sum(d) / static_cast<double>(d.size());
}

double fraction_within(const KdTree& tree, std::span<const Vec3> queries, double tau) {
  const auto nn = nearest_all(tree, queries);
  std::size_t hits = 0;
  for (const auto& n : nn) hits += std::sqrt(n.distance_sq) <= tau;
  return static_cast<double>(hits) / static_cast<double>(queries.size());
}

}  // namespace

double chamfer_l1(std::span<const Vec3> x, std::span<const Vec3> y) {
  require_points(x, y);
  return 0.5 * mean_distance(tree_of(y), x) + 0.5 * mean_distance(tree_of(x), y);
}

double normal_consistency(std::span<const Vec3> x, std::span<const Vec3> x_normals, std::span<const Vec3> y,
                          std::span<const Vec3> y_normals) {
  require_points(x, y);
  if (x_normals.size() != x.size() || y_normals.size() != y.size())
    throw Error("shape-mismatch", "normal consistency needs one normal per point");
  auto one_way = [](std::span<const Vec3> q, std::span<const Vec3> qn, std::span<const Vec3> ref,
                    std::span<const Vec3> refn) {
    const auto nn = nearest_all(tree_of(ref), q);
    std::vector<double> dots(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) dots[i] = std::abs(qn[i].dot(refn[nn[i].index]));
    return pairwise_sum(dots) / static_cast<double>(dots.size());
  };
  return 0.5 * one_way(x, x_normals, y, y_normals) + 0.5 * one_way(y, y_normals, x, x_normals);
}

FScore fscore(std::span<const Vec3> x, std::span<const Vec3> y, double tau) {
  if (!(tau > 0.0)) throw Error("invalid-tau", "F-score threshold must be positive");
  require_points(x, y);
  FScore out;
  out.precision = fraction_within(tree_of(x), y, tau);
  out.recall = fraction_within(tree_of(y), x, tau);
  const double sum = out.precision + out.recall;
  out.f = sum > 0.0 ? 2.0 * out.precision * out.recall / sum : 0.0;
  return out;
}

double iou(const TriangleMesh& a, const TriangleMesh& b, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw Error("invalid-samples", "IoU needs at least one sample");
  for (const auto* m : {&a, &b})
    if (m->empty() || !is_closed_manifold(*m)) throw Error("open-mesh", "IoU needs watertight meshes");
  const Bounds ba = a.bounds(), bb = b.bounds();
  const Vec3 lo = ba.min.cwiseMin(bb.min), hi = ba.max.cwiseMax(bb.max);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts(samples);
  for (auto& p : pts) {
    const double x = u(rng), y = u(rng), z = u(rng);
    p = lo + Vec3(x, y, z).cwiseProduct(hi - lo);
  }
  const MeshBvh bvh_a(a), bvh_b(b);
  std::vector<std::uint8_t> in_a(samples), in_b(samples);
  parallel_for(samples, [&](std::size_t i) {
    in_a[i] = bvh_a.winding_number(pts[i]) >= 0.5;
    in_b[i] = bvh_b.winding_number(pts[i]) >= 0.5;
  });
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    inter += in_a[i] && in_b[i];
    uni += in_a[i] || in_b[i];
  }
  return uni ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

MetricReport evaluate(const TriangleMesh& predicted, const TriangleMesh& ground_truth, const MetricOptions& o) {
  if (predicted.empty()) throw Error("empty-prediction", "predicted mesh has no triangles");
  if (ground_truth.empty()) throw Error("empty-input", "ground-truth mesh has no triangles");
  if (o.surface_samples == 0) throw Error("invalid-samples", "surface sample count must be positive");
  MetricReport r;
  r.tau = o.tau;
  r.seed = o.seed;
  r.surface_samples = o.surface_samples;
  const auto gt = sample_surface(ground_truth, o.surface_samples, 0.0, o.seed);
  const auto pred = sample_surface(predicted, o.surface_samples, 0.0, o.seed + 1);
  r.cd1_raw = chamfer_l1(gt.positions, pred.positions);
  r.cd1 = kChamferScale * r.cd1_raw;
  r.nc = normal_consistency(gt.positions, gt.normals, pred.positions, pred.normals);
  const auto f = fscore(gt.positions, pred.positions, o.tau);
  r.fscore = f.f;
  r.precision = f.precision;
  r.recall = f.recall;
  if (o.volume) {
    r.volume_samples = o.volume_samples;
    r.iou = iou(predicted, ground_truth, o.volume_samples, o.seed + 2);
  }
  return r;
}

namespace {
std::vector<std::pair<std::string, std::string>> fields(const MetricReport& r) {
  return {{"cd1", format_number(r.cd1)},
          {"cd1_raw", format_number(r.cd1_raw)},
          {"nc", format_number(r.nc)},
          {"iou", format_number(r.iou)},
          {"fscore", format_number(r.fscore)},
          {"precision", format_number(r.precision)},
          {"recall", format_number(r.recall)},
          {"tau", format_number(r.tau)},
          {"surface_samples", std::to_string(r.surface_samples)},
          {"volume_samples", std::to_string(r.volume_samples)},
          {"seed", std::to_string(r.seed)}};
}
}  // namespace

std::string MetricReport::to_text() const {
  std::string out;
  for (const auto& [k, v] : fields(*this)) out += k + '=' + v + '\n';
  return out;
}

std::string MetricReport::to_record() const {
  std::string out;
  for (const auto& [k, v] : fields(*this)) out += (out.empty() ? "" : " ") + k + '=' + v;
  return out;
}

}  // namespace octimls
