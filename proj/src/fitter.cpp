#include "octimls/fitter.hpp"

#include "octimls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace octimls {

void FitConfig::validate() const {
  if (points_per_octant < 1) throw Error("invalid-config", "points per octant must be >= 1");
  if (!(beta > 0.0)) throw Error("invalid-config", "beta must be positive");
  if (!(learning_rate > 0.0)) throw Error("invalid-config", "learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw Error("invalid-config", "lr decay must lie in (0, 1]");
  if (lr_decay_every < 1) throw Error("invalid-config", "lr decay interval must be >= 1");
  if (stage1_epochs < 0 || stage2_epochs < 0) throw Error("invalid-config", "epoch counts must be >= 0");
  if (steps_per_epoch < 1) throw Error("invalid-config", "steps per epoch must be >= 1");
  if (neighbors < 1) throw Error("invalid-config", "neighbor count must be >= 1");
  weights.validate();
}

double FitConfig::lr_at(int epoch) const {
  const double decayed = learning_rate * std::pow(lr_decay, epoch / lr_decay_every);
  return std::min(learning_rate, std::max(lr_floor, decayed));
}

namespace {

double base_radius(const Octree& octree, int s) { return octree.cell_size() / std::sqrt(static_cast<double>(s)); }

double decode_radius(double rho, double lr) { return std::min(1.0, 1.25 * lr + 0.75 * lr * std::tanh(rho)); }

}  // namespace

FitState init_state(const Octree& octree, const SdfGrid* sdf, int points_per_octant, std::uint64_t seed) {
  if (points_per_octant < 1) throw Error("invalid-config", "points per octant must be >= 1");
  FitState state;
  state.points_per_octant = points_per_octant;
  const std::size_t n = octree.num_finest() * static_cast<std::size_t>(points_per_octant);
  state.raw.assign(n * FitState::kStride, 0.0);
  state.m.assign(state.raw.size(), 0.0);
  state.v.assign(state.raw.size(), 0.0);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  for (std::size_t k = 0; k < octree.num_finest(); ++k) {
    Vec3 normal = Vec3::UnitZ();
    if (sdf) {
      const Vec3 g = sdf->sample_gradient(octree.center(k));
      if (g.norm() >= 1e-12) normal = g.normalized();
    }
    for (int l = 0; l < points_per_octant; ++l) {
      double* raw = &state.raw[(k * points_per_octant + l) * FitState::kStride];
      if (points_per_octant > 1)
        for (int c = 0; c < 3; ++c) raw[c] = jitter(rng);
      for (int c = 0; c < 3; ++c) raw[3 + c] = normal[c];
    }
  }
  return state;
}

MlsPointSet decode(FitState& state, std::shared_ptr<const Octree> octree, double beta) {
  if (!octree) throw Error("invalid-config", "decode needs a scaffold");
  const int s = state.points_per_octant;
  if (state.num_points() != octree->num_finest() * static_cast<std::size_t>(s) ||
      state.raw.size() % FitState::kStride != 0)
    throw Error("shape-mismatch", "fit state does not match the scaffold");
  const double h = octree->cell_size();
  const double lr = base_radius(*octree, s);
  std::vector<MlsPoint> points(state.num_points());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double* raw = &state.raw[i * FitState::kStride];
    auto& p = points[i];
    p.host = static_cast<std::uint32_t>(i / static_cast<std::size_t>(s));
    const Vec3 offset(std::tanh(raw[0]), std::tanh(raw[1]), std::tanh(raw[2]));
    p.position = octree->center(p.host) + beta * h * offset;
    const Vec3 v(raw[3], raw[4], raw[5]);
    const double len = v.norm();
    if (len < 1e-12 || !std::isfinite(len)) {
      p.normal = Vec3::UnitZ();
      ++state.normal_resets;
    } else {
      p.normal = v / len;
    }
    p.radius = decode_radius(raw[6], lr);
  }
  return MlsPointSet(std::move(points), std::move(octree), beta);
}

void raw_gradient(const FitState& state, const Octree& octree, double beta, const GradientTable& point_grad,
                  std::vector<double>& raw_grad) {
  if (point_grad.size() != state.num_points() || raw_grad.size() != state.raw.size())
    throw Error("shape-mismatch", "gradient sizes do not match the fit state");
  const double h = octree.cell_size();
  const double lr = base_radius(octree, state.points_per_octant);
  for (std::size_t i = 0; i < point_grad.size(); ++i) {
    const double* raw = &state.raw[i * FitState::kStride];
    double* out = &raw_grad[i * FitState::kStride];
    const auto& g = point_grad[i];
    for (int c = 0; c < 3; ++c) {
      const double t = std::tanh(raw[c]);
      out[c] += g.position[c] * beta * h * (1.0 - t * t);
    }
    const Vec3 v(raw[3], raw[4], raw[5]);
    const double len = v.norm();
    if (len >= 1e-12) {
      const Vec3 n = v / len;
      const Vec3 gv = (g.normal - n * n.dot(g.normal)) / len;
      for (int c = 0; c < 3; ++c) out[3 + c] += gv[c];
    }
    const double t = std::tanh(raw[6]);
    if (1.25 * lr + 0.75 * lr * t < 1.0) out[6] += g.radius * 0.75 * lr * (1.0 - t * t);
  }
}

void adam_step(FitState& state, std::span<const double> gradient, double lr, double beta1, double beta2,
               double eps) {
  if (gradient.size() != state.raw.size()) throw Error("shape-mismatch", "gradient size differs from state");
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    const double g = gradient[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    state.raw[i] -= lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + eps);
  }
}

std::string format_trace_line(const EpochRecord& r) {
  const auto& l = r.loss;
  std::string line = std::to_string(r.epoch);
  for (double v : {l.total, l.sdf, l.gradient, l.repulsion, l.projection, l.radius, l.weight_decay, r.lr})
    line += ' ' + format_number(v);
  line += ' ' + std::to_string(r.stage);
  return line;
}

ScaffoldNeighborCache::ScaffoldNeighborCache(std::shared_ptr<const Octree> scaffold, const SdfSampleSet& samples,
                                             double beta)
    : scaffold_(std::move(scaffold)) {
  if (!scaffold_) throw Error("invalid-config", "neighbor cache needs a scaffold");
  const KdTree centers(scaffold_->centers());
  const double h = scaffold_->cell_size();
  const double cutoff = 4.0 * h;

  // Candidate octants of each query, ordered by (center distance, index).
  auto build = [&](const std::vector<Vec3>& queries, double radius, std::vector<std::uint32_t>& offsets,
                   std::vector<std::uint32_t>& octants, std::vector<double>& distances) {
    std::vector<std::vector<Neighbor>> rows(queries.size());
    parallel_for(queries.size(), [&](std::size_t i) {
      for (std::uint32_t o : centers.radius(queries[i], radius * radius))
        rows[i].push_back({(scaffold_->center(o) - queries[i]).squaredNorm(), o});
      std::sort(rows[i].begin(), rows[i].end());
    });
    offsets.assign(1, 0);
    for (const auto& row : rows) {
      for (const auto& n : row) {
        octants.push_back(n.index);
        distances.push_back(std::sqrt(n.distance_sq));
      }
      offsets.push_back(static_cast<std::uint32_t>(octants.size()));
    }
  };

  sample_positions_.reserve(samples.size());
  for (const auto& s : samples) sample_positions_.push_back(s.position);
  build(sample_positions_, cutoff, sample_offsets_, sample_octants_, sample_distances_);
  // A point strays at most beta*h*sqrt(3) from its host center.
  build(scaffold_->centers(), cutoff + beta * h * std::sqrt(3.0) * (1.0 + 1e-9), host_offsets_, host_octants_,
        host_distances_);
}

namespace {

// Largest distance of any point from its host octant center.
double max_displacement(const MlsPointSet& set) {
  double m = 0.0;
  for (const auto& p : set.points()) m = std::max(m, (p.position - set.scaffold()->center(p.host)).norm());
  return m * (1.0 + 1e-12) + 1e-15;
}

std::size_t points_per_octant(const MlsPointSet& set) {
  const std::size_t octants = set.scaffold()->num_finest();
  if (octants == 0 || set.size() % octants != 0)
    throw Error("shape-mismatch", "neighbor cache expects the same number of points in every octant");
  return set.size() / octants;
}

// Length of the prefix of a distance-sorted candidate list that can hold one
// of the k nearest points, given that every point lies within `spread` of the
// distance listed for its octant and that only entries listed closer than
// `sure` are certain to pass the cutoff.
std::size_t useful_prefix(std::span<const double> dist, std::size_t per_octant, std::size_t k, double spread,
                          double sure, std::size_t skip_self) {
  std::size_t counted = 0;
  double bound = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] + spread >= sure) break;
    counted += per_octant - (i == 0 ? skip_self : 0);
    if (counted >= k) {
      bound = dist[i] + spread;
      break;
    }
  }
  std::size_t n = 0;
  while (n < dist.size() && dist[n] - spread <= bound) ++n;
  return n;
}

}  // namespace

SampleNeighbors ScaffoldNeighborCache::sample_neighbors(const MlsPointSet& set, std::size_t k) const {
  const MlsNeighborIndex index(set);
  const double cutoff = set.neighbor_cutoff();
  const double spread = max_displacement(set);
  const std::size_t per_octant = points_per_octant(set);
  std::vector<std::vector<std::uint32_t>> rows(sample_positions_.size());
  const auto plan = plan_chunks(rows.size(), 512, 256);
  parallel_for(plan.count, [&](std::size_t c) {
    for (std::size_t s = plan.begin(c); s < plan.end(c); ++s) {
      const std::size_t first = sample_offsets_[s];
      const std::span<const double> dist(sample_distances_.data() + first, sample_offsets_[s + 1] - first);
      const std::size_t n = useful_prefix(dist, per_octant, k, spread, std::numeric_limits<double>::infinity(), 0);
      const auto nbrs = index.query_octants(sample_positions_[s], {sample_octants_.data() + first, n}, k, cutoff);
      if (!imls_kernel(sample_positions_[s], set.points(), nbrs).in_band) continue;
      for (const auto& nb : nbrs) rows[s].push_back(nb.index);
    }
  });
  SampleNeighbors out;
  out.offsets.reserve(rows.size() + 1);
  for (const auto& row : rows) {
    if (row.empty()) ++out.out_of_band;
    out.indices.insert(out.indices.end(), row.begin(), row.end());
    out.offsets.push_back(static_cast<std::uint32_t>(out.indices.size()));
  }
  return out;
}

PointNeighbors ScaffoldNeighborCache::point_neighbors(const MlsPointSet& set, std::size_t k) const {
  const MlsNeighborIndex index(set);
  const double cutoff = set.neighbor_cutoff();
  const double spread = max_displacement(set);
  const std::size_t per_octant = points_per_octant(set);
  const auto pts = set.points();
  std::vector<std::vector<Neighbor>> rows(pts.size());
  const auto plan = plan_chunks(rows.size(), 512, 256);
  parallel_for(plan.count, [&](std::size_t c) {
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      const auto host = pts[i].host;
      const std::size_t first = host_offsets_[host];
      const std::span<const double> dist(host_distances_.data() + first, host_offsets_[host + 1] - first);
      // Distances are listed from the host center: the point itself adds
      // one spread, the neighbour another. The host octant comes first.
      const std::size_t n = useful_prefix(dist, per_octant, k, 2.0 * spread, cutoff - spread, 1);
      rows[i] = index.query_octants(pts[i].position, {host_octants_.data() + first, n}, k, cutoff,
                                    static_cast<std::uint32_t>(i));
    }
  });
  PointNeighbors out;
  out.offsets.reserve(pts.size() + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& n : rows[i]) {
      out.indices.push_back(n.index);
      out.weights.push_back(bilateral_weight(pts[i], pts[n.index]));
    }
    out.offsets.push_back(static_cast<std::uint32_t>(out.indices.size()));
  }
  return out;
}

FitResult fit(std::shared_ptr<const Octree> scaffold, const SdfGrid& sdf, const FitConfig& cfg) {
  return fit(std::move(scaffold), sdf, generate_sdf_samples(sdf), cfg);
}

FitResult fit(std::shared_ptr<const Octree> scaffold, const SdfGrid& sdf, const SdfSampleSet& samples,
              const FitConfig& cfg) {
  cfg.validate();
  if (!scaffold) throw Error("invalid-config", "fit needs a scaffold");
  if (scaffold->num_finest() == 0) throw Error("empty-input", "scaffold has no finest octants");

  SdfSampleSet coarse;
  for (const auto& s : samples)
    if (s.level <= 6) coarse.push_back(s);
  const ScaffoldNeighborCache full_cache(scaffold, samples, cfg.beta);
  const ScaffoldNeighborCache coarse_cache(scaffold, coarse, cfg.beta);

  FitResult result;
  result.state = init_state(*scaffold, &sdf, cfg.points_per_octant, cfg.seed);
  FitState& state = result.state;

  auto full_sdf_loss = [&] {
    const auto set = decode(state, scaffold, cfg.beta);
    return sdf_loss(set.points(), samples, full_cache.sample_neighbors(set, cfg.neighbors), cfg.weights).total();
  };
  result.initial_sdf_loss = full_sdf_loss();

  std::vector<double> last_good = state.raw;
  const int epochs = cfg.stage1_epochs + cfg.stage2_epochs;
  for (int epoch = 0; epoch < epochs && !result.diverged; ++epoch) {
    const int stage = epoch < cfg.stage1_epochs ? 1 : 2;
    const auto& stage_samples = stage == 1 ? coarse : samples;
    const auto& cache = stage == 1 ? coarse_cache : full_cache;
    EpochRecord record{epoch, stage, cfg.lr_at(epoch), {}};

    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      const auto set = decode(state, scaffold, cfg.beta);
      const auto sample_nbrs = cache.sample_neighbors(set, cfg.neighbors);
      record.samples = stage_samples.size();
      record.out_of_band = sample_nbrs.out_of_band;
      auto report = total_loss(set.points(), stage_samples, sample_nbrs, cache.point_neighbors(set, cfg.neighbors), {},
                               state.raw, cfg.weights);
      std::vector<double> grad = std::move(report.raw_gradients);
      report.raw_gradients.clear();
      raw_gradient(state, *scaffold, cfg.beta, report.point_gradients, grad);
      report.point_gradients.clear();
      const bool finite = std::isfinite(report.total) &&
                          std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); });
      record.loss = std::move(report);
      if (!finite) {
        result.diverged = true;
        state.raw = last_good;
        break;
      }
      last_good = state.raw;
      adam_step(state, grad, record.lr);
      if (!std::all_of(state.raw.begin(), state.raw.end(), [](double r) { return std::isfinite(r); })) {
        result.diverged = true;
        state.raw = last_good;
        break;
      }
      for (std::size_t i = 0; i < state.num_points(); ++i) {
        double* v = &state.raw[i * FitState::kStride + 3];
        const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
        if (len >= 1e-12 && std::isfinite(len))
          for (int c = 0; c < 3; ++c) v[c] /= len;
      }
    }
    state.epoch = epoch + 1;
    result.trace.push_back(std::move(record));
  }

  result.final_sdf_loss = full_sdf_loss();
  result.points = decode(state, scaffold, cfg.beta);
  return result;
}

}  // namespace octimls
