#include "octimls/fitter.hpp"
#include "octimls/parallel.hpp"
#include "octimls/shapes.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace octimls;

namespace {

SdfGrid sphere_grid(int resolution = 128) {
  return SdfGrid::from_function(resolution, Bounds{}, [](const Vec3& x) { return analytic_sdf(Sphere{}, x); });
}

struct SmallProblem {
  SdfGrid sdf = sphere_grid();
  std::shared_ptr<const Octree> scaffold;
  SdfSampleSet samples;
};

// Depth-4 scaffold with a thinned sample set keeps a fit to well under a second.
const SmallProblem& small_problem() {
  static const SmallProblem problem = [] {
    SmallProblem p;
    p.scaffold = std::make_shared<const Octree>(build_gt_octree(p.sdf, 4));
    const auto all = generate_sdf_samples(p.sdf);
    for (std::size_t i = 0; i < all.size(); i += 37) p.samples.push_back(all[i]);
    return p;
  }();
  return problem;
}

FitConfig small_config() {
  FitConfig cfg;
  cfg.stage1_epochs = 3;
  cfg.stage2_epochs = 3;
  cfg.steps_per_epoch = 4;
  cfg.learning_rate = 1e-2;
  return cfg;
}

}  // namespace

TEST_CASE("decode maps raw values into the parameter ranges") {
  const auto octree = std::make_shared<const Octree>(build_gt_octree(sphere_grid(64), 5));
  auto state = init_state(*octree, nullptr, 1);
  const double h = octree->cell_size();
  const double lr = h;
  const auto set = decode(state, octree);
  for (std::size_t k = 0; k < set.size(); ++k) {
    CHECK(set[k].position == octree->center(k));
    CHECK(set[k].radius == doctest::Approx(1.25 * lr).epsilon(1e-15));
    CHECK(set[k].normal == Vec3::UnitZ());
  }

  for (int c = 0; c < 3; ++c) state.raw[c] = 50.0;
  const auto saturated = decode(state, octree);
  CHECK((saturated[0].position - octree->center(0) - Vec3::Constant(1.5 * h)).norm() < 1e-9);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 20.0);
  for (auto& v : state.raw) v = g(rng);
  state.raw[3] = state.raw[4] = state.raw[5] = 0.0;
  const auto random = decode(state, octree);
  CHECK(state.normal_resets == 1);
  CHECK(random[0].normal == Vec3::UnitZ());
  for (const auto& p : random.points()) {
    CHECK(p.radius >= 0.5 * lr);
    CHECK(p.radius <= 2.0 * lr);
  }

  auto with_slots = init_state(*octree, nullptr, 4, 3);
  CHECK(with_slots.num_points() == 4 * octree->num_finest());
  const auto four = decode(with_slots, octree);
  CHECK(four[0].radius == doctest::Approx(1.25 * h / 2.0));
  CHECK(four[0].position != four[1].position);
  CHECK(four[5].host == 1);

  FitState wrong = state;
  wrong.raw.resize(7);
  CHECK_THROWS_WITH_AS(decode(wrong, octree), doctest::Contains("match"), Error);
}

TEST_CASE("init_state takes normals from the sdf") {
  const auto sdf = sphere_grid(64);
  const auto octree = build_gt_octree(sdf, 4);
  const auto state = init_state(octree, &sdf, 1);
  for (std::size_t k = 0; k < octree.num_finest(); ++k) {
    const Vec3 v(state.raw[k * 7 + 3], state.raw[k * 7 + 4], state.raw[k * 7 + 5]);
    if (octree.center(k).norm() > 0.1) CHECK(v.normalized().dot(octree.center(k).normalized()) > 0.99);
  }
}

TEST_CASE("adam") {
  FitState s;
  s.raw = {1.0, -2.0, 3.0};
  s.m = s.v = std::vector<double>(3, 0.0);
  const std::vector<double> g{0.5, -3.0, 0.0};
  adam_step(s, g, 0.1);
  CHECK(s.raw[0] == doctest::Approx(0.9).epsilon(1e-7));
  CHECK(s.raw[1] == doctest::Approx(-1.9).epsilon(1e-7));
  CHECK(s.raw[2] == 3.0);

  FitState z;
  z.raw = {0.25, -1.5};
  z.m = z.v = std::vector<double>(2, 0.0);
  for (int i = 0; i < 10; ++i) adam_step(z, std::vector<double>(2, 0.0), 1e-3);
  CHECK(z.raw == std::vector<double>{0.25, -1.5});

  FitState x;
  x.raw = {1.0};
  x.m = x.v = {0.0};
  for (int i = 0; i < 100; ++i) adam_step(x, std::vector<double>{2.0 * x.raw[0]}, 0.1);
  CHECK(std::abs(x.raw[0]) < 0.05);

  CHECK_THROWS_AS(adam_step(x, std::vector<double>{1.0, 2.0}, 0.1), Error);
}

TEST_CASE("learning rate schedule") {
  FitConfig cfg;
  CHECK(cfg.lr_at(0) == 1e-3);
  CHECK(cfg.lr_at(9) == 1e-3);
  CHECK(cfg.lr_at(10) == doctest::Approx(8e-4));
  CHECK(cfg.lr_at(25) == doctest::Approx(6.4e-4));
  CHECK(cfg.lr_at(1000) == 1e-4);
  cfg.learning_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.points_per_octant = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("raw gradient is the chain rule through decode") {
  const auto octree = std::make_shared<const Octree>(build_gt_octree(sphere_grid(64), 4));
  auto state = init_state(*octree, nullptr, 2, 5);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (auto& v : state.raw) v = g(rng);

  // A linear functional of the decoded parameters with random coefficients.
  GradientTable coeff(state.num_points());
  for (auto& c : coeff) {
    c.position = Vec3(g(rng), g(rng), g(rng));
    c.normal = Vec3(g(rng), g(rng), g(rng));
    c.radius = g(rng);
  }
  auto objective = [&](FitState& s) {
    const auto set = decode(s, octree);
    double total = 0.0;
    for (std::size_t i = 0; i < set.size(); ++i)
      total += coeff[i].position.dot(set[i].position) + coeff[i].normal.dot(set[i].normal) +
               coeff[i].radius * set[i].radius;
    return total;
  };
  std::vector<double> analytic(state.raw.size(), 0.0);
  raw_gradient(state, *octree, kDefaultBeta, coeff, analytic);
  const double step = 1e-6;
  for (std::size_t i = 0; i < state.raw.size(); i += 5) {
    const double saved = state.raw[i];
    state.raw[i] = saved + step;
    const double up = objective(state);
    state.raw[i] = saved - step;
    const double down = objective(state);
    state.raw[i] = saved;
    const double numeric = (up - down) / (2 * step);
    CHECK(analytic[i] == doctest::Approx(numeric).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("neighbor cache agrees with the generic freeze") {
  const auto& p = small_problem();
  auto state = init_state(*p.scaffold, &p.sdf, 2, 11);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (std::size_t i = 0; i < state.num_points(); ++i)
    for (int c = 0; c < 3; ++c) state.raw[i * 7 + c] = g(rng);
  const auto set = std::make_shared<const MlsPointSet>(decode(state, p.scaffold));
  const ScaffoldNeighborCache cache(p.scaffold, p.samples, kDefaultBeta);
  const ImlsFunction f(set);

  const auto a = cache.sample_neighbors(*set, 10);
  const auto b = freeze_sample_neighbors(f, p.samples);
  CHECK(a.offsets == b.offsets);
  CHECK(a.indices == b.indices);
  CHECK(a.out_of_band == b.out_of_band);

  const auto c = cache.point_neighbors(*set, 10);
  const auto d = freeze_point_neighbors(f.index());
  CHECK(c.offsets == d.offsets);
  CHECK(c.indices == d.indices);
  CHECK(c.weights == d.weights);
}

TEST_CASE("trace line layout") {
  EpochRecord r;
  r.epoch = 3;
  r.stage = 2;
  r.lr = 0.5;
  r.loss.total = 1.25;
  CHECK(format_trace_line(r) == "3 1.25 0 0 0 0 0 0 0.5 2");
}

TEST_CASE("fit is deterministic across thread counts and reduces the loss") {
  const auto& p = small_problem();
  const auto cfg = small_config();
  set_num_threads(1);
  const auto one = fit(p.scaffold, p.sdf, p.samples, cfg);
  set_num_threads(4);
  const auto four = fit(p.scaffold, p.sdf, p.samples, cfg);
  set_num_threads(1);

  REQUIRE(one.trace.size() == 6);
  for (std::size_t e = 0; e < one.trace.size(); ++e)
    CHECK(format_trace_line(one.trace[e]) == format_trace_line(four.trace[e]));
  CHECK(one.state.raw == four.state.raw);
  CHECK_FALSE(one.diverged);
  CHECK(one.final_sdf_loss < one.initial_sdf_loss);
  CHECK(one.trace[0].stage == 1);
  CHECK(one.trace[5].stage == 2);
  CHECK(one.state.epoch == 6);
  CHECK(one.points.size() == p.scaffold->num_finest());
}

TEST_CASE("fit errors") {
  const auto& p = small_problem();
  auto cfg = small_config();
  CHECK_THROWS_AS(fit(nullptr, p.sdf, p.samples, cfg), Error);
  cfg.steps_per_epoch = 0;
  CHECK_THROWS_AS(fit(p.scaffold, p.sdf, p.samples, cfg), Error);
}
