#include "octimls/imls.hpp"
#include "octimls/mesh.hpp"
#include "octimls/shapes.hpp"

#include "support/sphere_lattice.hpp"

#include <doctest.h>

#include <Eigen/Geometry>
#include <cmath>
#include <random>

using namespace octimls;

namespace {

MlsPoint make_point(const Vec3& p, const Vec3& n, double r) {
  MlsPoint m;
  m.position = p;
  m.normal = n;
  m.radius = r;
  return m;
}

std::vector<MlsPoint> unit_sphere_points(std::size_t n, double r, double twist) {
  std::vector<MlsPoint> pts;
  for (const auto& p : testing::fibonacci_sphere(n, 1.0, twist)) pts.push_back(make_point(p, p, r));
  return pts;
}

}  // namespace

TEST_CASE("theta") {
  CHECK(theta(0, 1) == 1.0);
  CHECK(theta(1, 1) == doctest::Approx(0.367879).epsilon(1e-6));
  CHECK(theta(2, 1) == doctest::Approx(0.0183156).epsilon(1e-6));
  CHECK_THROWS_WITH_AS(theta(1, 0), doctest::Contains("radius"), Error);
  CHECK_THROWS_AS(theta(1, -1), Error);
}

TEST_CASE("single point and symmetric pair") {
  const ImlsFunction one(MlsPointSet::unscaffolded({make_point(Vec3::Zero(), Vec3::UnitZ(), 1.0)}));
  const auto v = one.eval(Vec3(0, 0, 0.5));
  CHECK(v.value == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(v.in_band);
  CHECK((one.gradient(Vec3(0.3, -0.2, 0.5)) - Vec3::UnitZ()).norm() < 1e-15);

  const ImlsFunction pair(MlsPointSet::unscaffolded(
      {make_point(Vec3(-1, 0, 0), Vec3(-1, 0, 0), 1.0), make_point(Vec3(1, 0, 0), Vec3(1, 0, 0), 1.0)}));
  CHECK(pair.eval(Vec3::Zero()).value == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("out-of-band evaluation") {
  const ImlsFunction f(MlsPointSet::unscaffolded({make_point(Vec3::Zero(), Vec3::UnitZ(), 0.01)}));
  const auto far = f.eval(Vec3(0.9, 0, 0));
  CHECK_FALSE(far.in_band);
  CHECK(far.weight_sum < 1e-12);
  CHECK(std::isfinite(far.value));  // shifted weights keep the average finite
  CHECK_THROWS_WITH_AS(f.gradient(Vec3(0.9, 0, 0)), doctest::Contains("band"), Error);

  auto octree = std::make_shared<const Octree>(build_octree(std::vector<Vec3>{Vec3::Zero()}, 5));
  MlsPoint p = make_point(Vec3::Zero(), Vec3::UnitZ(), 0.5);
  p.host = 0;
  const ImlsFunction scaffolded(MlsPointSet({p}, octree));
  CHECK(scaffolded.neighbors(Vec3(0.8, 0.8, 0.8)).empty());
  CHECK_FALSE(scaffolded.eval(Vec3(0.8, 0.8, 0.8)).in_band);
  CHECK_THROWS_AS(ImlsFunction(MlsPointSet::unscaffolded({})), Error);
}

TEST_CASE("dense unit sphere approximates its distance field") {
  const auto pts = unit_sphere_points(4096, 0.1, 0.0);
  const ImlsFunction f(MlsPointSet::unscaffolded(pts));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    const Vec3 u = Vec3(g(rng), g(rng), g(rng)).normalized();
    const Vec3 x = 1.05 * u;
    const auto v = f.eval(x);
    CHECK(std::abs(v.value - 0.05) < 0.01);
    const Vec3 grad = f.gradient(x);
    CHECK(grad.normalized().dot(u) > std::cos(2.0 * M_PI / 180.0));
  }
}

TEST_CASE("gradient approximation follows finite differences") {
  const auto pts = unit_sphere_points(4096, 0.1, 0.5);
  const ImlsFunction f(MlsPointSet::unscaffolded(pts));
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-0.04, 0.04);
  int agree = 0;
  const double h = 1e-4;
  for (int i = 0; i < 100; ++i) {
    const Vec3 x = (1.0 + u(rng)) * Vec3(g(rng), g(rng), g(rng)).normalized();
    Vec3 fd;
    for (int a = 0; a < 3; ++a) {
      Vec3 e = Vec3::Zero();
      e[a] = h;
      fd[a] = (f.eval(x + e).value - f.eval(x - e).value) / (2 * h);
    }
    agree += fd.normalized().dot(f.gradient(x).normalized()) > std::cos(5.0 * M_PI / 180.0);
  }
  CHECK(agree >= 95);
}

TEST_CASE("equivariance and convexity") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::normal_distribution<double> g;
  std::vector<MlsPoint> pts;
  for (int i = 0; i < 60; ++i)
    pts.push_back(make_point(Vec3(u(rng), u(rng), u(rng)), Vec3(g(rng), g(rng), g(rng)).normalized(), 0.1 + 0.2 * (u(rng) + 0.5)));
  const ImlsFunction f(MlsPointSet::unscaffolded(pts));

  const Vec3 t(0.125, -0.25, 0.0625);  // dyadic, so p + t is exact
  const Eigen::Matrix3d R = Eigen::Quaterniond::UnitRandom().toRotationMatrix();
  auto moved = pts, rotated = pts, scaled = pts;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    moved[i].position += t;
    rotated[i].position = R * pts[i].position;
    rotated[i].normal = R * pts[i].normal;
    scaled[i].position *= 2.0;
    scaled[i].radius *= 2.0;
  }
  const ImlsFunction ft(MlsPointSet::unscaffolded(moved));
  const ImlsFunction fr(MlsPointSet::unscaffolded(rotated));
  const ImlsFunction fs(MlsPointSet::unscaffolded(scaled));
  for (int i = 0; i < 100; ++i) {
    const Vec3 x(u(rng), u(rng), u(rng));
    const auto v = f.eval(x);
    CHECK(std::abs(ft.eval(x + t).value - v.value) < 1e-12);
    CHECK(std::abs(fr.eval(R * x).value - v.value) < 1e-9);
    CHECK(std::abs(fs.eval(2.0 * x).value - 2.0 * v.value) < 1e-12);

    double lo = 1e9, hi = -1e9;
    for (const auto& n : f.neighbors(x)) {
      const double d = (x - pts[n.index].position).dot(pts[n.index].normal);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    CHECK(v.value >= lo - 1e-12);
    CHECK(v.value <= hi + 1e-12);
  }
}

TEST_CASE("isolated point dominates on its tangent plane") {
  auto pts = std::vector<MlsPoint>{make_point(Vec3::Zero(), Vec3::UnitZ(), 0.1),
                                   make_point(Vec3(0.8, 0, 0), Vec3::UnitX(), 0.05)};
  const ImlsFunction f(MlsPointSet::unscaffolded(pts));
  CHECK(std::abs(f.eval(Vec3(0.05, 0.03, 0)).value) < 1e-12);
}
