#include "octimls/metrics.hpp"
#include "octimls/shapes.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace octimls;

namespace {

std::vector<Vec3> random_cloud(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

std::vector<Vec3> random_normals(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  std::vector<Vec3> out(n);
  for (auto& v : out) v = Vec3(g(rng), g(rng), g(rng)).normalized();
  return out;
}

std::size_t brute_nearest(const std::vector<Vec3>& set, const Vec3& q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < set.size(); ++i)
    if ((set[i] - q).squaredNorm() < (set[best] - q).squaredNorm()) best = i;
  return best;
}

}  // namespace

TEST_CASE("chamfer distance") {
  const std::vector<Vec3> a{Vec3::Zero()}, b{Vec3(1, 0, 0)};
  CHECK(chamfer_l1(a, b) == 1.0);
  CHECK(chamfer_l1(b, b) == 0.0);
  CHECK_THROWS_WITH_AS(chamfer_l1(a, std::vector<Vec3>{}), doctest::Contains("empty"), Error);

  std::mt19937_64 rng(8);
  const auto x = random_cloud(rng, 1000), y = random_cloud(rng, 700);
  double sx = 0.0, sy = 0.0;
  for (const auto& p : x) sx += (p - y[brute_nearest(y, p)]).norm();
  for (const auto& p : y) sy += (p - x[brute_nearest(x, p)]).norm();
  const double brute = sx / (2.0 * x.size()) + sy / (2.0 * y.size());
  CHECK(std::abs(chamfer_l1(x, y) - brute) < 1e-12);
  CHECK(chamfer_l1(x, y) == doctest::Approx(chamfer_l1(y, x)).epsilon(1e-14));
}

TEST_CASE("normal consistency") {
  std::mt19937_64 rng(3);
  const auto x = random_cloud(rng, 400);
  const auto n = random_normals(rng, 400);
  std::vector<Vec3> flipped;
  for (const auto& v : n) flipped.push_back(-v);
  CHECK(normal_consistency(x, n, x, n) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(normal_consistency(x, n, x, flipped) == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<Vec3> ex(x.size(), Vec3::UnitX()), ez(x.size(), Vec3::UnitZ());
  CHECK(normal_consistency(x, ex, x, ez) == 0.0);

  const auto y = random_cloud(rng, 300);
  const auto m = random_normals(rng, 300);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) total += std::abs(n[i].dot(m[brute_nearest(y, x[i])])) / (2.0 * x.size());
  for (std::size_t i = 0; i < y.size(); ++i) total += std::abs(m[i].dot(n[brute_nearest(x, y[i])])) / (2.0 * y.size());
  CHECK(std::abs(normal_consistency(x, n, y, m) - total) < 1e-12);
}

TEST_CASE("f-score") {
  std::mt19937_64 rng(5);
  const auto x = random_cloud(rng, 200);
  const auto same = fscore(x, x);
  CHECK(same.f == 1.0);
  std::vector<Vec3> far;
  for (const auto& p : x) far.push_back(p + Vec3(5, 0, 0));
  CHECK(fscore(x, far).f == 0.0);

  // Every ground-truth point has a close prediction; half the predictions are far.
  const std::vector<Vec3> gt{Vec3::Zero(), Vec3(1, 0, 0)};
  const std::vector<Vec3> pred{Vec3(0.01, 0, 0), Vec3(1.01, 0, 0), Vec3(0, 3, 0), Vec3(1, 3, 0)};
  const auto half = fscore(gt, pred, 0.1);
  CHECK(half.precision == 0.5);
  CHECK(half.recall == 1.0);
  CHECK(half.f == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const auto swapped = fscore(pred, gt, 0.1);
  CHECK(swapped.f == half.f);
  CHECK(swapped.precision == half.recall);
}

TEST_CASE("volumetric iou") {
  const auto big = make_icosphere(0.5, 4);
  CHECK(iou(big, big, 5000, 1) == 1.0);
  const auto left = make_icosphere(0.2, 3, Vec3(-0.5, 0, 0));
  const auto right = make_icosphere(0.2, 3, Vec3(0.5, 0, 0));
  CHECK(iou(left, right, 5000, 1) == 0.0);
  CHECK(iou(big, make_icosphere(0.4, 4), 5000, 2) == doctest::Approx(0.512).epsilon(0.06));
  CHECK(iou(big, make_icosphere(0.4, 4), 5000, 2) == iou(big, make_icosphere(0.4, 4), 5000, 2));

  auto open = big;
  open.triangles.pop_back();
  CHECK_THROWS_WITH_AS(iou(open, big, 100, 0), doctest::Contains("open-mesh"), Error);
}

TEST_CASE("evaluate") {
  const auto gt = make_icosphere(0.5, 5);
  MetricOptions opts;
  opts.surface_samples = 5000;
  opts.volume_samples = 5000;
  const auto self = evaluate(gt, gt, opts);
  CHECK(self.cd1 == doctest::Approx(kChamferScale * self.cd1_raw));
  CHECK(self.cd1 < 0.2);
  CHECK(self.nc > 0.99);
  CHECK(self.iou == 1.0);
  CHECK(self.fscore == 1.0);
  CHECK(self.to_text().find("cd1=") != std::string::npos);
  CHECK(self.to_record().find('\n') == std::string::npos);
  CHECK_THROWS_WITH_AS(evaluate(TriangleMesh{}, gt, opts), doctest::Contains("empty"), Error);
}
