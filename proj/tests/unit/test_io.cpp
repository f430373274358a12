#include "octimls/io.hpp"
#include "octimls/recon.hpp"
#include "octimls/shapes.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

using namespace octimls;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("octimls-test-" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string error_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("obj roundtrip") {
  TempDir dir;
  auto mesh = make_icosphere(0.5, 2);
  mesh.normals.clear();
  for (const auto& v : mesh.vertices) mesh.normals.push_back(v.normalized());
  write_obj(dir / "m.obj", mesh);
  const auto back = read_obj(dir / "m.obj");
  CHECK(back.vertices == mesh.vertices);
  CHECK(back.triangles == mesh.triangles);
  REQUIRE(back.normals.size() == mesh.normals.size());
  for (std::size_t i = 0; i < mesh.normals.size(); ++i) CHECK((back.normals[i] - mesh.normals[i]).norm() < 1e-15);

  write_file(dir / "quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  CHECK(read_obj(dir / "quad.obj").triangles.size() == 2);
  write_file(dir / "bad.obj", "v 0 0 0\nf 1 2 3\n");
  CHECK(error_code([&] { read_obj(dir / "bad.obj"); }) == "invalid-format");
  CHECK(error_code([&] { read_obj(dir / "missing.obj"); }) == "io");
}

TEST_CASE("points roundtrip") {
  TempDir dir;
  const auto cloud = sample_surface(make_icosphere(0.5, 3), 200, 0.01, 1);
  write_points(dir / "p.xyz", cloud);
  const auto back = read_points(dir / "p.xyz");
  CHECK(back.positions == cloud.positions);
  REQUIRE(back.normals.size() == cloud.normals.size());
  for (std::size_t i = 0; i < cloud.normals.size(); ++i) CHECK((back.normals[i] - cloud.normals[i]).norm() < 1e-15);

  write_file(dir / "plain.xyz", "# comment\n0 0 0\n1 2 3\n");
  const auto plain = read_points(dir / "plain.xyz");
  CHECK(plain.size() == 2);
  CHECK_FALSE(plain.has_normals());
  write_file(dir / "mixed.xyz", "0 0 0\n1 2 3 0 0 1\n");
  CHECK(error_code([&] { read_points(dir / "mixed.xyz"); }) == "invalid-format");
  write_file(dir / "text.xyz", "0 zero 0\n");
  CHECK(error_code([&] { read_points(dir / "text.xyz"); }) == "invalid-format");
}

TEST_CASE("mls roundtrip keeps the scaffold") {
  TempDir dir;
  const auto cloud = sample_surface(make_icosphere(0.5, 3), 500, 0.0, 2);
  const auto set = reconstruct(cloud, {10, 5});
  write_mls(dir / "s.mls", set);
  const auto back = read_mls(dir / "s.mls");
  REQUIRE(back.size() == set.size());
  REQUIRE(back.scaffold());
  CHECK(back.scaffold()->depth() == 5);
  CHECK(back.scaffold()->keys(5) == set.scaffold()->keys(5));
  for (std::size_t i = 0; i < set.size(); ++i) {
    CHECK(back[i].position == set[i].position);
    CHECK((back[i].normal - set[i].normal).norm() < 1e-15);
    CHECK(back[i].radius == set[i].radius);
    CHECK(back[i].host == set[i].host);
  }
  // The same file read as plain points.
  CHECK(read_points(dir / "s.mls").has_radii());

  write_points(dir / "plain.mls", [&] {
    auto c = cloud;
    c.radii.assign(c.size(), 0.05);
    return c;
  }());
  const auto rebuilt = read_mls(dir / "plain.mls", 4);
  CHECK(rebuilt.scaffold()->depth() == 4);
  CHECK(rebuilt[0].radius == 0.05);
}

TEST_CASE("sdf roundtrip") {
  TempDir dir;
  const auto grid = SdfGrid::from_function(16, Bounds{}, [](const Vec3& x) { return analytic_sdf(Sphere{}, x); });
  write_sdf(dir / "g.sdf", grid);
  const auto back = read_sdf(dir / "g.sdf");
  CHECK(back.resolution() == 16);
  for (std::size_t i = 0; i < grid.values().size(); ++i)
    CHECK(back.values()[i] == static_cast<double>(static_cast<float>(grid.values()[i])));

  write_file(dir / "junk.sdf", "IMLX");
  CHECK(error_code([&] { read_sdf(dir / "junk.sdf"); }) == "invalid-format");
  std::ofstream(dir / "short.sdf", std::ios::binary).write("IMLS\1\0\0\0\20\0\0\0", 12);
  CHECK(error_code([&] { read_sdf(dir / "short.sdf"); }) == "invalid-format");
}

TEST_CASE("band dump layout") {
  TempDir dir;
  write_band_dump(dir / "b.bin", 8, {BandRecord{5, {1, 2, 3, 4, 5, 6, 7, 8}}});
  CHECK(fs::file_size(dir / "b.bin") == 4 + 4 + 4 + 4 + 32);
}

TEST_CASE("classical reconstruction radii") {
  OrientedPointCloud two;
  two.positions = {Vec3(0, 0, 0), Vec3(0.3, 0, 0)};
  two.normals = {Vec3::UnitZ(), Vec3::UnitZ()};
  const auto set = reconstruct(two);
  CHECK(set[0].radius == doctest::Approx(0.3));
  CHECK(set[1].radius == doctest::Approx(0.3));
  CHECK(set.scaffold()->center(set[0].host).isApprox(
      Octree::octant_center(6, 32, 32, 32)));

  two.positions[1] = Vec3::Zero();
  CHECK(reconstruct(two)[0].radius == 1e-4);

  OrientedPointCloud bare;
  bare.positions = {Vec3::Zero()};
  CHECK(error_code([&] { reconstruct(bare); }) == "missing-normals");
  CHECK(error_code([&] { reconstruct(OrientedPointCloud{}); }) == "empty-input");
}
