#include "octimls/marching_cubes.hpp"
#include "octimls/mesher.hpp"
#include "octimls/shapes.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace octimls;

namespace {

Vec3 corner_position(int c) { return Vec3(c & 1, (c >> 1) & 1, (c >> 2) & 1); }

Vec3 edge_midpoint(int e) {
  return 0.5 * (corner_position(kCubeEdges[e].a) + corner_position(kCubeEdges[e].b));
}

double signed_volume(const TriangleMesh& m) {
  double v = 0.0;
  for (const auto& t : m.triangles)
    v += m.vertices[t[0]].dot(m.vertices[t[1]].cross(m.vertices[t[2]])) / 6.0;
  return v;
}

// Each directed edge once and its reverse once: closed and consistently wound.
bool closed_and_oriented(const std::vector<std::array<long, 3>>& tris) {
  std::map<std::pair<long, long>, int> directed;
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) ++directed[{t[i], t[(i + 1) % 3]}];
  for (const auto& [e, n] : directed) {
    if (n != 1) return false;
    auto it = directed.find({e.second, e.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

MlsPointSet sphere_set(double radius, std::size_t n, double r, int depth, bool flip = false) {
  const auto cloud = sample_surface(make_icosphere(radius, 5), n, 0.0, 4);
  auto octree = std::make_shared<const Octree>(build_octree(cloud, depth));
  std::vector<MlsPoint> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].position = cloud.positions[i];
    pts[i].normal = (flip ? -1.0 : 1.0) * cloud.positions[i].normalized();
    pts[i].radius = r;
    pts[i].host = static_cast<std::uint32_t>(*octree->finest_index(octant_key(cloud.positions[i], depth)));
  }
  return MlsPointSet(std::move(pts), octree);
}

}  // namespace

TEST_CASE("every cube case crosses exactly the sign-changing edges") {
  for (int mask = 0; mask < 256; ++mask) {
    std::array<double, 8> v;
    for (int c = 0; c < 8; ++c) v[c] = (mask >> c) & 1 ? 1.0 : -1.0;
    const auto tris = triangulate_cube(v);
    std::set<int> used;
    for (const auto& t : tris) used.insert(t.begin(), t.end());
    std::set<int> crossing;
    for (int e = 0; e < 12; ++e)
      if ((v[kCubeEdges[e].a] >= 0) != (v[kCubeEdges[e].b] >= 0)) crossing.insert(e);
    CHECK(used == crossing);
    if (mask == 0 || mask == 255) CHECK(tris.empty());
  }
  CHECK(cube_edge_index(0, 1) == 0);
  CHECK(cube_edge_index(7, 3) == 11);
}

TEST_CASE("single negative corner faces the positive side") {
  std::array<double, 8> v;
  v.fill(1.0);
  v[0] = -1.0;
  const auto tris = triangulate_cube(v);
  REQUIRE(tris.size() == 1);
  const Vec3 a = edge_midpoint(tris[0][0]), b = edge_midpoint(tris[0][1]), c = edge_midpoint(tris[0][2]);
  CHECK((b - a).cross(c - a).dot(Vec3(1, 1, 1)) > 0.0);
}

TEST_CASE("random grids give closed, outward surfaces") {
  const int n = 7;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> f(n * n * n);
    auto id = [&](int x, int y, int z) { return (x * n + y) * n + z; };
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        for (int z = 0; z < n; ++z) {
          const bool border = x == 0 || y == 0 || z == 0 || x == n - 1 || y == n - 1 || z == n - 1;
          double val = border ? 1.0 : u(rng);
          if (val == 0.0) val = 0.5;
          f[id(x, y, z)] = val;
        }
    std::vector<std::array<long, 3>> tris;
    TriangleMesh mesh;
    std::map<long, int> vertex_of;
    for (int x = 0; x + 1 < n; ++x)
      for (int y = 0; y + 1 < n; ++y)
        for (int z = 0; z + 1 < n; ++z) {
          std::array<double, 8> v;
          for (int c = 0; c < 8; ++c) v[c] = f[id(x + (c & 1), y + ((c >> 1) & 1), z + ((c >> 2) & 1))];
          for (const auto& t : triangulate_cube(v)) {
            std::array<long, 3> g;
            std::array<int, 3> local;
            for (int i = 0; i < 3; ++i) {
              const auto& e = kCubeEdges[t[i]];
              const int a = e.a, b = e.b;
              const long ca = id(x + (a & 1), y + ((a >> 1) & 1), z + ((a >> 2) & 1));
              const long cb = id(x + (b & 1), y + ((b >> 1) & 1), z + ((b >> 2) & 1));
              g[i] = ca * 3 + (t[i] / 4);
              auto [it, fresh] = vertex_of.try_emplace(g[i], static_cast<int>(mesh.vertices.size()));
              if (fresh) {
                const double s = v[a] / (v[a] - v[b]);
                const Vec3 pa(x + (a & 1), y + ((a >> 1) & 1), z + ((a >> 2) & 1));
                const Vec3 pb(x + (b & 1), y + ((b >> 1) & 1), z + ((b >> 2) & 1));
                mesh.vertices.push_back(pa + s * (pb - pa));
                (void)cb;
              }
              local[i] = it->second;
            }
            tris.push_back(g);
            mesh.triangles.push_back(local);
          }
        }
    CHECK(closed_and_oriented(tris));
    if (!mesh.triangles.empty()) CHECK(signed_volume(mesh) > 0.0);
  }
}

TEST_CASE("sphere mesh") {
  const auto set = sphere_set(0.5, 4096, 0.05, 6);
  MeshStats stats;
  const auto mesh = extract_mesh(set, {64, true}, &stats);
  const double cell = 2.0 / 64;
  CHECK(is_closed_manifold(mesh));
  CHECK(euler_characteristic(mesh) == 2);
  CHECK(stats.cells > 0);
  CHECK(stats.corners > 0);
  CHECK(mesh.normals.size() == mesh.vertices.size());
  const ImlsFunction f(set);
  double worst = 0.0;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& v = mesh.vertices[i];
    worst = std::max(worst, std::abs(v.norm() - 0.5));
    CHECK(mesh.normals[i].dot(v.normalized()) > 0.9);
    CHECK(std::abs(f.eval(v).value) < cell);
    int on_lattice = 0;
    for (int a = 0; a < 3; ++a) {
      const double g = (v[a] + 1.0) / cell;
      on_lattice += std::abs(g - std::round(g)) < 1e-9;
    }
    CHECK(on_lattice >= 2);
  }
  CHECK(worst < 2 * cell);
  CHECK(signed_volume(mesh) > 0.0);
}

TEST_CASE("flipped normals flip the orientation") {
  const auto out = extract_mesh(sphere_set(0.47, 2000, 0.08, 5), {32, false});
  const auto in = extract_mesh(sphere_set(0.47, 2000, 0.08, 5, true), {32, false});
  REQUIRE_FALSE(out.empty());
  auto sorted = [](std::vector<Vec3> v) {
    std::sort(v.begin(), v.end(), [](const Vec3& a, const Vec3& b) {
      return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
    return v;
  };
  CHECK(sorted(out.vertices) == sorted(in.vertices));
  CHECK(in.area() == doctest::Approx(out.area()).epsilon(1e-3));
  CHECK(signed_volume(in) == doctest::Approx(-signed_volume(out)).epsilon(1e-3));
}

TEST_CASE("empty band gives an empty mesh") {
  auto octree = std::make_shared<const Octree>(build_octree(std::vector<Vec3>{Vec3(0.51, 0.53, 0.57)}, 3));
  MlsPoint p;
  p.position = Vec3(0.51, 0.53, 0.57);
  p.radius = 1e-4;
  const MlsPointSet set({p}, octree);
  MeshStats stats;
  const auto mesh = extract_mesh(set, {32, true}, &stats);
  CHECK(mesh.empty());
  CHECK(mesh.vertices.empty());
  CHECK(stats.outside_corners == stats.corners);
}

TEST_CASE("band cells") {
  const auto octree = build_octree(std::vector<Vec3>{Vec3(0.01, 0.01, 0.01)}, 3);
  const auto cells = band_cells(octree, 16);
  // one octant spans 2 cells per axis, dilated by one octant: 6^3
  CHECK(cells.size() == 216);
  CHECK(std::is_sorted(cells.begin(), cells.end()));
  CHECK_THROWS_AS(band_cells(octree, 1), Error);
  CHECK_THROWS_AS(band_cells(octree, 2048), Error);
}

TEST_CASE("band dump records") {
  const auto set = sphere_set(0.5, 1000, 0.1, 4);
  std::vector<BandRecord> band;
  MeshStats stats;
  extract_mesh(set, {16, true}, &stats, &band);
  CHECK(band.size() == stats.cells);
  CHECK(std::is_sorted(band.begin(), band.end(), [](const auto& a, const auto& b) { return a.cell < b.cell; }));
}
