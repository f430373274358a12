#include "octimls/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>

namespace octimls {

void TriangleMesh::validate() const {
  const auto nv = static_cast<long>(vertices.size());
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw Error("invalid-mesh", "non-finite vertex coordinate");
  }
  for (const auto& t : triangles) {
    for (int i : t) {
      if (i < 0 || i >= nv) throw Error("invalid-mesh", "triangle index out of range");
    }
  }
  if (!normals.empty()) {
    if (normals.size() != vertices.size()) throw Error("invalid-mesh", "normal count differs from vertex count");
    for (const auto& n : normals) {
      if (std::abs(n.norm() - 1.0) > 1e-6) throw Error("invalid-mesh", "vertex normal is not unit length");
    }
  }
}

Bounds TriangleMesh::bounds() const {
  Bounds b;
  if (vertices.empty()) {
    b.min = b.max = Vec3::Zero();
    return b;
  }
  b.min = b.max = vertices.front();
  for (const auto& v : vertices) {
    b.min = b.min.cwiseMin(v);
    b.max = b.max.cwiseMax(v);
  }
  return b;
}

Vec3 TriangleMesh::face_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 c = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double n = c.norm();
  return n > 0.0 ? Vec3(c / n) : Vec3::Zero();
}

double TriangleMesh::face_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

double TriangleMesh::area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += face_area(t);
  return a;
}

TriangleMesh sanitized(const TriangleMesh& mesh) {
  mesh.validate();
  TriangleMesh out;
  std::vector<int> remap(mesh.vertices.size(), -1);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) continue;
    if (!(mesh.face_area(t) > 0.0)) continue;
    std::array<int, 3> mapped{};
    for (int i = 0; i < 3; ++i) {
      int& slot = remap[tri[i]];
      if (slot < 0) {
        slot = static_cast<int>(out.vertices.size());
        out.vertices.push_back(mesh.vertices[tri[i]]);
        if (!mesh.normals.empty()) out.normals.push_back(mesh.normals[tri[i]]);
      }
      mapped[i] = slot;
    }
    out.triangles.push_back(mapped);
  }
  return out;
}

NormalizedMesh normalize_mesh(const TriangleMesh& mesh) {
  if (mesh.vertices.empty()) throw Error("empty-input", "mesh has no vertices");
  mesh.validate();
  const Bounds b = mesh.bounds();
  const double longest = b.extent().maxCoeff();
  if (!(longest > 0.0)) throw Error("degenerate-mesh", "mesh bounding box has zero extent");

  NormalizedMesh out;
  out.transform.center = b.center();
  out.transform.scale = kNormalizedExtent / longest;
  out.mesh = mesh;
  for (auto& v : out.mesh.vertices) v = out.transform.apply(v);
  return out;
}

void OrientedPointCloud::validate() const {
  if (!normals.empty() && normals.size() != positions.size())
    throw Error("invalid-points", "normal count differs from point count");
  if (!radii.empty() && radii.size() != positions.size())
    throw Error("invalid-points", "radius count differs from point count");
  for (const auto& p : positions)
    if (!p.allFinite()) throw Error("invalid-points", "non-finite point coordinate");
  for (const auto& n : normals)
    if (std::abs(n.norm() - 1.0) > 1e-6) throw Error("invalid-points", "normal is not unit length");
}

OrientedPointCloud sample_surface(const TriangleMesh& mesh, std::size_t n, double noise_sigma,
                                  std::uint64_t seed) {
  if (n == 0) throw Error("invalid-argument", "sample count must be positive");
  if (noise_sigma < 0.0) throw Error("invalid-argument", "noise sigma must be non-negative");
  mesh.validate();

  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.face_area(t);
    cumulative[t] = total;
  }
  if (!(total > 0.0)) throw Error("degenerate-mesh", "mesh has zero surface area");

  const double stddev = noise_sigma * mesh.bounds().extent().maxCoeff();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gaussian(0.0, 1.0);

  OrientedPointCloud cloud;
  cloud.positions.reserve(n);
  cloud.normals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    std::size_t t = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cumulative.begin(), static_cast<std::ptrdiff_t>(cumulative.size()) - 1));
    while (mesh.face_area(t) <= 0.0) t = (t + 1) % mesh.triangles.size();

    const double su = std::sqrt(uniform(rng));
    const double v = uniform(rng);
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    Vec3 p = (1.0 - su) * a + su * (1.0 - v) * b + su * v * c;
    if (stddev > 0.0) {
      const double dx = gaussian(rng);
      const double dy = gaussian(rng);
      const double dz = gaussian(rng);
      p += stddev * Vec3(dx, dy, dz);
    }
    cloud.positions.push_back(p);
    cloud.normals.push_back(mesh.face_normal(t));
  }
  return cloud;
}

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

std::unordered_map<std::uint64_t, int> edge_counts(const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, int> counts;
  counts.reserve(mesh.triangles.size() * 2);
  for (const auto& t : mesh.triangles) {
    ++counts[edge_key(t[0], t[1])];
    ++counts[edge_key(t[1], t[2])];
    ++counts[edge_key(t[2], t[0])];
  }
  return counts;
}

}  // namespace

long euler_characteristic(const TriangleMesh& mesh) {
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& t : mesh.triangles)
    for (int i : t) used[i] = true;
  const long v = std::count(used.begin(), used.end(), true);
  const long e = static_cast<long>(edge_counts(mesh).size());
  return v - e + static_cast<long>(mesh.triangles.size());
}

bool is_closed_manifold(const TriangleMesh& mesh) {
  if (mesh.triangles.empty()) return false;
  for (const auto& [key, count] : edge_counts(mesh))
    if (count != 2) return false;
  return true;
}

}  // namespace octimls
