#include "octimls/shapes.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace octimls {

void validate_shape(const AnalyticShape& shape) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          if (!(s.radius > 0.0)) throw Error("invalid-shape", "sphere radius must be positive");
        } else if constexpr (std::is_same_v<T, Box>) {
          if (!(s.half_extents.minCoeff() > 0.0)) throw Error("invalid-shape", "box half extents must be positive");
        } else {
          if (!(s.major_radius > 0.0 && s.minor_radius > 0.0))
            throw Error("invalid-shape", "torus radii must be positive");
        }
      },
      shape);
}

double analytic_sdf(const AnalyticShape& shape, const Vec3& x) {
  validate_shape(shape);
  return std::visit(
      [&x](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return (x - s.center).norm() - s.radius;
        } else if constexpr (std::is_same_v<T, Box>) {
          const Vec3 q = x.cwiseAbs() - s.half_extents;
          return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
        } else {
          const double ring = std::hypot(x.x(), x.z()) - s.major_radius;
          return std::hypot(ring, x.y()) - s.minor_radius;
        }
      },
      shape);
}

TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<std::array<int, 3>> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                       {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                       {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                       {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoints;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoints.find(key);
      if (it != midpoints.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const int id = static_cast<int>(v.size()) - 1;
      midpoints.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  TriangleMesh mesh;
  mesh.triangles = std::move(f);
  mesh.normals = v;
  mesh.vertices.reserve(v.size());
  for (const auto& p : v) mesh.vertices.push_back(center + radius * p);
  return mesh;
}

TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments) {
  TriangleMesh mesh;
  const double two_pi = 2.0 * std::numbers::pi;
  for (int i = 0; i < major_segments; ++i) {
    const double u = two_pi * i / major_segments;
    const Vec3 ring(std::cos(u), 0.0, std::sin(u));
    for (int j = 0; j < minor_segments; ++j) {
      const double w = two_pi * j / minor_segments;
      const Vec3 n = std::cos(w) * ring + std::sin(w) * Vec3::UnitY();
      mesh.vertices.push_back(major_radius * ring + minor_radius * n);
      mesh.normals.push_back(n);
    }
  }
  auto id = [&](int i, int j) { return (i % major_segments) * minor_segments + (j % minor_segments); };
  for (int i = 0; i < major_segments; ++i) {
    for (int j = 0; j < minor_segments; ++j) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      mesh.triangles.push_back({a, d, c});
      mesh.triangles.push_back({a, c, b});
    }
  }
  return mesh;
}

TriangleMesh make_box(const Vec3& half_extents, int segments) {
  TriangleMesh mesh;
  segments = std::max(1, segments);
  std::map<std::array<long, 3>, int> index;
  auto vertex = [&](const Vec3& unit) {
    const std::array<long, 3> key{std::lround(unit.x() * segments * 2), std::lround(unit.y() * segments * 2),
                                  std::lround(unit.z() * segments * 2)};
    auto it = index.find(key);
    if (it != index.end()) return it->second;
    mesh.vertices.push_back(unit.cwiseProduct(half_extents));
    const int id = static_cast<int>(mesh.vertices.size()) - 1;
    index.emplace(key, id);
    return id;
  };
  for (int axis = 0; axis < 3; ++axis) {
    for (int side : {-1, 1}) {
      const int ua = (axis + 1) % 3;
      const int va = (axis + 2) % 3;
      for (int i = 0; i < segments; ++i) {
        for (int j = 0; j < segments; ++j) {
          auto corner = [&](int di, int dj) {
            Vec3 p;
            p[axis] = side;
            p[ua] = -1.0 + 2.0 * (i + di) / segments;
            p[va] = -1.0 + 2.0 * (j + dj) / segments;
            return vertex(p);
          };
          const int a = corner(0, 0), b = corner(1, 0), c = corner(1, 1), d = corner(0, 1);
          // ua x va = axis, so (a,b,c) is counter-clockwise seen from +axis.
          if (side > 0) {
            mesh.triangles.push_back({a, b, c});
            mesh.triangles.push_back({a, c, d});
          } else {
            mesh.triangles.push_back({a, c, b});
            mesh.triangles.push_back({a, d, c});
          }
        }
      }
    }
  }
  return mesh;
}

}  // namespace octimls
