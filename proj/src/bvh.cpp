#include "octimls/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace octimls {

namespace {
constexpr std::uint32_t kLeafSize = 8;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

double box_distance_sq(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  const Vec3 d = (lo - q).cwiseMax(q - hi).cwiseMax(0.0);
  return d.squaredNorm();
}
}  // namespace

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0)) {
    // Degenerate triangle: fall back to the nearest of its edges.
    auto seg = [&p](const Vec3& s, const Vec3& e) {
      const Vec3 d = e - s;
      const double len2 = d.squaredNorm();
      const double t = len2 > 0.0 ? std::clamp((p - s).dot(d) / len2, 0.0, 1.0) : 0.0;
      return Vec3(s + t * d);
    };
    Vec3 best = seg(a, b);
    for (const Vec3& cand : {seg(b, c), seg(c, a)})
      if ((cand - p).squaredNorm() < (best - p).squaredNorm()) best = cand;
    return best;
  }
  const double v = vb / denom, w = vc / denom;
  return a + ab * v + ac * w;
}

MeshBvh::MeshBvh(const TriangleMesh& mesh) : mesh_(mesh) {
  mesh_.validate();
  const std::size_t nt = mesh_.triangles.size();
  order_.resize(nt);
  std::iota(order_.begin(), order_.end(), 0u);
  tri_centroid_.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh_.triangles[t];
    tri_centroid_[t] = (mesh_.vertices[tri[0]] + mesh_.vertices[tri[1]] + mesh_.vertices[tri[2]]) / 3.0;
  }
  if (nt > 0) {
    nodes_.reserve(2 * nt / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(nt));
  }
}

std::int32_t MeshBvh::build(std::uint32_t first, std::uint32_t count) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Node node;
  node.first = first;
  node.count = count;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  Vec3 weighted = Vec3::Zero();
  double area_sum = 0.0;
  node.area_vec = Vec3::Zero();
  for (std::uint32_t i = first; i < first + count; ++i) {
    const auto& tri = mesh_.triangles[order_[i]];
    for (int k : tri) {
      node.lo = node.lo.cwiseMin(mesh_.vertices[k]);
      node.hi = node.hi.cwiseMax(mesh_.vertices[k]);
    }
    const Vec3 av = 0.5 * (mesh_.vertices[tri[1]] - mesh_.vertices[tri[0]])
                              .cross(mesh_.vertices[tri[2]] - mesh_.vertices[tri[0]]);
    const double a = av.norm();
    node.area_vec += av;
    weighted += a * tri_centroid_[order_[i]];
    area_sum += a;
  }
  node.centroid = area_sum > 0.0 ? Vec3(weighted / area_sum) : Vec3(0.5 * (node.lo + node.hi));
  for (std::uint32_t i = first; i < first + count; ++i)
    for (int k : mesh_.triangles[order_[i]])
      node.radius = std::max(node.radius, (mesh_.vertices[k] - node.centroid).norm());

  if (count > kLeafSize) {
    Vec3 clo = Vec3::Constant(std::numeric_limits<double>::infinity()), chi = -clo;
    for (std::uint32_t i = first; i < first + count; ++i) {
      clo = clo.cwiseMin(tri_centroid_[order_[i]]);
      chi = chi.cwiseMax(tri_centroid_[order_[i]]);
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const std::uint32_t half = count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + first + half, order_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const double ca = tri_centroid_[a][axis], cb = tri_centroid_[b][axis];
                       return ca < cb || (ca == cb && a < b);
                     });
    node.left = build(first, half);
    node.right = build(first + half, count - half);
  }
  nodes_[id] = node;
  return id;
}

MeshBvh::Closest MeshBvh::closest(const Vec3& q, double upper_bound_sq) const {
  Closest best;
  best.distance_sq = upper_bound_sq;
  best.triangle = kNone;
  if (!nodes_.empty()) closest_rec(0, q, best);
  if (best.triangle == kNone) best.distance_sq = std::numeric_limits<double>::infinity();
  return best;
}

void MeshBvh::closest_rec(std::int32_t id, const Vec3& q, Closest& best) const {
  const Node& node = nodes_[id];
  if (node.left < 0) {
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const auto t = order_[i];
      const auto& tri = mesh_.triangles[t];
      const Vec3 p = closest_point_on_triangle(q, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]], mesh_.vertices[tri[2]]);
      const double d = (p - q).squaredNorm();
      if (d < best.distance_sq || (d == best.distance_sq && t < best.triangle)) {
        best.distance_sq = d;
        best.point = p;
        best.triangle = t;
      }
    }
    return;
  }
  const Node& l = nodes_[node.left];
  const Node& r = nodes_[node.right];
  const double dl = box_distance_sq(q, l.lo, l.hi);
  const double dr = box_distance_sq(q, r.lo, r.hi);
  const std::int32_t first = dl <= dr ? node.left : node.right;
  const std::int32_t second = dl <= dr ? node.right : node.left;
  if (std::min(dl, dr) <= best.distance_sq) closest_rec(first, q, best);
  if (std::max(dl, dr) <= best.distance_sq) closest_rec(second, q, best);
}

double MeshBvh::unsigned_distance(const Vec3& q) const { return std::sqrt(closest(q).distance_sq); }

double MeshBvh::triangle_solid_angle(std::size_t t, const Vec3& q) const {
  // Van Oosterom & Strackee.
  const auto& tri = mesh_.triangles[t];
  const Vec3 a = mesh_.vertices[tri[0]] - q;
  const Vec3 b = mesh_.vertices[tri[1]] - q;
  const Vec3 c = mesh_.vertices[tri[2]] - q;
  const double la = a.norm(), lb = b.norm(), lc = c.norm();
  const double det = a.dot(b.cross(c));
  const double denom = la * lb * lc + a.dot(b) * lc + b.dot(c) * la + c.dot(a) * lb;
  return 2.0 * std::atan2(det, denom);
}

double MeshBvh::winding_number_exact(const Vec3& q) const {
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) sum += triangle_solid_angle(t, q);
  return sum / (4.0 * std::numbers::pi);
}

double MeshBvh::winding_number(const Vec3& q, double accuracy) const {
  if (nodes_.empty()) return 0.0;
  return winding_rec(0, q, accuracy) / (4.0 * std::numbers::pi);
}

double MeshBvh::winding_rec(std::int32_t id, const Vec3& q, double accuracy) const {
  const Node& node = nodes_[id];
  const Vec3 d = node.centroid - q;
  const double dist = d.norm();
  if (dist > accuracy * node.radius && box_distance_sq(q, node.lo, node.hi) > 0.0) {
    return node.area_vec.dot(d) / (dist * dist * dist);
  }
  if (node.left < 0) {
    double sum = 0.0;
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) sum += triangle_solid_angle(order_[i], q);
    return sum;
  }
  return winding_rec(node.left, q, accuracy) + winding_rec(node.right, q, accuracy);
}

}  // namespace octimls
