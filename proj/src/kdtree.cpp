#include "octimls/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>

namespace octimls {

namespace {
constexpr std::uint32_t kLeafSize = 12;
}

KdTree::KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t first, std::uint32_t count) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Node node;
  node.first = first;
  node.count = count;
  if (count > kLeafSize) {
    Vec3 lo = points_[order_[first]], hi = lo;
    for (std::uint32_t i = first; i < first + count; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    (hi - lo).maxCoeff(&node.axis);
    const int axis = node.axis;
    const std::uint32_t half = count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + first + half, order_.begin() + first + count,
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis] ||
                              (points_[a][axis] == points_[b][axis] && a < b);
                     });
    node.split = points_[order_[first + half]][axis];
    node.left = build(first, half);
    node.right = build(first + half, count - half);
  }
  nodes_[id] = node;
  return id;
}

// The visitor exposes bound() (current pruning radius squared; nodes whose
// slab distance exceeds it are skipped) and visit(index, distance_sq).
template <typename Visit>
void KdTree::search(std::int32_t id, const Vec3& q, Visit& visit) const {
  const Node& node = nodes_[id];
  if (node.left < 0) {
    for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
      const std::uint32_t p = order_[i];
      visit.visit(p, (points_[p] - q).squaredNorm());
    }
    return;
  }
  // Left subtree holds coordinates <= split, right holds >= split.
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff <= 0.0 ? node.left : node.right;
  const std::int32_t far = diff <= 0.0 ? node.right : node.left;
  search(near, q, visit);
  if (diff * diff <= visit.bound()) search(far, q, visit);
}

Neighbor KdTree::nearest(const Vec3& q) const {
  struct Visitor {
    Neighbor best{std::numeric_limits<double>::infinity(), std::numeric_limits<std::uint32_t>::max()};
    double bound() const { return best.distance_sq; }
    void visit(std::uint32_t i, double d) {
      const Neighbor cand{d, i};
      if (cand < best) best = cand;
    }
  } v;
  if (!nodes_.empty()) search(0, q, v);
  return v.best;
}

std::vector<Neighbor> KdTree::knn(const Vec3& q, std::size_t k) const {
  struct Visitor {
    std::size_t k;
    std::priority_queue<Neighbor> heap;  // max-heap on (distance, index)
    double bound() const {
      return heap.size() < k ? std::numeric_limits<double>::infinity() : heap.top().distance_sq;
    }
    void visit(std::uint32_t i, double d) {
      const Neighbor cand{d, i};
      if (heap.size() < k) {
        heap.push(cand);
      } else if (cand < heap.top()) {
        heap.pop();
        heap.push(cand);
      }
    }
  } v{k, {}};
  if (k == 0 || nodes_.empty()) return {};
  search(0, q, v);
  std::vector<Neighbor> out(v.heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = v.heap.top();
    v.heap.pop();
  }
  return out;
}

std::vector<std::uint32_t> KdTree::radius(const Vec3& q, double radius_sq) const {
  struct Visitor {
    double r2;
    std::vector<std::uint32_t> hits;
    double bound() const { return r2; }
    void visit(std::uint32_t i, double d) {
      if (d < r2) hits.push_back(i);
    }
  } v{radius_sq, {}};
  if (!nodes_.empty()) search(0, q, v);
  std::sort(v.hits.begin(), v.hits.end());
  return v.hits;
}

}  // namespace octimls
