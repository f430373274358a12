#include "octimls/octree.hpp"

#include "octimls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace octimls {

namespace {

std::uint64_t spread_bits(std::uint32_t v) {
  std::uint64_t x = v & 0x1fffff;
  x = (x | x << 32) & 0x1f00000000ffffULL;
  x = (x | x << 16) & 0x1f0000ff0000ffULL;
  x = (x | x << 8) & 0x100f00f00f00f00fULL;
  x = (x | x << 4) & 0x10c30c30c30c30c3ULL;
  x = (x | x << 2) & 0x1249249249249249ULL;
  return x;
}

std::uint32_t compact_bits(std::uint64_t x) {
  x &= 0x1249249249249249ULL;
  x = (x ^ (x >> 2)) & 0x10c30c30c30c30c3ULL;
  x = (x ^ (x >> 4)) & 0x100f00f00f00f00fULL;
  x = (x ^ (x >> 8)) & 0x1f0000ff0000ffULL;
  x = (x ^ (x >> 16)) & 0x1f00000000ffffULL;
  x = (x ^ (x >> 32)) & 0x1fffff;
  return static_cast<std::uint32_t>(x);
}

void check_depth(int depth) {
  if (depth < 1 || depth > kMaxOctreeDepth)
    throw Error("invalid-depth", "octree depth must be in [1, " + std::to_string(kMaxOctreeDepth) + "]");
}

void sort_unique(std::vector<std::uint64_t>& keys) {
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
}

// Completes coarser levels from the finest one and forces levels 1-2 full.
std::vector<std::vector<std::uint64_t>> close_levels(int depth, std::vector<std::uint64_t> finest) {
  std::vector<std::vector<std::uint64_t>> levels(depth + 1);
  levels[depth] = std::move(finest);
  auto force = [&](int level) {
    if (level > depth) return;
    const std::uint64_t n = 1ull << (3 * level);
    auto& keys = levels[level];
    keys.resize(n);
    for (std::uint64_t k = 0; k < n; ++k) keys[k] = k;
  };
  if (depth <= 2) force(depth);
  sort_unique(levels[depth]);
  for (int level = depth - 1; level >= 0; --level) {
    auto& keys = levels[level];
    for (std::uint64_t child : levels[level + 1]) keys.push_back(child >> 3);
    sort_unique(keys);
  }
  levels[0] = {0};
  force(1);
  force(2);
  return levels;
}

}  // namespace

std::uint64_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  return spread_bits(x) | (spread_bits(y) << 1) | (spread_bits(z) << 2);
}

std::array<std::uint32_t, 3> morton_decode(std::uint64_t key) {
  return {compact_bits(key), compact_bits(key >> 1), compact_bits(key >> 2)};
}

Octree::Octree(int depth, std::vector<std::vector<std::uint64_t>> levels, std::size_t clamped_points)
    : depth_(depth), levels_(std::move(levels)), clamped_(clamped_points) {
  check_depth(depth_);
  if (levels_.size() != static_cast<std::size_t>(depth_) + 1)
    throw Error("invalid-octree", "level count does not match depth");
  for (int level = 0; level <= depth_; ++level) {
    const auto& keys = levels_[level];
    if (!std::is_sorted(keys.begin(), keys.end()) || std::adjacent_find(keys.begin(), keys.end()) != keys.end())
      throw Error("invalid-octree", "level keys must be sorted and unique");
    const std::uint64_t limit = 1ull << (3 * level);
    if (!keys.empty() && keys.back() >= limit) throw Error("invalid-octree", "key out of range for its level");
    if (level > 0)
      for (std::uint64_t k : keys)
        if (!occupied(level - 1, k >> 3)) throw Error("invalid-octree", "non-empty octant with empty parent");
  }
  centers_.reserve(num_finest());
  for (std::uint64_t key : levels_[depth_]) {
    const auto c = morton_decode(key);
    centers_.push_back(octant_center(depth_, c[0], c[1], c[2]));
  }
}

bool Octree::occupied(int level, std::uint64_t key) const {
  const auto& keys = levels_.at(level);
  return std::binary_search(keys.begin(), keys.end(), key);
}

std::optional<std::size_t> Octree::finest_index(std::uint64_t key) const {
  const auto& keys = levels_[depth_];
  auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it == keys.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys.begin());
}

Vec3 Octree::octant_center(int level, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  const double h = cell_size(level);
  return Vec3(-1.0 + (x + 0.5) * h, -1.0 + (y + 0.5) * h, -1.0 + (z + 0.5) * h);
}

std::string Octree::dump() const {
  std::ostringstream out;
  for (int level = 0; level <= depth_; ++level) {
    out << "level " << level << ' ' << levels_[level].size() << ':';
    for (std::uint64_t k : levels_[level]) out << ' ' << k;
    out << '\n';
  }
  return out.str();
}

std::uint64_t octant_key(const Vec3& p, int level) {
  const std::uint32_t n = 1u << level;
  std::uint32_t c[3];
  for (int axis = 0; axis < 3; ++axis) {
    const double u = std::floor((std::clamp(p[axis], -1.0, 1.0) + 1.0) * 0.5 * n);
    c[axis] = static_cast<std::uint32_t>(std::clamp(u, 0.0, static_cast<double>(n - 1)));
  }
  return morton_encode(c[0], c[1], c[2]);
}

Octree build_octree(const std::vector<Vec3>& points, int depth) {
  check_depth(depth);
  if (points.empty()) throw Error("empty-input", "point cloud is empty");
  std::size_t clamped = 0;
  std::vector<std::uint64_t> finest;
  finest.reserve(points.size());
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error("invalid-points", "non-finite point coordinate");
    if ((p.array() < -1.0).any() || (p.array() > 1.0).any()) ++clamped;
    finest.push_back(octant_key(p, depth));
  }
  if (depth <= 2) finest.clear();
  return Octree(depth, close_levels(depth, std::move(finest)), clamped);
}

Octree octree_from_finest(int depth, std::vector<std::uint64_t> keys) {
  check_depth(depth);
  const std::uint64_t limit = 1ull << (3 * depth);
  for (std::uint64_t k : keys)
    if (k >= limit) throw Error("invalid-octree", "key out of range for its level");
  if (depth <= 2) keys.clear();
  return Octree(depth, close_levels(depth, std::move(keys)));
}

Octree build_octree(const OrientedPointCloud& cloud, int depth) { return build_octree(cloud.positions, depth); }

Octree build_gt_octree(const SdfGrid& sdf, int depth) {
  check_depth(depth);
  if (depth <= 2) return Octree(depth, close_levels(depth, {}));

  const double slack = 2.0 * sdf.spacing().maxCoeff();
  const double finest_half_diag = Octree::cell_size(depth) * std::sqrt(3.0) / 2.0;

  auto finest_occupied = [&](std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    const double h = Octree::cell_size(depth);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    bool near = false;
    for (int corner = 0; corner < 8; ++corner) {
      const Vec3 p(-1.0 + (x + (corner & 1)) * h, -1.0 + (y + ((corner >> 1) & 1)) * h,
                   -1.0 + (z + ((corner >> 2) & 1)) * h);
      const double s = sdf.sample(p);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
      if (std::abs(s) < finest_half_diag) near = true;
    }
    return near || (lo < 0.0 && hi > 0.0);
  };

  // Top-down refinement with a conservative distance prune at coarse levels;
  // the exact corner test above decides the finest level.
  std::vector<std::uint64_t> frontier{0};
  for (int level = 1; level <= depth; ++level) {
    std::vector<std::uint64_t> children;
    children.reserve(frontier.size() * 8);
    for (std::uint64_t parent : frontier)
      for (std::uint64_t c = 0; c < 8; ++c) children.push_back((parent << 3) | c);

    std::vector<std::uint8_t> keep(children.size(), 0);
    const auto plan = plan_chunks(children.size(), 4096, 64);
    parallel_for(plan.count, [&](std::size_t chunk) {
      for (std::size_t i = plan.begin(chunk); i < plan.end(chunk); ++i) {
        const auto c = morton_decode(children[i]);
        if (level == depth) {
          keep[i] = finest_occupied(c[0], c[1], c[2]);
        } else {
          const Vec3 center = Octree::octant_center(level, c[0], c[1], c[2]);
          const double half_diag = Octree::cell_size(level) * std::sqrt(3.0) / 2.0;
          keep[i] = std::abs(sdf.sample(center)) <= std::sqrt(3.0) * half_diag + finest_half_diag + slack;
        }
      }
    });
    frontier.clear();
    for (std::size_t i = 0; i < children.size(); ++i)
      if (keep[i]) frontier.push_back(children[i]);
  }
  return Octree(depth, close_levels(depth, std::move(frontier)));
}

SdfSampleSet generate_sdf_samples(const SdfGrid& sdf) {
  const int r = sdf.resolution();
  if (r < 128) throw Error("resolution-too-small", "SDF samples need a grid resolution of at least 128");
  const int stride6 = std::max(1, r / 64);
  const int stride7 = std::max(1, r / 128);

  std::vector<SdfSampleSet> slabs(static_cast<std::size_t>(r));
  parallel_for(static_cast<std::size_t>(r), [&](std::size_t sx) {
    const int ix = static_cast<int>(sx);
    if (ix % stride7 != 0) return;
    auto& out = slabs[sx];
    for (int iy = 0; iy < r; iy += stride7)
      for (int iz = 0; iz < r; iz += stride7) {
        const double s = sdf.at(ix, iy, iz);
        const bool on6 = ix % stride6 == 0 && iy % stride6 == 0 && iz % stride6 == 0;
        int level = 0;
        if (on6 && std::abs(s) < kLevel6Threshold)
          level = 6;
        else if (std::abs(s) < kLevel7Threshold)
          level = 7;
        if (level == 0) continue;
        const Vec3 g = sdf.gradient_at(ix, iy, iz);
        const double gn = g.norm();
        if (!(gn > 0.0)) continue;
        out.push_back({sdf.position(ix, iy, iz), s, g / gn, level});
      }
  });
  SdfSampleSet samples;
  for (auto& slab : slabs) samples.insert(samples.end(), slab.begin(), slab.end());
  return samples;
}

std::vector<std::uint8_t> occupancy_labels(const Octree& octree, int level) {
  if (level < 1 || level > octree.depth()) throw Error("invalid-depth", "level outside the octree");
  std::vector<std::uint8_t> labels;
  for (std::uint64_t parent : octree.keys(level - 1))
    for (std::uint64_t c = 0; c < 8; ++c) labels.push_back(octree.occupied(level, (parent << 3) | c) ? 1 : 0);
  return labels;
}

}  // namespace octimls
