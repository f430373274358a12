#include "octimls/mesher.hpp"

#include "octimls/marching_cubes.hpp"
#include "octimls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>

namespace octimls {

namespace {

struct Grid {
  int cells;
  std::int64_t points;  // per axis
  double step;

  std::uint64_t corner_id(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::uint64_t>((x * points + y) * points + z);
  }
  Vec3 corner_position(std::uint64_t id) const {
    const auto z = static_cast<std::int64_t>(id % points);
    const auto y = static_cast<std::int64_t>((id / points) % points);
    const auto x = static_cast<std::int64_t>(id / points / points);
    return Vec3(-1.0 + x * step, -1.0 + y * step, -1.0 + z * step);
  }
  std::array<std::int64_t, 3> cell_coords(std::uint32_t cell) const {
    const std::int64_t r = cells;
    return {cell / (r * r), (cell / r) % r, cell % r};
  }
};

void check_resolution(int resolution) {
  if (resolution < 2 || resolution > 1024)
    throw Error("invalid-resolution", "mesh resolution must lie in [2, 1024]");
}

}  // namespace

std::vector<std::uint32_t> band_cells(const Octree& octree, int resolution) {
  check_resolution(resolution);
  const double step = 2.0 / resolution;
  const double h = octree.cell_size();
  std::vector<std::uint32_t> cells;
  for (std::size_t k = 0; k < octree.num_finest(); ++k) {
    const auto o = morton_decode(octree.finest_key(k));
    std::array<int, 3> lo, hi;
    for (int a = 0; a < 3; ++a) {
      const double min = -1.0 + (static_cast<double>(o[a]) - 1.0) * h;
      const double max = -1.0 + (static_cast<double>(o[a]) + 2.0) * h;
      lo[a] = std::max(0, static_cast<int>(std::floor((min + 1.0) / step + 1e-9)));
      hi[a] = std::min(resolution - 1, static_cast<int>(std::ceil((max + 1.0) / step - 1e-9)) - 1);
    }
    for (int x = lo[0]; x <= hi[0]; ++x)
      for (int y = lo[1]; y <= hi[1]; ++y)
        for (int z = lo[2]; z <= hi[2]; ++z)
          cells.push_back(static_cast<std::uint32_t>((static_cast<std::int64_t>(x) * resolution + y) * resolution + z));
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  return cells;
}

TriangleMesh extract_mesh(const MlsPointSet& points, const MeshOptions& options, MeshStats* stats,
                          std::vector<BandRecord>* band) {
  if (points.empty()) throw Error("empty-input", "MLS point set is empty");
  check_resolution(options.resolution);
  const int res = options.resolution;
  const Grid grid{res, res + 1, 2.0 / res};
  const bool banded = options.band_only && points.scaffold();

  ImlsOptions fopts;
  if (!banded) {
    fopts.restrict_to_scaffold = false;
    fopts.weight_epsilon = 0.0;
  }
  const ImlsFunction f(std::make_shared<const MlsPointSet>(points), fopts);

  std::vector<std::uint32_t> cells;
  std::vector<std::uint64_t> corners;  // sorted ids of evaluated corners
  std::vector<double> values;
  std::vector<std::uint8_t> outside;
  auto value_of = [&](std::uint64_t id) {
    return values[static_cast<std::size_t>(std::lower_bound(corners.begin(), corners.end(), id) - corners.begin())];
  };
  auto is_outside = [&](std::uint64_t id) {
    return outside[static_cast<std::size_t>(std::lower_bound(corners.begin(), corners.end(), id) - corners.begin())];
  };
  auto evaluate = [&](std::vector<std::uint64_t> fresh) {
    std::sort(fresh.begin(), fresh.end());
    fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
    std::erase_if(fresh, [&](std::uint64_t id) { return std::binary_search(corners.begin(), corners.end(), id); });
    std::vector<double> fresh_values(fresh.size());
    std::vector<std::uint8_t> fresh_outside(fresh.size(), 0);
    parallel_for(fresh.size(), [&](std::size_t i) {
      const auto v = f.eval(grid.corner_position(fresh[i]));
      fresh_values[i] = v.in_band ? v.value : kOutsideValue;
      fresh_outside[i] = !v.in_band;
    });
    std::vector<std::uint64_t> merged_ids(corners.size() + fresh.size());
    std::vector<double> merged_values(merged_ids.size());
    std::vector<std::uint8_t> merged_outside(merged_ids.size());
    for (std::size_t i = 0, j = 0, k = 0; k < merged_ids.size(); ++k) {
      const bool take_old = j >= fresh.size() || (i < corners.size() && corners[i] < fresh[j]);
      if (take_old) {
        merged_ids[k] = corners[i], merged_values[k] = values[i], merged_outside[k] = outside[i];
        ++i;
      } else {
        merged_ids[k] = fresh[j], merged_values[k] = fresh_values[j], merged_outside[k] = fresh_outside[j];
        ++j;
      }
    }
    corners = std::move(merged_ids);
    values = std::move(merged_values);
    outside = std::move(merged_outside);
  };
  auto cell_corners = [&](std::uint32_t cell) {
    const auto [x, y, z] = grid.cell_coords(cell);
    std::array<std::uint64_t, 8> ids;
    for (int b = 0; b < 8; ++b) ids[b] = grid.corner_id(x + (b & 1), y + ((b >> 1) & 1), z + ((b >> 2) & 1));
    return ids;
  };

  if (banded) {
    // Start from the scaffold band, then follow the zero set across any cell
    // face it leaves through until the band is closed.
    std::vector<std::uint32_t> pending = band_cells(*points.scaffold(), res);
    while (!pending.empty()) {
      std::vector<std::uint64_t> fresh;
      fresh.reserve(pending.size() * 8);
      for (std::uint32_t c : pending)
        for (auto id : cell_corners(c)) fresh.push_back(id);
      evaluate(std::move(fresh));
      std::vector<std::uint32_t> merged;
      std::merge(cells.begin(), cells.end(), pending.begin(), pending.end(), std::back_inserter(merged));
      cells = std::move(merged);

      std::vector<std::uint32_t> next;
      for (std::uint32_t c : pending) {
        const auto ids = cell_corners(c);
        const auto [x, y, z] = grid.cell_coords(c);
        for (int face = 0; face < 6; ++face) {
          const auto& fc = kCubeFaces[face];
          bool pos = false, neg = false;
          for (int m = 0; m < 4; ++m) {
            if (is_outside(ids[fc[m]])) continue;
            (value_of(ids[fc[m]]) >= 0.0 ? pos : neg) = true;
          }
          if (!(pos && neg)) continue;
          const int axis = face / 2, dir = face % 2 ? 1 : -1;
          std::array<std::int64_t, 3> n{x, y, z};
          n[axis] += dir;
          if (n[axis] < 0 || n[axis] >= res) continue;
          const auto id = static_cast<std::uint32_t>((n[0] * res + n[1]) * res + n[2]);
          if (!std::binary_search(cells.begin(), cells.end(), id)) next.push_back(id);
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      pending = std::move(next);
    }
  } else {
    cells.resize(static_cast<std::size_t>(res) * res * res);
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<std::uint32_t>(i);
    std::vector<std::uint64_t> all(static_cast<std::size_t>(grid.points * grid.points * grid.points));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    corners.swap(all);
    values.resize(corners.size());
    outside.assign(corners.size(), 0);
    parallel_for(corners.size(), [&](std::size_t i) {
      const auto v = f.eval(grid.corner_position(corners[i]));
      values[i] = v.in_band ? v.value : kOutsideValue;
      outside[i] = !v.in_band;
    });
  }

  // Triangles as triples of global edge ids, chunked over sorted cells.
  using EdgeTriangle = std::array<std::uint64_t, 3>;
  const auto plan = plan_chunks(cells.size(), 4096, 256);
  std::vector<std::vector<EdgeTriangle>> chunk_tris(plan.count);
  std::vector<std::vector<BandRecord>> chunk_band(band ? plan.count : 0);
  parallel_for(plan.count, [&](std::size_t c) {
    for (std::size_t i = plan.begin(c); i < plan.end(c); ++i) {
      const auto ids = cell_corners(cells[i]);
      std::array<double, 8> v;
      for (int b = 0; b < 8; ++b) v[b] = value_of(ids[b]);
      if (band) {
        BandRecord rec{cells[i], {}};
        for (int b = 0; b < 8; ++b) rec.values[b] = static_cast<float>(v[b]);
        chunk_band[c].push_back(rec);
      }
      for (const auto& tri : triangulate_cube(v)) {
        EdgeTriangle et;
        for (int k = 0; k < 3; ++k) {
          const auto& e = kCubeEdges[tri[k]];
          const int axis = (e.a ^ e.b) == 1 ? 0 : ((e.a ^ e.b) == 2 ? 1 : 2);
          et[k] = ids[e.a] * 3 + static_cast<std::uint64_t>(axis);
        }
        chunk_tris[c].push_back(et);
      }
    }
  });

  std::vector<EdgeTriangle> edge_tris;
  for (auto& chunk : chunk_tris) edge_tris.insert(edge_tris.end(), chunk.begin(), chunk.end());
  if (band) {
    band->clear();
    for (auto& chunk : chunk_band) band->insert(band->end(), chunk.begin(), chunk.end());
  }

  std::vector<std::uint64_t> edges;
  edges.reserve(edge_tris.size() * 3);
  for (const auto& t : edge_tris) edges.insert(edges.end(), t.begin(), t.end());
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  const std::array<std::uint64_t, 3> axis_step{static_cast<std::uint64_t>(grid.points * grid.points),
                                               static_cast<std::uint64_t>(grid.points), 1};
  TriangleMesh mesh;
  mesh.vertices.resize(edges.size());
  parallel_for(edges.size(), [&](std::size_t i) {
    const std::uint64_t a = edges[i] / 3;
    const std::uint64_t b = a + axis_step[edges[i] % 3];
    const double va = value_of(a), vb = value_of(b);
    const double t = va / (va - vb);
    const Vec3 pa = grid.corner_position(a), pb = grid.corner_position(b);
    mesh.vertices[i] = pa + t * (pb - pa);
  });

  auto vertex_of = [&](std::uint64_t e) {
    return static_cast<int>(std::lower_bound(edges.begin(), edges.end(), e) - edges.begin());
  };
  std::size_t degenerate = 0;
  mesh.triangles.reserve(edge_tris.size());
  for (const auto& t : edge_tris) {
    const std::array<int, 3> tri{vertex_of(t[0]), vertex_of(t[1]), vertex_of(t[2])};
    const Vec3& a = mesh.vertices[tri[0]];
    if ((mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a).squaredNorm() == 0.0) {
      ++degenerate;
      continue;
    }
    mesh.triangles.push_back(tri);
  }
  mesh = sanitized(mesh);

  std::vector<Vec3> face_sum(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const Vec3 n = mesh.face_normal(t) * mesh.face_area(t);
    for (int v : mesh.triangles[t]) face_sum[v] += n;
  }
  mesh.normals.resize(mesh.vertices.size());
  parallel_for(mesh.vertices.size(), [&](std::size_t i) {
    const auto k = f.eval_with_gradient(mesh.vertices[i]);
    Vec3 n = k.in_band ? k.gradient : Vec3::Zero();
    if (!(n.norm() > 1e-12) || !n.allFinite()) n = face_sum[i];
    mesh.normals[i] = n.norm() > 0.0 ? n.normalized() : Vec3::UnitZ();
  });

  if (stats) {
    stats->cells = cells.size();
    stats->corners = corners.size();
    stats->outside_corners = static_cast<std::size_t>(std::count(outside.begin(), outside.end(), 1));
    stats->degenerate_triangles = degenerate;
  }
  return mesh;
}

}  // namespace octimls
