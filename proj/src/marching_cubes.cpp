#include "octimls/marching_cubes.hpp"

#include <limits>

namespace octimls {

namespace {

bool on_face(int edge, const std::array<std::uint8_t, 4>& face) {
  int hits = 0;
  for (auto c : face) hits += (c == kCubeEdges[edge].a) + (c == kCubeEdges[edge].b);
  return hits == 2;
}

bool share_face(int e1, int e2) {
  for (const auto& f : kCubeFaces)
    if (on_face(e1, f) && on_face(e2, f)) return true;
  return false;
}

// Triangulates a contour loop without chords between two crossings on the
// same cube face: a neighbouring cube may need that chord too, and the edge
// would then carry four triangles.
void triangulate_loop(const std::vector<std::uint8_t>& loop, std::vector<std::array<std::uint8_t, 3>>& out) {
  const int n = static_cast<int>(loop.size());
  if (n == 3) {
    out.push_back({loop[0], loop[1], loop[2]});
    return;
  }
  constexpr int kInf = std::numeric_limits<int>::max() / 4;
  // cost[i][j]: fewest same-face chords triangulating loop[i..j]; split[i][j] the apex.
  std::vector<std::vector<int>> cost(n, std::vector<int>(n, 0)), split(n, std::vector<int>(n, -1));
  auto chord = [&](int i, int j) { return (j - i == 1 || (i == 0 && j == n - 1)) ? 0 : int(share_face(loop[i], loop[j])); };
  for (int len = 2; len < n; ++len)
    for (int i = 0; i + len < n; ++i) {
      const int j = i + len;
      cost[i][j] = kInf;
      for (int k = i + 1; k < j; ++k) {
        const int c = cost[i][k] + cost[k][j] + chord(i, k) + chord(k, j);
        if (c < cost[i][j]) cost[i][j] = c, split[i][j] = k;
      }
    }
  auto emit = [&](auto&& self, int i, int j) -> void {
    if (j - i < 2) return;
    const int k = split[i][j];
    out.push_back({loop[i], loop[k], loop[j]});
    self(self, i, k);
    self(self, k, j);
  };
  emit(emit, 0, n - 1);
}

}  // namespace

int cube_edge_index(int a, int b) {
  for (int e = 0; e < 12; ++e)
    if ((kCubeEdges[e].a == a && kCubeEdges[e].b == b) || (kCubeEdges[e].a == b && kCubeEdges[e].b == a)) return e;
  return -1;
}

std::vector<std::array<std::uint8_t, 3>> triangulate_cube(const std::array<double, 8>& values) {
  std::array<bool, 8> positive{};
  int count = 0;
  for (int c = 0; c < 8; ++c) {
    positive[c] = values[c] >= 0.0;
    count += positive[c];
  }
  if (count == 0 || count == 8) return {};

  // next[e] = the crossing edge that follows e on its contour loop.
  std::array<int, 12> next;
  next.fill(-1);
  for (const auto& f : kCubeFaces) {
    std::array<int, 4> edge;
    std::array<bool, 4> crossed;
    int crossings = 0;
    for (int i = 0; i < 4; ++i) {
      edge[i] = cube_edge_index(f[i], f[(i + 1) % 4]);
      crossed[i] = positive[f[i]] != positive[f[(i + 1) % 4]];
      crossings += crossed[i];
    }
    // A segment from the crossing on edge i to the crossing on edge j leaves
    // corners f[i+1..j] on its right when seen from outside; orient every
    // segment so the positive region is on its left.
    auto link = [&](int i, int j) {
      if (positive[f[(i + 1) % 4]])
        next[edge[j]] = edge[i];
      else
        next[edge[i]] = edge[j];
    };
    if (crossings == 2) {
      int i = -1, j = -1;
      for (int k = 0; k < 4; ++k)
        if (crossed[k]) (i < 0 ? i : j) = k;
      link(i, j);
    } else if (crossings == 4) {
      const double mean = 0.25 * (values[f[0]] + values[f[1]] + values[f[2]] + values[f[3]]);
      const bool centre_positive = mean >= 0.0;
      // Cut off each corner whose sign differs from the face centre.
      for (int m = 0; m < 4; ++m)
        if (positive[f[m]] != centre_positive) link((m + 3) % 4, m);
    }
  }

  std::vector<std::array<std::uint8_t, 3>> triangles;
  std::array<bool, 12> visited{};
  for (int start = 0; start < 12; ++start) {
    if (next[start] < 0 || visited[start]) continue;
    std::vector<std::uint8_t> loop;
    for (int e = start; e >= 0 && !visited[e]; e = next[e]) {
      visited[e] = true;
      loop.push_back(static_cast<std::uint8_t>(e));
    }
    triangulate_loop(loop, triangles);
  }
  return triangles;
}

}  // namespace octimls
