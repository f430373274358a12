#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace octimls {

// Unit cube corners are numbered by bits: x = 1, y = 2, z = 4. A corner is
// positive when its value is >= 0.

struct CubeEdge {
  std::uint8_t a, b;  // corner ids, a < b
};

inline constexpr std::array<CubeEdge, 12> kCubeEdges{{{0, 1}, {2, 3}, {4, 5}, {6, 7},  // along x
                                                      {0, 2}, {1, 3}, {4, 6}, {5, 7},  // along y
                                                      {0, 4}, {1, 5}, {2, 6}, {3, 7}}};  // along z

/// Cube faces as corner cycles, counter-clockwise seen from outside the cube:
/// -x, +x, -y, +y, -z, +z.
inline constexpr std::array<std::array<std::uint8_t, 4>, 6> kCubeFaces{
    {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}}};

int cube_edge_index(int a, int b);

/// Triangles (as triples of cube-edge indices) separating the positive from
/// the negative corners. Faces with four crossings are resolved by the sign
/// of the face's mean value, so neighbouring cubes always agree. Triangles
/// are wound so their right-hand normal points toward the positive side.
std::vector<std::array<std::uint8_t, 3>> triangulate_cube(const std::array<double, 8>& values);

}  // namespace octimls
