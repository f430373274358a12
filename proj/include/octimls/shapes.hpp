#pragma once

#include "octimls/mesh.hpp"

#include <variant>

namespace octimls {

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.5;
};

/// Axis-aligned box centered at the origin.
struct Box {
  Vec3 half_extents = Vec3::Constant(0.5);
};

/// Torus around the y axis, centered at the origin.
struct Torus {
  double major_radius = 0.5;
  double minor_radius = 0.2;
};

using AnalyticShape = std::variant<Sphere, Box, Torus>;

/// Exact signed distance, negative inside. Throws Error("invalid-shape") for
/// non-positive shape parameters.
double analytic_sdf(const AnalyticShape& shape, const Vec3& x);

void validate_shape(const AnalyticShape& shape);

/// Outward-oriented tessellations used as ground-truth meshes.
TriangleMesh make_icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());
TriangleMesh make_torus(double major_radius, double minor_radius, int major_segments, int minor_segments);
TriangleMesh make_box(const Vec3& half_extents, int segments = 1);

}  // namespace octimls
