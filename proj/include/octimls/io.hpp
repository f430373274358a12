#pragma once

#include "octimls/fitter.hpp"
#include "octimls/mesher.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace octimls {

namespace fs = std::filesystem;

// All readers throw Error("io") when a file cannot be opened and
// Error("invalid-format") on malformed content.

/// Wavefront OBJ: `v`, `vn` and `f` records. Polygons are fan-triangulated;
/// normals are kept only when there is exactly one per vertex.
TriangleMesh read_obj(const fs::path& path);
void write_obj(const fs::path& path, const TriangleMesh& mesh);

/// Whitespace-separated `x y z [nx ny nz [r]]` per line; `#` starts a comment.
/// Every line must have the same column count.
OrientedPointCloud read_points(const fs::path& path);
void write_points(const fs::path& path, const OrientedPointCloud& cloud);

/// MLS points as `x y z nx ny nz r` lines. The scaffold travels in comment
/// lines (`# scaffold <depth>`, `# octant <key>`) and each point line ends
/// with `# <host>`, so plain point readers still accept the file.
void write_mls(const fs::path& path, const MlsPointSet& set);
/// Restores the scaffold when present; otherwise builds one at
/// `fallback_depth` from the positions, hosting each point in its octant.
MlsPointSet read_mls(const fs::path& path, int fallback_depth = 6);

/// Binary SDF grid: "IMLS", u32 version (1), u32 R, 6 x f32 bounds, then
/// R^3 f32 values, x-major, little-endian.
void write_sdf(const fs::path& path, const SdfGrid& grid);
SdfGrid read_sdf(const fs::path& path);

/// "IMLF", u32 resolution, u32 count, then (u32 cell, 8 x f32) records.
void write_band_dump(const fs::path& path, int resolution, const std::vector<BandRecord>& records);

void write_text(const fs::path& path, const std::string& text);

}  // namespace octimls
