#include "octimls/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace octimls {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw Error("io", "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
  if (!out) throw Error("io", "cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw Error("io", "write failed for " + path.string());
}

std::string where(const fs::path& path, std::size_t line) { return path.string() + ":" + std::to_string(line); }

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view s, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    throw Error("invalid-format", where(path, line) + ": bad number '" + std::string(s) + "'");
  return v;
}

template <typename Int>
Int parse_int(std::string_view s, const fs::path& path, std::size_t line) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("invalid-format", where(path, line) + ": bad integer '" + std::string(s) + "'");
  return v;
}

std::string vec_text(const Vec3& v) {
  return format_number(v.x()) + ' ' + format_number(v.y()) + ' ' + format_number(v.z());
}

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const fs::path& path) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw Error("invalid-format", path.string() + ": truncated");
  return value;
}

}  // namespace

TriangleMesh read_obj(const fs::path& path) {
  auto in = open_in(path);
  TriangleMesh mesh;
  std::vector<Vec3> normals;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto tok = split(line);
    if (tok.empty()) continue;
    if (tok[0] == "v" || tok[0] == "vn") {
      if (tok.size() < 4) throw Error("invalid-format", where(path, n) + ": vertex needs three coordinates");
      const Vec3 v(parse_double(tok[1], path, n), parse_double(tok[2], path, n), parse_double(tok[3], path, n));
      (tok[0] == "v" ? mesh.vertices : normals).push_back(v);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw Error("invalid-format", where(path, n) + ": face needs three vertices");
      std::vector<int> face;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        const auto idx = tok[i].substr(0, tok[i].find('/'));
        long v = parse_int<long>(idx, path, n);
        if (v < 0) v += static_cast<long>(mesh.vertices.size()) + 1;
        if (v < 1 || v > static_cast<long>(mesh.vertices.size()))
          throw Error("invalid-format", where(path, n) + ": face index out of range");
        face.push_back(static_cast<int>(v - 1));
      }
      for (std::size_t i = 1; i + 1 < face.size(); ++i) mesh.triangles.push_back({face[0], face[i], face[i + 1]});
    }
  }
  if (normals.size() == mesh.vertices.size() && !normals.empty()) {
    bool ok = true;
    for (auto& nrm : normals) {
      if (!(nrm.norm() > 0.0)) ok = false;
      else nrm.normalize();
    }
    if (ok) mesh.normals = std::move(normals);
  }
  mesh.validate();
  return mesh;
}

void write_obj(const fs::path& path, const TriangleMesh& mesh) {
  auto out = open_out(path);
  for (const auto& v : mesh.vertices) out << "v " << vec_text(v) << '\n';
  const bool with_normals = mesh.normals.size() == mesh.vertices.size() && !mesh.normals.empty();
  if (with_normals)
    for (const auto& v : mesh.normals) out << "vn " << vec_text(v) << '\n';
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (int v : t) {
      out << ' ' << v + 1;
      if (with_normals) out << "//" << v + 1;
    }
    out << '\n';
  }
  finish(out, path);
}

namespace {

struct PointRows {
  std::vector<std::vector<double>> rows;
  std::vector<std::string> comments;          // full-line comments, text after '#'
  std::vector<std::string> trailing;          // per row, text after '#'
};

PointRows read_rows(const fs::path& path) {
  auto in = open_in(path);
  PointRows out;
  std::string line;
  std::size_t n = 0, columns = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string comment;
    if (auto hash = line.find('#'); hash != std::string::npos) {
      comment = line.substr(hash + 1);
      line.resize(hash);
    }
    const auto tok = split(line);
    if (tok.empty()) {
      if (!comment.empty()) out.comments.push_back(comment);
      continue;
    }
    if (columns == 0) columns = tok.size();
    if (tok.size() != columns || (columns != 3 && columns != 6 && columns != 7))
      throw Error("invalid-format", where(path, n) + ": expected a consistent 3, 6 or 7 columns");
    std::vector<double> row;
    for (auto t : tok) row.push_back(parse_double(t, path, n));
    out.rows.push_back(std::move(row));
    out.trailing.push_back(comment);
  }
  return out;
}

}  // namespace

OrientedPointCloud read_points(const fs::path& path) {
  const auto data = read_rows(path);
  OrientedPointCloud cloud;
  for (const auto& r : data.rows) {
    cloud.positions.emplace_back(r[0], r[1], r[2]);
    if (r.size() >= 6) cloud.normals.push_back(Vec3(r[3], r[4], r[5]));
    if (r.size() == 7) cloud.radii.push_back(r[6]);
  }
  for (auto& nrm : cloud.normals) {
    const double len = nrm.norm();
    if (!(len > 0.0)) throw Error("invalid-format", path.string() + ": zero-length normal");
    nrm /= len;
  }
  cloud.validate();
  return cloud;
}

void write_points(const fs::path& path, const OrientedPointCloud& cloud) {
  cloud.validate();
  auto out = open_out(path);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out << vec_text(cloud.positions[i]);
    if (cloud.has_normals()) out << ' ' << vec_text(cloud.normals[i]);
    if (cloud.has_radii()) out << ' ' << format_number(cloud.radii[i]);
    out << '\n';
  }
  finish(out, path);
}

void write_mls(const fs::path& path, const MlsPointSet& set) {
  auto out = open_out(path);
  if (const auto& octree = set.scaffold()) {
    out << "# scaffold " << octree->depth() << '\n';
    for (std::size_t k = 0; k < octree->num_finest(); ++k) out << "# octant " << octree->finest_key(k) << '\n';
  }
  for (const auto& p : set.points()) {
    out << vec_text(p.position) << ' ' << vec_text(p.normal) << ' ' << format_number(p.radius);
    if (set.scaffold()) out << " # " << p.host;
    out << '\n';
  }
  finish(out, path);
}

MlsPointSet read_mls(const fs::path& path, int fallback_depth) {
  const auto data = read_rows(path);
  if (data.rows.empty()) throw Error("empty-input", path.string() + ": no MLS points");
  if (data.rows.front().size() != 7) throw Error("invalid-format", path.string() + ": MLS lines need 7 columns");

  int depth = 0;
  std::vector<std::uint64_t> keys;
  for (const auto& c : data.comments) {
    const auto tok = split(c);
    if (tok.size() == 2 && tok[0] == "scaffold") depth = parse_int<int>(tok[1], path, 0);
    if (tok.size() == 2 && tok[0] == "octant") keys.push_back(parse_int<std::uint64_t>(tok[1], path, 0));
  }

  std::vector<MlsPoint> points(data.rows.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& r = data.rows[i];
    points[i].position = Vec3(r[0], r[1], r[2]);
    const Vec3 n(r[3], r[4], r[5]);
    if (!(n.norm() > 0.0)) throw Error("invalid-format", path.string() + ": zero-length normal");
    points[i].normal = n.normalized();
    points[i].radius = r[6];
  }

  std::shared_ptr<const Octree> octree;
  if (depth > 0) {
    if (!std::is_sorted(keys.begin(), keys.end()))
      throw Error("invalid-format", path.string() + ": octant keys must be ascending");
    octree = std::make_shared<const Octree>(octree_from_finest(depth, keys));
    if (octree->num_finest() != keys.size() && depth > 2)
      throw Error("invalid-format", path.string() + ": duplicate octant keys");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto tok = split(data.trailing[i]);
      if (tok.size() != 1) throw Error("invalid-format", path.string() + ": point line lacks its host octant");
      points[i].host = parse_int<std::uint32_t>(tok[0], path, 0);
    }
  } else {
    std::vector<Vec3> positions;
    for (const auto& p : points) positions.push_back(p.position);
    octree = std::make_shared<const Octree>(build_octree(positions, fallback_depth));
    for (auto& p : points)
      p.host = static_cast<std::uint32_t>(*octree->finest_index(octant_key(p.position, fallback_depth)));
  }
  return MlsPointSet(std::move(points), std::move(octree));
}

void write_sdf(const fs::path& path, const SdfGrid& grid) {
  auto out = open_out(path, true);
  out.write("IMLS", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(grid.resolution()));
  for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>(grid.bounds().min[a]));
  for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>(grid.bounds().max[a]));
  std::vector<float> values(grid.values().begin(), grid.values().end());
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  finish(out, path);
}

SdfGrid read_sdf(const fs::path& path) {
  auto in = open_in(path, true);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "IMLS", 4) != 0)
    throw Error("invalid-format", path.string() + ": not an SDF grid file");
  if (get<std::uint32_t>(in, path) != 1) throw Error("invalid-format", path.string() + ": unsupported version");
  const auto r = get<std::uint32_t>(in, path);
  if (r < 2 || r > 2048) throw Error("invalid-format", path.string() + ": implausible resolution");
  Bounds b;
  for (int a = 0; a < 3; ++a) b.min[a] = get<float>(in, path);
  for (int a = 0; a < 3; ++a) b.max[a] = get<float>(in, path);
  std::vector<float> raw(static_cast<std::size_t>(r) * r * r);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float))))
    throw Error("invalid-format", path.string() + ": truncated value block");
  if (in.peek() != std::char_traits<char>::eof()) throw Error("invalid-format", path.string() + ": trailing bytes");
  return SdfGrid(static_cast<int>(r), b, std::vector<double>(raw.begin(), raw.end()));
}

void write_band_dump(const fs::path& path, int resolution, const std::vector<BandRecord>& records) {
  auto out = open_out(path, true);
  out.write("IMLF", 4);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(resolution));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(records.size()));
  for (const auto& r : records) {
    put<std::uint32_t>(out, r.cell);
    for (float v : r.values) put<float>(out, v);
  }
  finish(out, path);
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  finish(out, path);
}

}  // namespace octimls
