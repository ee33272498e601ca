#include "ngash/mesh.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "ngash/errors.hpp"
#include "ngash/text_io.hpp"

namespace ngash {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_real(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(v))
    throw ParseError("invalid number '" + std::string(tok) + "'", line);
  return v;
}

// OBJ indices are 1-based; negative values count back from the end.
long resolve_index(std::string_view tok, std::size_t count, std::size_t line,
                   const char* what) {
  long raw = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), raw);
  if (ec != std::errc{} || p != tok.data() + tok.size() || raw == 0)
    throw ParseError(std::string("invalid ") + what + " index '" +
                         std::string(tok) + "'",
                     line);
  long idx = raw > 0 ? raw - 1 : static_cast<long>(count) + raw;
  if (idx < 0 || idx >= static_cast<long>(count))
    throw ParseError(std::string(what) + " index " + std::to_string(raw) +
                         " out of range",
                     line);
  return idx;
}

struct Corner {
  std::uint32_t vertex;
  long normal;  // -1 when absent
};

}  // namespace

Vec3 normalized_or_up(const Vec3& v) {
  double n = v.norm();
  if (!(n > 1e-12) || !std::isfinite(n)) return kUp;
  return v / n;
}

Mesh parse_obj(std::string_view text, ObjStats* stats) {
  ObjStats local;
  Mesh mesh;
  std::vector<Vec3> file_normals;
  std::vector<std::array<Corner, 3>> corners;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    auto tok = split_ws(line);
    if (tok.empty()) continue;

    if (tok[0] == "v") {
      if (tok.size() < 4) throw ParseError("vertex needs 3 coordinates", line_no);
      mesh.vertices.emplace_back(parse_real(tok[1], line_no),
                                 parse_real(tok[2], line_no),
                                 parse_real(tok[3], line_no));
    } else if (tok[0] == "vn") {
      if (tok.size() < 4) throw ParseError("normal needs 3 components", line_no);
      file_normals.emplace_back(parse_real(tok[1], line_no),
                                parse_real(tok[2], line_no),
                                parse_real(tok[3], line_no));
    } else if (tok[0] == "f") {
      if (tok.size() < 4)
        throw ParseError("face needs at least 3 vertices, got " +
                             std::to_string(tok.size() - 1),
                         line_no);
      std::vector<Corner> poly;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        std::string_view t = tok[i];
        auto s1 = t.find('/');
        Corner c{};
        c.vertex = static_cast<std::uint32_t>(resolve_index(
            t.substr(0, s1), mesh.vertices.size(), line_no, "vertex"));
        c.normal = -1;
        if (s1 != std::string_view::npos) {
          auto s2 = t.find('/', s1 + 1);
          if (s2 != std::string_view::npos && s2 + 1 < t.size())
            c.normal = resolve_index(t.substr(s2 + 1), file_normals.size(),
                                     line_no, "normal");
        }
        poly.push_back(c);
      }
      if (poly.size() > 3) ++local.polygons_split;
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        std::array<Corner, 3> tri{poly[0], poly[i], poly[i + 1]};
        if (tri[0].vertex == tri[1].vertex && tri[1].vertex == tri[2].vertex)
          throw ParseError("degenerate face with three identical indices",
                           line_no);
        corners.push_back(tri);
      }
    } else {
      ++local.ignored_records;
    }
  }

  if (mesh.vertices.empty()) throw FormatError("OBJ contains no vertices");
  if (corners.empty()) throw FormatError("OBJ contains no faces");

  bool all_normals = !file_normals.empty();
  mesh.triangles.reserve(corners.size());
  for (const auto& tri : corners) {
    mesh.triangles.push_back({tri[0].vertex, tri[1].vertex, tri[2].vertex});
    for (const auto& c : tri)
      if (c.normal < 0) all_normals = false;
  }

  if (all_normals) {
    // A vertex referenced with several normals gets their normalized mean.
    std::vector<Vec3> sum(mesh.vertices.size(), Vec3::Zero());
    std::vector<long> first(mesh.vertices.size(), -1);
    std::vector<bool> mixed(mesh.vertices.size(), false);
    for (const auto& tri : corners)
      for (const auto& c : tri) {
        if (first[c.vertex] < 0) {
          first[c.vertex] = c.normal;
        } else if (first[c.vertex] != c.normal) {
          mixed[c.vertex] = true;
        }
        sum[c.vertex] += normalized_or_up(file_normals[c.normal]);
      }
    mesh.normals.resize(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
      if (first[i] < 0)
        mesh.normals[i] = kUp;
      else if (!mixed[i])
        mesh.normals[i] = normalized_or_up(file_normals[first[i]]);
      else
        mesh.normals[i] = normalized_or_up(sum[i]);
    }
    local.normals_from_file = true;
  }

  mesh.albedo.assign(mesh.vertices.size(), Vec3::Ones());
  if (stats) *stats = local;
  return mesh;
}

Mesh load_obj(const std::filesystem::path& path, ObjStats* stats) {
  std::string text = read_text_file(path);
  try {
    return parse_obj(text, stats);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void save_obj(const Mesh& mesh, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& v : mesh.vertices)
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
        << format_double(v.z()) << '\n';
  bool normals = mesh.has_normals();
  if (normals)
    for (const auto& n : mesh.normals)
      out << "vn " << format_double(n.x()) << ' ' << format_double(n.y())
          << ' ' << format_double(n.z()) << '\n';
  for (const auto& t : mesh.triangles) {
    out << 'f';
    for (auto i : t) {
      out << ' ' << (i + 1);
      if (normals) out << "//" << (i + 1);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

Mesh compute_normals(Mesh mesh) {
  std::vector<Vec3> acc(mesh.vertices.size(), Vec3::Zero());
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    // |cross| is twice the area, so the sum is area weighted.
    Vec3 face = (b - a).cross(c - a);
    for (auto i : t) acc[i] += face;
  }
  mesh.normals.resize(mesh.vertices.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    mesh.normals[i] = normalized_or_up(acc[i]);
  if (mesh.albedo.size() != mesh.vertices.size())
    mesh.albedo.assign(mesh.vertices.size(), Vec3::Ones());
  return mesh;
}

Mesh ensure_normals(Mesh mesh) {
  if (mesh.has_normals()) return mesh;
  return compute_normals(std::move(mesh));
}

void validate(const Mesh& mesh) {
  std::string problems;
  auto fail = [&](const std::string& p) {
    if (!problems.empty()) problems += "; ";
    problems += p;
  };
  const std::size_t n = mesh.vertices.size();
  if (mesh.normals.size() != n)
    fail("normals " + std::to_string(mesh.normals.size()) + " != vertices " +
         std::to_string(n));
  if (mesh.albedo.size() != n)
    fail("albedo " + std::to_string(mesh.albedo.size()) + " != vertices " +
         std::to_string(n));
  for (std::size_t i = 0; i < mesh.normals.size(); ++i)
    if (std::abs(mesh.normals[i].norm() - 1.0) > 1e-6) {
      fail("normal " + std::to_string(i) + " is not unit length");
      break;
    }
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    if (t[0] >= n || t[1] >= n || t[2] >= n) {
      fail("triangle " + std::to_string(i) + " index out of range");
      break;
    }
    if (t[0] == t[1] && t[1] == t[2]) {
      fail("triangle " + std::to_string(i) + " is degenerate");
      break;
    }
  }
  if (!problems.empty()) throw ValidationError("invalid mesh: " + problems);
}

double bounding_box_diagonal(const Mesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  Vec3 lo = mesh.vertices.front(), hi = lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return (hi - lo).norm();
}

std::uint64_t geometry_hash(const Mesh& mesh) {
  auto bytes = [](const std::vector<Vec3>& v) {
    return std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(v.data()),
        v.size() * sizeof(Vec3));
  };
  std::uint64_t h = fnv1a(bytes(mesh.vertices));
  h = fnv1a(bytes(mesh.normals), h ^ 0x9e3779b97f4a7c15ull);
  return h;
}

}  // namespace ngash
