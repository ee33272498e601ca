#include "ngash/shading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "ngash/errors.hpp"
#include "ngash/parallel.hpp"
#include "ngash/text_io.hpp"

namespace ngash::shading {

VertexColors shade(const TransferMatrix& transfer, const sh::LightCoefficients& light,
                   double intensity) {
  if (transfer.meta.bands != sh::kBands || light.bands != sh::kBands)
    throw ContractError("shading needs 3-band transfer and light");
  if (light.values.rows() != sh::kBasisCount)
    throw ContractError("light must have 9 rows, got " + std::to_string(light.values.rows()));
  const Eigen::Index n = transfer.rows.rows();
  VertexColors out(n, 3);
  // Multiplying by the reciprocal keeps P=255, L=1/9 exactly at 1.
  const double scale = intensity * (1.0 / 255.0);
  parallel_for(std::size_t(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (int k = 0; k < 3; ++k) {
        double acc = 0.0;
        for (int j = 0; j < sh::kBasisCount; ++j)
          acc += transfer.rows(Eigen::Index(i), 3 * j + k) * light.values(j, k);
        out(Eigen::Index(i), k) = scale * acc;
      }
    }
  });
  return out;
}

std::uint64_t light_hash(const sh::LightCoefficients& light) {
  std::vector<double> v;
  v.push_back(double(light.bands));
  for (Eigen::Index j = 0; j < light.values.rows(); ++j)
    for (int k = 0; k < 3; ++k) v.push_back(light.values(j, k));
  return fnv1a({reinterpret_cast<const std::uint8_t*>(v.data()), v.size() * sizeof(double)});
}

bool needs_update(const ShadeCache& cache, const Mesh& mesh, const sh::LightCoefficients& light) {
  return !cache.valid || cache.geometry != geometry_hash(mesh) || cache.light != light_hash(light);
}

const VertexColors& shade_cached(ShadeCache& cache, const Mesh& mesh,
                                 const TransferMatrix& transfer,
                                 const sh::LightCoefficients& light, double intensity,
                                 bool* recomputed) {
  const bool stale = needs_update(cache, mesh, light) || cache.intensity != intensity;
  if (stale) {
    if (transfer.vertex_count() != mesh.vertex_count())
      throw ContractError("transfer rows (" + std::to_string(transfer.vertex_count()) +
                          ") != mesh vertices (" + std::to_string(mesh.vertex_count()) + ")");
    cache.colors = shade(transfer, light, intensity);
    cache.geometry = geometry_hash(mesh);
    cache.light = light_hash(light);
    cache.intensity = intensity;
    cache.valid = true;
  }
  if (recomputed) *recomputed = stale;
  return cache.colors;
}

std::string format_colors(const VertexColors& colors) {
  std::string out;
  for (Eigen::Index i = 0; i < colors.rows(); ++i) {
    out += format_double(colors(i, 0)) + " " + format_double(colors(i, 1)) + " " +
           format_double(colors(i, 2)) + "\n";
  }
  return out;
}

void write_colors_file(const std::filesystem::path& path, const VertexColors& colors) {
  write_text_file(path, format_colors(colors));
}

VertexColors parse_colors(const std::string& text) {
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto row = parse_doubles(t, line_no);
    if (row.size() != 3) throw ParseError("expected 3 color values", line_no);
    values.insert(values.end(), row.begin(), row.end());
  }
  VertexColors out(Eigen::Index(values.size() / 3), 3);
  for (std::size_t i = 0; i < values.size(); ++i) out.data()[i] = values[i];
  return out;
}

VertexColors read_colors_file(const std::filesystem::path& path) {
  return parse_colors(read_text_file(path));
}

std::string render_ppm(const Mesh& mesh, const VertexColors& colors, int size) {
  if (size < 1) throw ContractError("image size must be positive");
  if (std::size_t(colors.rows()) != mesh.vertex_count())
    throw ContractError("color rows do not match mesh vertices");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double extent = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});
  const double scale = 0.9 * size / extent;
  const double cx = 0.5 * (lo.x() + hi.x()), cy = 0.5 * (lo.y() + hi.y());
  auto to_px = [&](const Vec3& p) {
    return Eigen::Vector2d(0.5 * size + (p.x() - cx) * scale, 0.5 * size - (p.y() - cy) * scale);
  };

  std::vector<double> depth(std::size_t(size) * size, -std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> rgb(std::size_t(size) * size * 3, 0);
  for (const auto& tri : mesh.triangles) {
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    const auto pa = to_px(a), pb = to_px(b), pc = to_px(c);
    const double area = (pb.x() - pa.x()) * (pc.y() - pa.y()) - (pb.y() - pa.y()) * (pc.x() - pa.x());
    if (std::abs(area) < 1e-18) continue;
    Eigen::Vector3d col = (colors.row(tri[0]) + colors.row(tri[1]) + colors.row(tri[2])).transpose() / 3.0;
    std::array<std::uint8_t, 3> px;
    for (int k = 0; k < 3; ++k)
      px[k] = std::uint8_t(std::lround(std::clamp(col[k], 0.0, 1.0) * 255.0));
    const int x0 = std::max(0, int(std::floor(std::min({pa.x(), pb.x(), pc.x()}))));
    const int x1 = std::min(size - 1, int(std::ceil(std::max({pa.x(), pb.x(), pc.x()}))));
    const int y0 = std::max(0, int(std::floor(std::min({pa.y(), pb.y(), pc.y()}))));
    const int y1 = std::min(size - 1, int(std::ceil(std::max({pa.y(), pb.y(), pc.y()}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double sx = x + 0.5, sy = y + 0.5;
        const double w0 = ((pb.x() - sx) * (pc.y() - sy) - (pb.y() - sy) * (pc.x() - sx)) / area;
        const double w1 = ((pc.x() - sx) * (pa.y() - sy) - (pc.y() - sy) * (pa.x() - sx)) / area;
        const double w2 = 1.0 - w0 - w1;
        if (w0 < 0 || w1 < 0 || w2 < 0) continue;
        const double z = w0 * a.z() + w1 * b.z() + w2 * c.z();
        const std::size_t idx = std::size_t(y) * size + x;
        if (z <= depth[idx]) continue;
        depth[idx] = z;
        std::copy(px.begin(), px.end(), rgb.begin() + std::ptrdiff_t(3 * idx));
      }
    }
  }
  std::string out = "P6\n" + std::to_string(size) + " " + std::to_string(size) + "\n255\n";
  out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
  return out;
}

}  // namespace ngash::shading
