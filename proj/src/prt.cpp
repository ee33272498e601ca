#include "ngash/prt.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "ngash/cga.hpp"
#include "ngash/errors.hpp"
#include "ngash/parallel.hpp"
#include "ngash/text_io.hpp"

namespace ngash {

namespace {

template <class Visible>
TransferMatrix integrate(const Mesh& mesh, const sh::SampleSet& samples,
                         bool shadowed, Visible&& visible) {
  if (!mesh.has_normals())
    throw ContractError("transfer: mesh normals are missing");
  const std::size_t n = mesh.vertex_count();
  TransferMatrix out;
  out.rows = TransferRows::Zero(static_cast<Eigen::Index>(n), kTransferWidth);
  const double weight = samples.weight();

  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t v = begin; v < end; ++v) {
      const Vec3& normal = mesh.normals[v];
      sh::Basis9 acc{};
      // Fixed sample order per vertex: bitwise independent of threading.
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const Vec3& w = samples.directions[i];
        double c = normal.dot(w);
        if (c <= 0.0) continue;
        if (!visible(v, w)) continue;
        const auto& y = samples.sh_values[i];
        for (int j = 0; j < sh::kBasisCount; ++j) acc[j] += c * y[j];
      }
      const Vec3 rho =
          v < mesh.albedo.size() ? mesh.albedo[v] : Vec3::Ones();
      for (int j = 0; j < sh::kBasisCount; ++j)
        for (int k = 0; k < 3; ++k)
          out.rows(static_cast<Eigen::Index>(v), 3 * j + k) =
              (rho[k] / std::numbers::pi) * (weight * acc[j]);
    }
  });

  out.meta.mode = samples.mode;
  out.meta.sqrt_n = samples.sqrt_n;
  out.meta.sample_count = samples.size();
  out.meta.seed = samples.seed;
  out.meta.shadowed = shadowed;
  out.meta.source = "oracle";
  out.meta.blade_hash = cga::blade_order_hash();
  return out;
}

std::string kv(const std::string& key, const std::string& value) {
  return key + "=" + value;
}

}  // namespace

double self_intersection_offset(const Mesh& mesh) {
  return 1e-4 * bounding_box_diagonal(mesh);
}

TransferMatrix transfer_unshadowed(const Mesh& mesh, const sh::SampleSet& samples) {
  return integrate(mesh, samples, false,
                   [](std::size_t, const Vec3&) { return true; });
}

TransferMatrix transfer_shadowed(const Mesh& mesh, const Bvh& bvh,
                                 const sh::SampleSet& samples) {
  const double eps = self_intersection_offset(mesh);
  return integrate(mesh, samples, true, [&](std::size_t v, const Vec3& w) {
    const Vec3 origin = mesh.vertices[v] + eps * mesh.normals[v];
    return !bvh.occluded(origin, w, eps);
  });
}

std::vector<std::string> TransferMetadata::to_comments() const {
  std::string line = "ngash-transfer " + kv("bands", std::to_string(bands)) +
                     " " + kv("mode", sh::to_string(mode)) + " " +
                     kv("sqrt_n", std::to_string(sqrt_n)) + " " +
                     kv("samples", std::to_string(sample_count)) + " " +
                     kv("seed", std::to_string(seed)) + " " +
                     kv("shadowed", shadowed ? "1" : "0") + " " +
                     kv("source", source) + " " + kv("albedo", albedo) + " " +
                     kv("blade_hash", blade_hash);
  return {line};
}

std::string format_transfer(const TransferMatrix& transfer) {
  std::string out;
  out.reserve(transfer.vertex_count() * kTransferWidth * 22 + 256);
  for (const auto& c : transfer.meta.to_comments()) out += "# " + c + "\n";
  for (Eigen::Index i = 0; i < transfer.rows.rows(); ++i) {
    for (int j = 0; j < kTransferWidth; ++j) {
      if (j) out += ' ';
      out += format_double(transfer.rows(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_transfer_file(const std::filesystem::path& path,
                         const TransferMatrix& transfer) {
  write_text_file(path, format_transfer(transfer));
}

TransferMatrix parse_transfer(const std::string& text) {
  TransferMatrix out;
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line[0] == '#') {
      std::istringstream fields(line.substr(1));
      std::string tok;
      while (fields >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
        try {
          if (key == "bands") out.meta.bands = std::stoi(value);
          else if (key == "mode") out.meta.mode = sh::sample_mode_from_string(value);
          else if (key == "sqrt_n") out.meta.sqrt_n = std::stoi(value);
          else if (key == "samples") out.meta.sample_count = std::stoull(value);
          else if (key == "seed") out.meta.seed = std::stoull(value);
          else if (key == "shadowed") out.meta.shadowed = value == "1";
          else if (key == "source") out.meta.source = value;
          else if (key == "albedo") out.meta.albedo = value;
          else if (key == "blade_hash") out.meta.blade_hash = value;
        } catch (const std::exception&) {
          throw ParseError("bad metadata value for '" + key + "'", line_no);
        }
      }
      continue;
    }
    std::string t = trim(line);
    if (t.empty()) continue;
    auto v = parse_doubles(t, line_no);
    if (v.size() != kTransferWidth)
      throw ParseError("expected 27 coefficients, got " + std::to_string(v.size()),
                       line_no);
    rows.push_back(std::move(v));
  }
  out.rows = TransferRows::Zero(static_cast<Eigen::Index>(rows.size()), kTransferWidth);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < kTransferWidth; ++j)
      out.rows(static_cast<Eigen::Index>(i), j) = rows[i][j];
  return out;
}

TransferMatrix read_transfer_file(const std::filesystem::path& path) {
  try {
    return parse_transfer(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

}  // namespace ngash
