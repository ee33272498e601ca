#include "ngash/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "ngash/bvh.hpp"
#include "ngash/cga.hpp"
#include "ngash/errors.hpp"
#include "ngash/text_io.hpp"

namespace ngash::dataset {

namespace fs = std::filesystem;

namespace {

std::string relative_to(const fs::path& p, const fs::path& base) {
  if (base.empty()) return p.generic_string();
  std::error_code ec;
  const fs::path abs_p = fs::absolute(p, ec).lexically_normal();
  const fs::path abs_b = fs::absolute(base, ec).lexically_normal();
  const fs::path rel = abs_p.lexically_relative(abs_b);
  if (rel.empty() || *rel.begin() == "..") return abs_p.generic_string();
  return rel.generic_string();
}

fs::path resolve(const std::string& s, const fs::path& base) {
  fs::path p(s);
  return p.is_absolute() || base.empty() ? p : base / p;
}

std::vector<std::string> split_tabs(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = s.find('\t', start);
    out.push_back(s.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace

TransferMatrix run_oracle(const Mesh& mesh, const OracleConfig& config) {
  const sh::SampleSet samples = sh::generate_samples(config.sqrt_n, config.seed, config.mode);
  if (config.shadowed) {
    const Bvh bvh = build_bvh(mesh);
    return transfer_shadowed(mesh, bvh, samples);
  }
  return transfer_unshadowed(mesh, samples);
}

Manifest generate(const fs::path& mesh_dir, const fs::path& out_dir, const OracleConfig& config) {
  std::error_code ec;
  if (!fs::is_directory(mesh_dir, ec))
    throw IoError("mesh directory not found: " + mesh_dir.string());
  std::vector<fs::path> meshes;
  for (const auto& e : fs::directory_iterator(mesh_dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".obj") meshes.push_back(e.path());
  std::sort(meshes.begin(), meshes.end());
  if (meshes.empty()) throw DataError("no .obj meshes in " + mesh_dir.string());
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.oracle = config;
  m.blade_hash = cga::blade_order_hash();
  for (const auto& path : meshes) {
    try {
      Mesh mesh = ensure_normals(load_obj(path));
      validate(mesh);
      const TransferMatrix t = run_oracle(mesh, config);
      const fs::path coeffs = out_dir / (path.stem().string() + ".coeffs");
      write_transfer_file(coeffs, t);
      m.entries.push_back({path, coeffs, mesh.vertex_count()});
    } catch (const DataError& e) {
      m.failures.emplace_back(path.string(), e.what());
    }
  }
  if (m.entries.empty()) throw DataError("no mesh in " + mesh_dir.string() + " could be processed");
  write_manifest(out_dir / kManifestName, m);
  return m;
}

std::string format_manifest(const Manifest& m, const fs::path& base_dir) {
  std::ostringstream out;
  out << "format=ngash-dataset\n";
  out << "version=1\n";
  out << "sqrt_n=" << m.oracle.sqrt_n << "\n";
  out << "samples=" << m.oracle.sqrt_n * m.oracle.sqrt_n << "\n";
  out << "mode=" << sh::to_string(m.oracle.mode) << "\n";
  out << "shadowed=" << (m.oracle.shadowed ? 1 : 0) << "\n";
  out << "sample_seed=" << m.oracle.seed << "\n";
  out << "blade_hash=" << m.blade_hash << "\n";
  out << "split_seed=" << m.split_seed << "\n";
  out << "split_fraction=" << format_double(m.split_fraction) << "\n";
  for (const auto& e : m.entries)
    out << "mesh=" << relative_to(e.mesh, base_dir) << "\t"
        << relative_to(e.coefficients, base_dir) << "\t" << e.vertex_count << "\n";
  for (const auto& [path, why] : m.failures) {
    std::string reason = why;
    std::replace(reason.begin(), reason.end(), '\n', ' ');
    out << "# skipped " << path << ": " << reason << "\n";
  }
  return out.str();
}

Manifest parse_manifest(const std::string& text, const fs::path& base_dir) {
  Manifest m;
  bool have_format = false, have_hash = false;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line)[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = line.substr(eq + 1);
    try {
      if (key == "format") {
        if (trim(value) != "ngash-dataset") throw FormatError("not a dataset manifest");
        have_format = true;
      } else if (key == "sqrt_n") m.oracle.sqrt_n = std::stoi(value);
      else if (key == "mode") m.oracle.mode = sh::sample_mode_from_string(trim(value));
      else if (key == "shadowed") m.oracle.shadowed = trim(value) == "1";
      else if (key == "sample_seed") m.oracle.seed = std::stoull(value);
      else if (key == "blade_hash") { m.blade_hash = trim(value); have_hash = true; }
      else if (key == "split_seed") m.split_seed = std::stoull(value);
      else if (key == "split_fraction") m.split_fraction = std::stod(value);
      else if (key == "mesh") {
        const auto f = split_tabs(value);
        if (f.size() != 3) throw ParseError("mesh entry needs mesh, coefficients, vertex count", line_no);
        m.entries.push_back({resolve(f[0], base_dir), resolve(f[1], base_dir),
                             std::size_t(std::stoull(f[2]))});
      }
    } catch (const std::logic_error&) {
      throw ParseError("bad value for '" + key + "'", line_no);
    }
  }
  if (!have_format) throw FormatError("dataset manifest lacks format line");
  if (!have_hash) throw FormatError("dataset manifest lacks blade_hash");
  if (m.entries.empty()) throw FormatError("dataset manifest lists no meshes");
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  write_text_file(path, format_manifest(manifest, path.parent_path()));
}

Manifest read_manifest(const fs::path& path) {
  return parse_manifest(read_text_file(path), path.parent_path());
}

std::vector<neural::Sample> load_pairs(const Manifest& m) {
  const std::string current = cga::blade_order_hash();
  if (m.blade_hash != current)
    throw IncompatibilityError("dataset blade hash " + m.blade_hash +
                               " does not match this build (" + current + ")");
  std::vector<neural::Sample> out;
  for (const auto& e : m.entries) {
    const Mesh mesh = ensure_normals(load_obj(e.mesh));
    TransferMatrix t;
    try {
      t = read_transfer_file(e.coefficients);
    } catch (const ParseError& err) {
      throw IntegrityError(e.coefficients.string() + ": truncated or corrupt (" + err.what() + ")");
    }
    if (!t.meta.blade_hash.empty() && t.meta.blade_hash != current)
      throw IncompatibilityError(e.coefficients.string() + ": blade hash mismatch");
    if (mesh.vertex_count() != e.vertex_count)
      throw IntegrityError(e.mesh.string() + ": " + std::to_string(mesh.vertex_count()) +
                           " vertices, manifest says " + std::to_string(e.vertex_count));
    if (t.vertex_count() != mesh.vertex_count())
      throw IntegrityError(e.coefficients.string() + ": " + std::to_string(t.vertex_count()) +
                           " rows for " + std::to_string(mesh.vertex_count()) + " vertices");
    const neural::Matrix x = neural::encode_mesh(mesh);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      neural::Sample s;
      for (int k = 0; k < neural::kInputWidth; ++k) s.input[k] = x(i, k);
      for (int k = 0; k < neural::kOutputWidth; ++k) s.target[k] = t.rows(i, k);
      out.push_back(s);
    }
  }
  return out;
}

std::pair<std::vector<neural::Sample>, std::vector<neural::Sample>> split(
    const std::vector<neural::Sample>& pairs, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ContractError("split fraction must lie in (0,1)");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = std::size_t(std::llround(fraction * double(pairs.size())));
  std::pair<std::vector<neural::Sample>, std::vector<neural::Sample>> out;
  for (std::size_t i = 0; i < order.size(); ++i)
    (i < n_train ? out.first : out.second).push_back(pairs[order[i]]);
  return out;
}

}  // namespace ngash::dataset
