#include "ngash/weights_io.hpp"

#include <bit>
#include <charconv>
#include <map>
#include <sstream>

#include "ngash/cga.hpp"
#include "ngash/errors.hpp"
#include "ngash/text_io.hpp"

namespace ngash::neural {

namespace {

constexpr const char* kFormat = "ngash-weights";
constexpr int kVersion = 1;

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) out += format_double(v[i]);
    else out += std::to_string(v[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

std::uint64_t tensor_hash(const Tensor& t) {
  const auto bytes = tensor_bytes(t);
  return fnv1a(bytes);
}

struct ManifestTensor {
  std::string name;
  std::int64_t rows = 0, cols = 0;
  std::string file;
  std::string hash;
};

struct Manifest {
  std::map<std::string, std::string> keys;
  std::vector<ManifestTensor> tensors;

  const std::string& get(const std::string& key) const {
    auto it = keys.find(key);
    if (it == keys.end()) throw FormatError("weights manifest lacks '" + key + "'");
    return it->second;
  }
};

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "tensor") {
      std::istringstream fields(value);
      ManifestTensor t;
      if (!(fields >> t.name >> t.rows >> t.cols >> t.file >> t.hash) || t.rows < 0 ||
          t.cols < 0)
        throw ParseError("malformed tensor entry", line_no);
      m.tensors.push_back(std::move(t));
    } else {
      m.keys[key] = value;
    }
  }
  return m;
}

}  // namespace

std::vector<std::uint8_t> tensor_bytes(const Tensor& t) {
  std::vector<std::uint8_t> out(t.values.size() * 4);
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(t.values[i]);
    for (int b = 0; b < 4; ++b) out[4 * i + b] = std::uint8_t(bits >> (8 * b));
  }
  return out;
}

std::vector<float> floats_from_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4 != 0)
    throw IntegrityError("float32 blob length " + std::to_string(bytes.size()) +
                         " is not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= std::uint32_t(bytes[4 * i + b]) << (8 * b);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

WeightsPackage pack_weights(const ModelWeights& weights) {
  weights.check();
  ModelWeights w = weights;  // all_tensors needs mutable storage
  WeightsPackage pkg;
  for (const auto& v : all_tensors(w)) {
    Tensor t;
    t.name = v.name;
    t.rows = v.rows;
    t.cols = v.cols;
    t.values.resize(std::size_t(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) t.values[std::size_t(i)] = float(v.data[i]);
    pkg.tensors.push_back(std::move(t));
  }

  std::ostringstream m;
  m << "format=" << kFormat << "\n";
  m << "version=" << kVersion << "\n";
  m << "architecture=mlp\n";
  m << "widths=" << join(w.widths()) << "\n";
  m << "activation=silu\n";
  m << "dropout=" << join(w.dropout) << "\n";
  m << "batchnorm_eps=" << format_double(kBatchNormEps) << "\n";
  m << "batchnorm_momentum=" << format_double(kBatchNormMomentum) << "\n";
  m << "input=cga-motor blade_order=graded-lexicographic\n";
  m << "blade_hash=" << cga::blade_order_hash() << "\n";
  m << "output=sh-transfer layout=3j+k bands=3\n";
  m << "target_normalization=standardize\n";
  m << "seed=" << w.seed << "\n";
  m << "dtype=float32-le\n";
  for (const auto& [k, v] : w.notes) m << "note." << k << "=" << v << "\n";
  for (const auto& t : pkg.tensors)
    m << "tensor=" << t.name << " " << t.rows << " " << t.cols << " " << t.name << ".f32 "
      << hex64(tensor_hash(t)) << "\n";
  pkg.manifest = m.str();
  return pkg;
}

namespace {

template <typename T>
T manifest_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size())
    throw FormatError("weights manifest: bad " + key + " value '" + text + "'");
  return value;
}

}  // namespace

ModelWeights unpack_weights(const WeightsPackage& pkg) {
  const Manifest m = parse_manifest(pkg.manifest);
  if (m.get("format") != kFormat)
    throw FormatError("not an ngash weights manifest (format=" + m.get("format") + ")");
  if (m.get("version") != std::to_string(kVersion))
    throw IncompatibilityError("unsupported weights version " + m.get("version"));
  if (m.get("blade_hash") != cga::blade_order_hash())
    throw IncompatibilityError("weights were trained with a different blade ordering (" +
                               m.get("blade_hash") + " vs " + cga::blade_order_hash() + ")");

  std::vector<int> widths;
  for (const auto& s : split(m.get("widths"), ',')) widths.push_back(manifest_number<int>("widths", s));
  for (int width : widths)
    if (width < 1) throw FormatError("weights manifest: layer widths must be positive");
  if (widths.size() < 2 || widths.front() != kInputWidth || widths.back() != kOutputWidth)
    throw IncompatibilityError("weights widths " + m.get("widths") +
                               " do not map 32 inputs to 27 outputs");
  Architecture arch;
  arch.hidden.assign(widths.begin() + 1, widths.end() - 1);
  arch.dropout.clear();
  for (const auto& s : split(m.get("dropout"), ',')) arch.dropout.push_back(manifest_number<double>("dropout", s));
  if (arch.dropout.size() != arch.hidden.size())
    throw FormatError("weights manifest dropout count does not match hidden layers");

  ModelWeights w = init_model(0, arch);
  w.seed = manifest_number<std::uint64_t>("seed", m.get("seed"));
  for (const auto& [k, v] : m.keys)
    if (k.rfind("note.", 0) == 0) w.notes.emplace_back(k.substr(5), v);

  auto views = all_tensors(w);
  if (m.tensors.size() != views.size() || pkg.tensors.size() != views.size())
    throw IntegrityError("expected " + std::to_string(views.size()) + " tensors, manifest lists " +
                         std::to_string(m.tensors.size()) + ", package holds " +
                         std::to_string(pkg.tensors.size()));
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& decl = m.tensors[i];
    const Tensor& t = pkg.tensors[i];
    auto& v = views[i];
    if (decl.name != v.name)
      throw IntegrityError("tensor " + std::to_string(i) + " is '" + decl.name + "', expected '" +
                           v.name + "'");
    if (decl.rows != v.rows || decl.cols != v.cols)
      throw IncompatibilityError("tensor " + v.name + " declared " + std::to_string(decl.rows) +
                                 "x" + std::to_string(decl.cols) + ", architecture needs " +
                                 std::to_string(v.rows) + "x" + std::to_string(v.cols));
    if (std::int64_t(t.values.size()) != v.size())
      throw IntegrityError("tensor " + v.name + " holds " + std::to_string(t.values.size()) +
                           " values, expected " + std::to_string(v.size()));
    if (hex64(tensor_hash(t)) != decl.hash)
      throw IntegrityError("tensor " + v.name + " checksum mismatch");
    for (Eigen::Index k = 0; k < v.size(); ++k) v.data[k] = double(t.values[std::size_t(k)]);
  }
  try {
    w.check();
  } catch (const ContractError& e) {
    throw IntegrityError(std::string("loaded weights are invalid: ") + e.what());
  }
  return w;
}

void save_weights(const ModelWeights& w, const std::filesystem::path& dir) {
  const WeightsPackage pkg = pack_weights(w);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& t : pkg.tensors) {
    const auto bytes = tensor_bytes(t);
    write_text_file(dir / (t.name + ".f32"),
                    std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }
  write_text_file(dir / kManifestName, pkg.manifest);
}

ModelWeights load_weights(const std::filesystem::path& dir) {
  WeightsPackage pkg;
  pkg.manifest = read_text_file(dir / kManifestName);
  const Manifest m = parse_manifest(pkg.manifest);
  for (const auto& decl : m.tensors) {
    if (decl.file.find('/') != std::string::npos || decl.file.find("..") != std::string::npos)
      throw FormatError("tensor file name '" + decl.file + "' must be a plain name");
    Tensor t;
    t.name = decl.name;
    t.rows = decl.rows;
    t.cols = decl.cols;
    t.values = floats_from_bytes(read_binary_file(dir / decl.file));
    pkg.tensors.push_back(std::move(t));
  }
  return unpack_weights(pkg);
}

}  // namespace ngash::neural
