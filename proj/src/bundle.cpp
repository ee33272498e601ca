#include "ngash/bundle.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <json.hpp>

#include "ngash/cga.hpp"
#include "ngash/errors.hpp"
#include "ngash/weights_io.hpp"

namespace ngash::bundle {

using json = nlohmann::json;
namespace b64 = boost::beast::detail::base64;

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  // The decoder stops at padding; everything before it must be consumed.
  std::size_t body = text.size();
  while (body > 0 && text.size() - body < 2 && text[body - 1] == '=') --body;
  const auto [written, read] = b64::decode(out.data(), text.data(), text.size());
  if (text.size() % 4 != 0 || read != body) throw FormatError("invalid base64 payload");
  out.resize(written);
  return out;
}

void validate(const Bundle& b) {
  std::vector<std::string> problems;
  const std::size_t n = b.mesh.vertex_count();
  if (n == 0) problems.push_back("mesh has no vertices");
  if (b.mesh.normals.size() != n)
    problems.push_back("normals: " + std::to_string(b.mesh.normals.size()) + " for " +
                       std::to_string(n) + " vertices");
  for (std::size_t t = 0; t < b.mesh.triangles.size(); ++t)
    for (auto idx : b.mesh.triangles[t])
      if (idx >= n) {
        problems.push_back("triangle " + std::to_string(t) + " references vertex " +
                           std::to_string(idx));
        break;
      }
  if (b.transfer.vertex_count() != n)
    problems.push_back("transfer: " + std::to_string(b.transfer.vertex_count()) + " rows for " +
                       std::to_string(n) + " vertices");
  if (b.lights.empty()) problems.push_back("no light sets");
  for (const auto& l : b.lights) {
    if (l.name.empty()) problems.push_back("light set with empty name");
    if (l.light.values.rows() != sh::kBasisCount)
      problems.push_back("light '" + l.name + "': " + std::to_string(l.light.values.rows()) +
                         " rows, need 9");
  }
  for (std::size_t i = 0; i < b.lights.size(); ++i)
    for (std::size_t j = i + 1; j < b.lights.size(); ++j)
      if (b.lights[i].name == b.lights[j].name)
        problems.push_back("duplicate light name '" + b.lights[i].name + "'");
  if (b.weights) {
    try {
      b.weights->check();
    } catch (const ContractError& e) {
      problems.push_back(std::string("weights: ") + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = "bundle is inconsistent:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ValidationError(msg);
  }
}

std::string to_json(const Bundle& b) {
  validate(b);
  json doc;
  doc["format"] = "ngash-bundle";
  doc["version"] = 1;

  json meta = json::object();
  for (const auto& [k, v] : b.metadata) meta[k] = v;
  meta["blade_hash"] = cga::blade_order_hash();
  meta["bands"] = sh::kBands;
  meta["transfer_layout"] = "3j+k";
  meta["color_scale"] = "intensity/255";
  doc["metadata"] = meta;

  json positions = json::array(), normals = json::array(), triangles = json::array();
  for (const auto& v : b.mesh.vertices)
    for (int k = 0; k < 3; ++k) positions.push_back(v[k]);
  for (const auto& v : b.mesh.normals)
    for (int k = 0; k < 3; ++k) normals.push_back(v[k]);
  for (const auto& t : b.mesh.triangles)
    for (auto idx : t) triangles.push_back(idx);
  doc["mesh"] = {{"vertex_count", b.mesh.vertex_count()},
                 {"triangle_count", b.mesh.triangles.size()},
                 {"positions", positions},
                 {"normals", normals},
                 {"triangles", triangles}};

  json rows = json::array();
  for (Eigen::Index i = 0; i < b.transfer.rows.rows(); ++i)
    for (int k = 0; k < kTransferWidth; ++k) rows.push_back(b.transfer.rows(i, k));
  doc["transfer"] = {{"rows", b.transfer.vertex_count()},
                     {"cols", kTransferWidth},
                     {"source", b.transfer.meta.source},
                     {"values", rows}};

  json lights = json::array();
  for (const auto& l : b.lights) {
    json values = json::array();
    for (int j = 0; j < sh::kBasisCount; ++j)
      for (int k = 0; k < 3; ++k) values.push_back(l.light.values(j, k));
    lights.push_back({{"name", l.name}, {"values", values}});
  }
  doc["lights"] = lights;

  if (b.weights) {
    const auto pkg = neural::pack_weights(*b.weights);
    json tensors = json::array();
    for (const auto& t : pkg.tensors)
      tensors.push_back({{"name", t.name},
                         {"rows", t.rows},
                         {"cols", t.cols},
                         {"data", base64_encode(neural::tensor_bytes(t))}});
    doc["weights"] = {{"manifest", pkg.manifest}, {"tensors", tensors}};
  } else {
    doc["weights"] = nullptr;
  }
  return doc.dump();
}

Bundle from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("bundle is not valid JSON: ") + e.what());
  }
  Bundle b;
  try {
    if (doc.at("format") != "ngash-bundle") throw FormatError("not an ngash bundle");
    for (const auto& [k, v] : doc.at("metadata").items())
      if (v.is_string()) b.metadata[k] = v.get<std::string>();
    const auto& m = doc.at("mesh");
    const auto pos = m.at("positions").get<std::vector<double>>();
    const auto nrm = m.at("normals").get<std::vector<double>>();
    const auto tri = m.at("triangles").get<std::vector<std::uint32_t>>();
    if (pos.size() % 3 || nrm.size() % 3 || tri.size() % 3)
      throw ValidationError("mesh arrays must hold triples");
    for (std::size_t i = 0; i < pos.size(); i += 3) b.mesh.vertices.emplace_back(pos[i], pos[i + 1], pos[i + 2]);
    for (std::size_t i = 0; i < nrm.size(); i += 3) b.mesh.normals.emplace_back(nrm[i], nrm[i + 1], nrm[i + 2]);
    for (std::size_t i = 0; i < tri.size(); i += 3) b.mesh.triangles.push_back({tri[i], tri[i + 1], tri[i + 2]});
    b.mesh.albedo.assign(b.mesh.vertices.size(), Vec3::Ones());
    if (m.at("vertex_count").get<std::size_t>() != b.mesh.vertex_count())
      throw ValidationError("mesh vertex_count disagrees with positions");

    const auto& t = doc.at("transfer");
    const auto values = t.at("values").get<std::vector<double>>();
    const auto n = t.at("rows").get<std::size_t>();
    if (values.size() != n * kTransferWidth)
      throw ValidationError("transfer values do not match rows x 27");
    b.transfer.rows.resize(Eigen::Index(n), kTransferWidth);
    for (std::size_t i = 0; i < values.size(); ++i) b.transfer.rows.data()[i] = values[i];
    b.transfer.meta.source = t.at("source").get<std::string>();

    for (const auto& l : doc.at("lights")) {
      NamedLight nl;
      nl.name = l.at("name").get<std::string>();
      const auto v = l.at("values").get<std::vector<double>>();
      if (v.size() != 27)
        throw ValidationError("light '" + nl.name + "' has " + std::to_string(v.size()) +
                              " values, need 27");
      for (int j = 0; j < 9; ++j)
        for (int k = 0; k < 3; ++k) nl.light.values(j, k) = v[std::size_t(3 * j + k)];
      b.lights.push_back(std::move(nl));
    }
    if (!doc.at("weights").is_null()) {
      const auto& w = doc.at("weights");
      neural::WeightsPackage pkg;
      pkg.manifest = w.at("manifest").get<std::string>();
      for (const auto& jt : w.at("tensors")) {
        neural::Tensor tensor;
        tensor.name = jt.at("name").get<std::string>();
        tensor.rows = jt.at("rows").get<std::int64_t>();
        tensor.cols = jt.at("cols").get<std::int64_t>();
        tensor.values = neural::floats_from_bytes(base64_decode(jt.at("data").get<std::string>()));
        pkg.tensors.push_back(std::move(tensor));
      }
      b.weights = neural::unpack_weights(pkg);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bundle schema error: ") + e.what());
  }
  validate(b);
  return b;
}

}  // namespace ngash::bundle
