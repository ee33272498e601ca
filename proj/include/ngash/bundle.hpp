#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ngash/mesh.hpp"
#include "ngash/neural.hpp"
#include "ngash/prt.hpp"
#include "ngash/sh.hpp"

namespace ngash::bundle {

struct NamedLight {
  std::string name;
  sh::LightCoefficients light;
};

// Everything the viewer needs in one JSON document: mesh, per-vertex
// transfer rows, named light sets, optional network weights (manifest plus
// base64 float32 blobs) and free-form metadata.
struct Bundle {
  Mesh mesh;
  TransferMatrix transfer;
  std::vector<NamedLight> lights;
  std::optional<neural::ModelWeights> weights;
  std::map<std::string, std::string> metadata;
};

// Throws ValidationError listing every mismatch.
void validate(const Bundle& bundle);

// Deterministic, compact JSON.
std::string to_json(const Bundle& bundle);
// Parses and validates a document produced by to_json.
Bundle from_json(const std::string& text);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace ngash::bundle
