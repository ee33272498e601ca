#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ngash/neural.hpp"

namespace ngash::neural {

// One tensor as stored: row-major float32.
struct Tensor {
  std::string name;
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<float> values;
};

// A text manifest (key=value lines) plus tensors in declared order.
struct WeightsPackage {
  std::string manifest;
  std::vector<Tensor> tensors;
};

inline constexpr const char* kManifestName = "manifest.txt";

WeightsPackage pack_weights(const ModelWeights& w);
// Throws FormatError / IntegrityError / IncompatibilityError.
ModelWeights unpack_weights(const WeightsPackage& package);

std::vector<std::uint8_t> tensor_bytes(const Tensor& t);  // little-endian
std::vector<float> floats_from_bytes(const std::vector<std::uint8_t>& bytes);

// Directory layout: manifest.txt plus one <name>.f32 blob per tensor.
void save_weights(const ModelWeights& w, const std::filesystem::path& dir);
ModelWeights load_weights(const std::filesystem::path& dir);

}  // namespace ngash::neural
