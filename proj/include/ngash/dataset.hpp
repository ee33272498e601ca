#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ngash/mesh.hpp"
#include "ngash/neural.hpp"
#include "ngash/prt.hpp"
#include "ngash/sh.hpp"

namespace ngash::dataset {

struct OracleConfig {
  int sqrt_n = 5;  // samples per axis; N = sqrt_n^2
  sh::SampleMode mode = sh::SampleMode::Sphere;
  bool shadowed = true;
  std::uint64_t seed = 1;
};

// Runs the configured transfer oracle (shadowed builds a BVH first).
TransferMatrix run_oracle(const Mesh& mesh, const OracleConfig& config);

struct Entry {
  std::filesystem::path mesh;
  std::filesystem::path coefficients;
  std::size_t vertex_count = 0;
};

struct Manifest {
  std::vector<Entry> entries;
  OracleConfig oracle;
  std::string blade_hash;
  std::uint64_t split_seed = 1;
  double split_fraction = 0.8;
  // (mesh path, reason) for meshes skipped during generation.
  std::vector<std::pair<std::string, std::string>> failures;
};

inline constexpr const char* kManifestName = "dataset.manifest";

// Every *.obj directly inside mesh_dir, in name order. Coefficient files go
// to out_dir/<stem>.coeffs and the manifest to out_dir/dataset.manifest,
// written last. Throws DataError when no mesh succeeds.
Manifest generate(const std::filesystem::path& mesh_dir, const std::filesystem::path& out_dir,
                  const OracleConfig& config);

// Paths are written relative to base_dir when they live below it.
std::string format_manifest(const Manifest& manifest, const std::filesystem::path& base_dir);
Manifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

// Motor encodings computed from the meshes, paired with coefficient rows in
// vertex order.
std::vector<neural::Sample> load_pairs(const Manifest& manifest);

std::pair<std::vector<neural::Sample>, std::vector<neural::Sample>> split(
    const std::vector<neural::Sample>& pairs, double fraction, std::uint64_t seed);

}  // namespace ngash::dataset
