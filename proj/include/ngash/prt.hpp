#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ngash/bvh.hpp"
#include "ngash/mesh.hpp"
#include "ngash/sh.hpp"

namespace ngash {

inline constexpr int kTransferWidth = 27;

using TransferRows = Eigen::Matrix<double, Eigen::Dynamic, kTransferWidth, Eigen::RowMajor>;

struct TransferMetadata {
  int bands = sh::kBands;
  sh::SampleMode mode = sh::SampleMode::Sphere;
  int sqrt_n = 0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;
  bool shadowed = false;
  std::string source = "oracle";  // "oracle" | "predicted"
  std::string albedo = "per-vertex";
  std::string blade_hash;

  std::vector<std::string> to_comments() const;
};

// Row i belongs to vertex i; column 3j + k is basis function j, channel k.
struct TransferMatrix {
  TransferRows rows;
  TransferMetadata meta;

  std::size_t vertex_count() const { return static_cast<std::size_t>(rows.rows()); }
};

// t[3j+k] = rho_k / pi * weight * sum_w max(0, n.w) Y_j(w).
TransferMatrix transfer_unshadowed(const Mesh& mesh, const sh::SampleSet& samples);

// Same integrand times binary visibility from origin vertex + eps * normal,
// eps = 1e-4 * bounding-box diagonal.
TransferMatrix transfer_shadowed(const Mesh& mesh, const Bvh& bvh,
                                 const sh::SampleSet& samples);

double self_intersection_offset(const Mesh& mesh);

// Coefficient file: '#' comment lines with key=value metadata, then exactly
// N lines of 27 space-separated values.
std::string format_transfer(const TransferMatrix& transfer);
void write_transfer_file(const std::filesystem::path& path,
                         const TransferMatrix& transfer);
TransferMatrix parse_transfer(const std::string& text);
TransferMatrix read_transfer_file(const std::filesystem::path& path);

}  // namespace ngash
