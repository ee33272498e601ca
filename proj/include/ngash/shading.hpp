#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "ngash/mesh.hpp"
#include "ngash/prt.hpp"
#include "ngash/sh.hpp"

namespace ngash::shading {

// N x 3 linear RGB; unclamped.
using VertexColors = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

inline constexpr double kDefaultIntensity = 255.0;

// C[i,k] = intensity * (1/255) * sum_j P[i, 3j+k] * L[j,k]
VertexColors shade(const TransferMatrix& transfer, const sh::LightCoefficients& light,
                   double intensity = kDefaultIntensity);

std::uint64_t light_hash(const sh::LightCoefficients& light);

struct ShadeCache {
  bool valid = false;
  std::uint64_t geometry = 0;
  std::uint64_t light = 0;
  double intensity = 0.0;
  VertexColors colors;
};

bool needs_update(const ShadeCache& cache, const Mesh& mesh, const sh::LightCoefficients& light);

// Returns cached colors when geometry, light and intensity are unchanged,
// otherwise reshades and refreshes the cache.
const VertexColors& shade_cached(ShadeCache& cache, const Mesh& mesh,
                                 const TransferMatrix& transfer,
                                 const sh::LightCoefficients& light, double intensity,
                                 bool* recomputed = nullptr);

std::string format_colors(const VertexColors& colors);
void write_colors_file(const std::filesystem::path& path, const VertexColors& colors);
VertexColors parse_colors(const std::string& text);
VertexColors read_colors_file(const std::filesystem::path& path);

// Orthographic view down -z, flat-shaded (mean vertex color per triangle),
// colors clamped to [0,1]. Binary P6.
std::string render_ppm(const Mesh& mesh, const VertexColors& colors, int size = 256);

}  // namespace ngash::shading
