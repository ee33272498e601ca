#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "ngash/sh.hpp"

namespace ngash::lightprobe {

using Rgb = Eigen::Vector3f;

// Equirectangular, Y up. Column x covers phi in [0, 2pi) with
// phi = atan2(dir.x, -dir.z); row 0 is the top (theta = 0, +Y).
struct RadianceMap {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;  // row major, row 0 = top

  const Rgb& at(int x, int y) const { return pixels[std::size_t(y) * width + x]; }
  Rgb& at(int x, int y) { return pixels[std::size_t(y) * width + x]; }

  static RadianceMap constant(int width, int height, const Rgb& value);
  // Fills each texel with fn(direction of the texel centre).
  static RadianceMap from_function(int width, int height,
                                   const std::function<Rgb(const Vec3&)>& fn);
};

// Unit direction through the centre of texel (x, y).
Vec3 texel_direction(int x, int y, int width, int height);

RadianceMap decode_hdr(std::span<const std::uint8_t> bytes);
RadianceMap load_hdr(const std::filesystem::path& path);

// Radiance RGBE encoder (flat or new-style RLE scanlines).
std::vector<std::uint8_t> encode_hdr(const RadianceMap& map, bool rle = true);
void save_hdr(const RadianceMap& map, const std::filesystem::path& path,
              bool rle = true);

// Linear RGB of one RGBE texel: (mantissa + 0.5) / 256 * 2^(exponent - 128).
Rgb rgbe_to_rgb(std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t e);

// Bilinear lookup with longitudinal wrap. Within half a texel of a pole the
// lookup blends towards the mean of the outermost row, which is the value
// exactly at the pole.
Vec3 sample_radiance(const RadianceMap& map, const Vec3& dir);

// c_j = weight * sum_i L(w_i) Y_j(w_i) per channel. Requires a full-sphere
// sample set. Summation is in fixed blocks, so the result does not depend on
// the worker count.
sh::LightCoefficients project_light(const RadianceMap& map,
                                    const sh::SampleSet& samples,
                                    int bands = sh::kBands);

sh::LightCoefficients project_radiance(
    const std::function<Vec3(const Vec3&)>& radiance,
    const sh::SampleSet& samples, int bands = sh::kBands);

}  // namespace ngash::lightprobe
