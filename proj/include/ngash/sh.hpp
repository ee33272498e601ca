#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ngash/cga.hpp"
#include "ngash/mesh.hpp"

namespace ngash::sh {

inline constexpr int kBands = 3;
inline constexpr int kBasisCount = kBands * kBands;

using Basis9 = std::array<double, kBasisCount>;

// Real SH in band-major order: l=0; l=1 m=-1,0,1; l=2 m=-2..2. No
// Condon-Shortley phase: band 1 is proportional to (y, z, x).
// Throws ContractError for bands outside [1, 3].
std::vector<double> eval_sh_basis(const Vec3& dir, int bands);
Basis9 eval_sh9(const Vec3& dir);

enum class SampleMode { Sphere, Hemisphere };

std::string to_string(SampleMode mode);
SampleMode sample_mode_from_string(const std::string& s);

// Stratified, jittered directions. Sphere mode covers the full sphere
// uniformly; hemisphere mode covers y >= 0 only.
struct SampleSet {
  std::vector<Vec3> directions;
  std::vector<Basis9> sh_values;
  int sqrt_n = 0;
  std::uint64_t seed = 0;
  SampleMode mode = SampleMode::Sphere;

  std::size_t size() const { return directions.size(); }
  // Monte Carlo weight per sample: covered solid angle / N.
  double weight() const;
};

SampleSet generate_samples(int sqrt_n, std::uint64_t seed,
                           SampleMode mode = SampleMode::Sphere);

// B x 3 coefficients, row j = basis function, column k = RGB channel.
struct LightCoefficients {
  int bands = kBands;
  Eigen::Matrix<double, Eigen::Dynamic, 3> values =
      Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(kBasisCount, 3);

  static LightCoefficients zeros(int bands = kBands);
};

struct BandRotation {
  // Band l holds a (2l+1) x (2l+1) orthogonal matrix.
  std::vector<Eigen::MatrixXd> bands;

  // Full block-diagonal B x B matrix.
  Eigen::MatrixXd block_diagonal() const;
};

// Matrices M with eval_sh_basis(R d) = M eval_sh_basis(d). Throws
// ContractError if rot is not a proper rotation (tolerance 1e-6).
BandRotation band_rotation_matrices(const Eigen::Matrix3d& rot,
                                    int bands = kBands);

// Coefficients of the environment rotated by q: L'(w) = L(q^-1 w).
LightCoefficients rotate_sh(const LightCoefficients& light,
                            const cga::Quaternion& q);

// Euclidean norm of each band's coefficients, per channel (rows = bands).
Eigen::Matrix<double, Eigen::Dynamic, 3> band_norms(const LightCoefficients& light);

// Light file: optional '#' comment lines, then one "R G B" line per basis
// function (9 lines for 3 bands).
void write_light_file(const std::filesystem::path& path,
                      const LightCoefficients& light,
                      const std::vector<std::string>& comments = {});
LightCoefficients read_light_file(const std::filesystem::path& path);
std::string format_light(const LightCoefficients& light,
                         const std::vector<std::string>& comments = {});
LightCoefficients parse_light(const std::string& text);

}  // namespace ngash::sh
