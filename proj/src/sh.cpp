#include "ngash/sh.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "ngash/errors.hpp"
#include "ngash/text_io.hpp"

namespace ngash::sh {

namespace {

constexpr double kPi = std::numbers::pi;

const double kY00 = 0.5 * std::sqrt(1.0 / kPi);
const double kY1 = std::sqrt(3.0 / (4.0 * kPi));
const double kY2_1 = 0.5 * std::sqrt(15.0 / kPi);
const double kY20 = 0.25 * std::sqrt(5.0 / kPi);
const double kY22 = 0.25 * std::sqrt(15.0 / kPi);

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Rotation matrices of band l indexed with m, n in [-l, l].
struct BandView {
  const Eigen::MatrixXd& m;
  int l;
  double operator()(int a, int b) const { return m(a + l, b + l); }
};

// Ivanic & Ruedenberg helper P.
double rec_p(int i, int a, int b, int l, const BandView& r1,
             const BandView& prev) {
  if (b == l)
    return r1(i, 1) * prev(a, l - 1) - r1(i, -1) * prev(a, -l + 1);
  if (b == -l)
    return r1(i, 1) * prev(a, -l + 1) + r1(i, -1) * prev(a, l - 1);
  return r1(i, 0) * prev(a, b);
}

double rec_u(int m, int n, int l, const BandView& r1, const BandView& prev) {
  return rec_p(0, m, n, l, r1, prev);
}

double rec_v(int m, int n, int l, const BandView& r1, const BandView& prev) {
  if (m == 0)
    return rec_p(1, 1, n, l, r1, prev) + rec_p(-1, -1, n, l, r1, prev);
  if (m > 0) {
    double d = (m == 1) ? 1.0 : 0.0;
    return rec_p(1, m - 1, n, l, r1, prev) * std::sqrt(1.0 + d) -
           rec_p(-1, -m + 1, n, l, r1, prev) * (1.0 - d);
  }
  double d = (m == -1) ? 1.0 : 0.0;
  return rec_p(1, m + 1, n, l, r1, prev) * (1.0 - d) +
         rec_p(-1, -m - 1, n, l, r1, prev) * std::sqrt(1.0 + d);
}

double rec_w(int m, int n, int l, const BandView& r1, const BandView& prev) {
  if (m > 0)
    return rec_p(1, m + 1, n, l, r1, prev) + rec_p(-1, -m - 1, n, l, r1, prev);
  return rec_p(1, m - 1, n, l, r1, prev) - rec_p(-1, -m + 1, n, l, r1, prev);
}

Eigen::MatrixXd next_band(int l, const Eigen::MatrixXd& band1,
                          const Eigen::MatrixXd& prev_band) {
  BandView r1{band1, 1};
  BandView prev{prev_band, l - 1};
  Eigen::MatrixXd out(2 * l + 1, 2 * l + 1);
  for (int m = -l; m <= l; ++m)
    for (int n = -l; n <= l; ++n) {
      const int am = std::abs(m);
      const double d = (m == 0) ? 1.0 : 0.0;
      const double denom =
          (std::abs(n) == l) ? (2.0 * l) * (2.0 * l - 1) : double(l + n) * (l - n);
      double u = std::sqrt(double(l + m) * (l - m) / denom);
      double v = 0.5 * std::sqrt((1.0 + d) * (l + am - 1) * (l + am) / denom) *
                 (1.0 - 2.0 * d);
      double w = -0.5 * std::sqrt(double(l - am - 1) * (l - am) / denom) * (1.0 - d);
      double value = 0.0;
      if (u != 0.0) value += u * rec_u(m, n, l, r1, prev);
      if (v != 0.0) value += v * rec_v(m, n, l, r1, prev);
      if (w != 0.0) value += w * rec_w(m, n, l, r1, prev);
      out(m + l, n + l) = value;
    }
  return out;
}

}  // namespace

Basis9 eval_sh9(const Vec3& d) {
  const double x = d.x(), y = d.y(), z = d.z();
  return {kY00,
          kY1 * y,
          kY1 * z,
          kY1 * x,
          kY2_1 * x * y,
          kY2_1 * y * z,
          kY20 * (3.0 * z * z - 1.0),
          kY2_1 * x * z,
          kY22 * (x * x - y * y)};
}

std::vector<double> eval_sh_basis(const Vec3& dir, int bands) {
  if (bands < 1 || bands > kBands)
    throw ContractError("eval_sh_basis: bands must be in [1, 3], got " +
                        std::to_string(bands));
  Basis9 all = eval_sh9(dir);
  return std::vector<double>(all.begin(), all.begin() + bands * bands);
}

std::string to_string(SampleMode mode) {
  return mode == SampleMode::Sphere ? "sphere" : "hemisphere";
}

SampleMode sample_mode_from_string(const std::string& s) {
  if (s == "sphere") return SampleMode::Sphere;
  if (s == "hemisphere") return SampleMode::Hemisphere;
  throw ContractError("unknown sample mode '" + s + "'");
}

double SampleSet::weight() const {
  const double solid_angle = mode == SampleMode::Sphere ? 4.0 * kPi : 2.0 * kPi;
  return solid_angle / static_cast<double>(directions.size());
}

SampleSet generate_samples(int sqrt_n, std::uint64_t seed, SampleMode mode) {
  if (sqrt_n < 1) throw ContractError("generate_samples: sqrt_n must be >= 1");
  SampleSet s;
  s.sqrt_n = sqrt_n;
  s.seed = seed;
  s.mode = mode;
  const std::size_t n = static_cast<std::size_t>(sqrt_n) * sqrt_n;
  s.directions.reserve(n);
  s.sh_values.reserve(n);
  std::mt19937_64 rng(seed);
  const double cover = mode == SampleMode::Sphere ? 1.0 : 0.5;
  for (int a = 0; a < sqrt_n; ++a)
    for (int b = 0; b < sqrt_n; ++b) {
      double u = (a + uniform01(rng)) / sqrt_n * cover;
      double v = (b + uniform01(rng)) / sqrt_n;
      double theta = 2.0 * std::acos(std::sqrt(1.0 - u));
      double phi = 2.0 * kPi * v;
      Vec3 d(std::sin(theta) * std::cos(phi), std::cos(theta),
             std::sin(theta) * std::sin(phi));
      d.normalize();
      s.directions.push_back(d);
      s.sh_values.push_back(eval_sh9(d));
    }
  return s;
}

LightCoefficients LightCoefficients::zeros(int bands) {
  LightCoefficients l;
  l.bands = bands;
  l.values = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(bands * bands, 3);
  return l;
}

Eigen::MatrixXd BandRotation::block_diagonal() const {
  int total = 0;
  for (const auto& b : bands) total += static_cast<int>(b.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(total, total);
  int at = 0;
  for (const auto& b : bands) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += static_cast<int>(b.rows());
  }
  return out;
}

BandRotation band_rotation_matrices(const Eigen::Matrix3d& rot, int bands) {
  if (bands < 1 || bands > kBands)
    throw ContractError("band_rotation_matrices: bands must be in [1, 3]");
  double orth = (rot.transpose() * rot - Eigen::Matrix3d::Identity())
                    .cwiseAbs()
                    .maxCoeff();
  if (!(orth <= 1e-6) || !(std::abs(rot.determinant() - 1.0) <= 1e-6))
    throw ContractError("band_rotation_matrices: not a proper rotation");

  BandRotation out;
  out.bands.push_back(Eigen::MatrixXd::Identity(1, 1));
  if (bands == 1) return out;

  // Band 1 functions are proportional to (y, z, x).
  const int perm[3] = {1, 2, 0};
  Eigen::MatrixXd b1(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) b1(i, j) = rot(perm[i], perm[j]);
  out.bands.push_back(b1);
  for (int l = 2; l < bands; ++l)
    out.bands.push_back(next_band(l, b1, out.bands.back()));
  return out;
}

LightCoefficients rotate_sh(const LightCoefficients& light,
                            const cga::Quaternion& q) {
  BandRotation r = band_rotation_matrices(q.to_matrix(), light.bands);
  LightCoefficients out = light;
  int at = 0;
  for (const auto& m : r.bands) {
    const int w = static_cast<int>(m.rows());
    for (int k = 0; k < 3; ++k)
      for (int i = 0; i < w; ++i) {
        double acc = 0.0;
        for (int j = 0; j < w; ++j) acc += m(i, j) * light.values(at + j, k);
        out.values(at + i, k) = acc;
      }
    at += w;
  }
  return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 3> band_norms(const LightCoefficients& light) {
  Eigen::Matrix<double, Eigen::Dynamic, 3> out(light.bands, 3);
  for (int l = 0; l < light.bands; ++l)
    for (int k = 0; k < 3; ++k)
      out(l, k) = light.values.block(l * l, k, 2 * l + 1, 1).norm();
  return out;
}

std::string format_light(const LightCoefficients& light,
                         const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  for (int j = 0; j < light.values.rows(); ++j)
    out << format_double(light.values(j, 0)) << ' '
        << format_double(light.values(j, 1)) << ' '
        << format_double(light.values(j, 2)) << '\n';
  return out.str();
}

LightCoefficients parse_light(const std::string& text) {
  std::vector<std::array<double, 3>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto v = parse_doubles(t, line_no);
    if (v.size() != 3)
      throw ParseError("expected 3 values, got " + std::to_string(v.size()),
                       line_no);
    for (double x : v)
      if (!std::isfinite(x)) throw ParseError("non-finite coefficient", line_no);
    rows.push_back({v[0], v[1], v[2]});
  }
  int bands = static_cast<int>(std::lround(std::sqrt(double(rows.size()))));
  if (rows.empty() || bands * bands != static_cast<int>(rows.size()) ||
      bands > kBands)
    throw FormatError("light file must hold 1, 4 or 9 coefficient rows, got " +
                      std::to_string(rows.size()));
  LightCoefficients l = LightCoefficients::zeros(bands);
  for (std::size_t j = 0; j < rows.size(); ++j)
    for (int k = 0; k < 3; ++k) l.values(j, k) = rows[j][k];
  return l;
}

void write_light_file(const std::filesystem::path& path,
                      const LightCoefficients& light,
                      const std::vector<std::string>& comments) {
  write_text_file(path, format_light(light, comments));
}

LightCoefficients read_light_file(const std::filesystem::path& path) {
  try {
    return parse_light(read_text_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace ngash::sh
