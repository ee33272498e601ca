#include "ngash/cga.hpp"

#include <bit>
#include <cmath>
#include <span>

#include "ngash/errors.hpp"
#include "ngash/text_io.hpp"

namespace ngash::cga {

namespace {

constexpr std::array<std::uint8_t, kDimension> make_blade_masks() {
  std::array<std::uint8_t, kDimension> out{};
  int slot = 0;
  for (int g = 0; g <= 5; ++g) {
    // Lexicographic order of index sets == increasing order of the
    // bit-reversed masks restricted to grade g.
    std::array<std::uint8_t, kDimension> same{};
    int n = 0;
    for (int m = 0; m < kDimension; ++m)
      if (std::popcount(static_cast<unsigned>(m)) == g)
        same[n++] = static_cast<std::uint8_t>(m);
    auto lex_key = [](std::uint8_t m) {
      unsigned key = 0;  // bit 0 (e1) most significant
      for (int b = 0; b < 5; ++b)
        if (m & (1u << b)) key |= 1u << (4 - b);
      return key;
    };
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (lex_key(same[j]) > lex_key(same[i])) {
          auto t = same[i];
          same[i] = same[j];
          same[j] = t;
        }
    for (int i = 0; i < n; ++i) out[slot++] = same[i];
  }
  return out;
}

constexpr std::array<int, kDimension> make_slot_lookup(
    const std::array<std::uint8_t, kDimension>& masks) {
  std::array<int, kDimension> out{};
  for (int s = 0; s < kDimension; ++s) out[masks[s]] = s;
  return out;
}

// Sign from reordering the concatenated basis vectors of a and b into
// canonical order, times the metric of the contracted pairs.
constexpr double blade_product_sign(unsigned a, unsigned b) {
  int swaps = 0;
  unsigned x = a >> 1;
  while (x) {
    swaps += std::popcount(x & b);
    x >>= 1;
  }
  double sign = (swaps & 1) ? -1.0 : 1.0;
  if ((a & b) & (1u << 4)) sign = -sign;  // e- e- = -1
  return sign;
}

struct CayleyEntry {
  std::uint8_t slot;
  double sign;
};

constexpr auto kMasks = make_blade_masks();
constexpr auto kSlot = make_slot_lookup(kMasks);

constexpr std::array<std::array<CayleyEntry, kDimension>, kDimension>
make_cayley() {
  std::array<std::array<CayleyEntry, kDimension>, kDimension> t{};
  for (int i = 0; i < kDimension; ++i)
    for (int j = 0; j < kDimension; ++j) {
      unsigned a = kMasks[i], b = kMasks[j];
      t[i][j] = {static_cast<std::uint8_t>(kSlot[a ^ b]),
                 blade_product_sign(a, b)};
    }
  return t;
}

constexpr auto kCayley = make_cayley();

constexpr std::array<const char*, 5> kVectorNames = {"1", "2", "3", "+", "-"};

std::array<std::string, kDimension> make_names() {
  std::array<std::string, kDimension> out;
  for (int s = 0; s < kDimension; ++s) {
    if (kMasks[s] == 0) {
      out[s] = "1";
      continue;
    }
    std::string n = "e";
    for (int b = 0; b < 5; ++b)
      if (kMasks[s] & (1u << b)) n += kVectorNames[b];
    out[s] = n;
  }
  return out;
}

const std::array<std::string, kDimension>& names() {
  static const auto n = make_names();
  return n;
}

// Slots of the blades used below.
const int kE1 = kSlot[0b00001];
const int kE2 = kSlot[0b00010];
const int kE3 = kSlot[0b00100];
const int kEp = kSlot[0b01000];
const int kEm = kSlot[0b10000];
const int kE12 = kSlot[0b00011];
const int kE13 = kSlot[0b00101];
const int kE23 = kSlot[0b00110];

}  // namespace

const std::array<std::uint8_t, kDimension> kBladeMask = kMasks;

std::string_view blade_name(int slot) { return names().at(slot); }
int slot_of_mask(std::uint8_t mask) { return kSlot.at(mask); }
int grade_of_slot(int slot) {
  return std::popcount(static_cast<unsigned>(kMasks.at(slot)));
}

std::string blade_order_hash() {
  std::string desc = "Cl(4,1);metric=++++-;";
  for (int s = 0; s < kDimension; ++s) {
    desc += names()[s];
    desc += ',';
  }
  return hex64(fnv1a(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(desc.data()), desc.size())));
}

Multivector32 Multivector32::scalar(double s) {
  Multivector32 m;
  m.c_[0] = s;
  return m;
}

Multivector32 Multivector32::blade(int slot, double value) {
  Multivector32 m;
  m.c_.at(slot) = value;
  return m;
}

Multivector32 Multivector32::vector(const Vec3& v) {
  Multivector32 m;
  m.c_[kE1] = v.x();
  m.c_[kE2] = v.y();
  m.c_[kE3] = v.z();
  return m;
}

Multivector32 Multivector32::grade(int k) const {
  Multivector32 m;
  for (int s = 0; s < kDimension; ++s)
    if (grade_of_slot(s) == k) m.c_[s] = c_[s];
  return m;
}

Multivector32 Multivector32::reverse() const {
  Multivector32 m;
  for (int s = 0; s < kDimension; ++s) {
    int k = grade_of_slot(s);
    m.c_[s] = ((k * (k - 1) / 2) % 2) ? -c_[s] : c_[s];
  }
  return m;
}

Multivector32 Multivector32::operator+(const Multivector32& o) const {
  Multivector32 m;
  for (int s = 0; s < kDimension; ++s) m.c_[s] = c_[s] + o.c_[s];
  return m;
}

Multivector32 Multivector32::operator-(const Multivector32& o) const {
  Multivector32 m;
  for (int s = 0; s < kDimension; ++s) m.c_[s] = c_[s] - o.c_[s];
  return m;
}

Multivector32 Multivector32::operator*(double s) const {
  Multivector32 m;
  for (int i = 0; i < kDimension; ++i) m.c_[i] = c_[i] * s;
  return m;
}

Multivector32 Multivector32::operator*(const Multivector32& o) const {
  Multivector32 m;
  for (int i = 0; i < kDimension; ++i) {
    if (c_[i] == 0.0) continue;
    for (int j = 0; j < kDimension; ++j) {
      if (o.c_[j] == 0.0) continue;
      const auto& e = kCayley[i][j];
      m.c_[e.slot] += e.sign * c_[i] * o.c_[j];
    }
  }
  return m;
}

double Multivector32::max_abs_diff(const Multivector32& o) const {
  double d = 0.0;
  for (int s = 0; s < kDimension; ++s) d = std::max(d, std::abs(c_[s] - o.c_[s]));
  return d;
}

Multivector32 geometric_product(const Multivector32& a, const Multivector32& b) {
  return a * b;
}

Multivector32 reverse(const Multivector32& a) { return a.reverse(); }

Multivector32 apply_versor(const Multivector32& versor, const Multivector32& x) {
  return versor * x * versor.reverse();
}

double versor_norm_error(const Multivector32& versor) {
  return (versor * versor.reverse()).max_abs_diff(Multivector32::scalar(1.0));
}

Multivector32 e_inf() {
  return Multivector32::blade(kEm) + Multivector32::blade(kEp);
}

Multivector32 e_origin() {
  return (Multivector32::blade(kEm) - Multivector32::blade(kEp)) * 0.5;
}

Multivector32 conformal_point(const Vec3& p) {
  return Multivector32::vector(p) + e_inf() * (0.5 * p.squaredNorm()) +
         e_origin();
}

Vec3 point_position(const Multivector32& x) {
  // -x . e_inf is the point's weight; with e_inf = e- + e+ that is x[e-] - x[e+].
  double weight = x[kEm] - x[kEp];
  if (std::abs(weight) < 1e-300)
    throw ContractError("point_position: not a finite conformal point");
  return x.euclidean_part() / weight;
}

Quaternion Quaternion::from_axis_angle(const Vec3& axis, double angle) {
  Vec3 a = axis.normalized();
  double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), a.x() * s, a.y() * s, a.z() * s};
}

Quaternion Quaternion::operator*(const Quaternion& o) const {
  return {w * o.w - x * o.x - y * o.y - z * o.z,
          w * o.x + x * o.w + y * o.z - z * o.y,
          w * o.y - x * o.z + y * o.w + z * o.x,
          w * o.z + x * o.y - y * o.x + z * o.w};
}

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  double n = norm();
  return {w / n, x / n, y / n, z / n};
}

Vec3 Quaternion::rotate(const Vec3& v) const { return to_matrix() * v; }

Eigen::Matrix3d Quaternion::to_matrix() const {
  Eigen::Matrix3d m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

Quaternion quaternion_align_y(const Vec3& n) {
  double d = n.y();
  if (1.0 + d < 1e-12) return {0.0, 1.0, 0.0, 0.0};
  // Half-angle form: (1 + y.n, y x n) normalized.
  return Quaternion{1.0 + d, n.z(), 0.0, -n.x()}.normalized();
}

Multivector32 rotor_from_quaternion(const Quaternion& q) {
  // R = w - x e23 - y e31 - z e12, and e31 = -e13.
  Multivector32 r = Multivector32::scalar(q.w);
  r[kE23] = -q.x;
  r[kE13] = q.y;
  r[kE12] = -q.z;
  return r;
}

Multivector32 translator(const Vec3& t) {
  return Multivector32::scalar(1.0) - Multivector32::vector(t) * e_inf() * 0.5;
}

Multivector32 motor(const Vec3& t, const Quaternion& q) {
  return translator(t) * rotor_from_quaternion(q);
}

Multivector32 encode_vertex_normal(const Vec3& v, const Vec3& n) {
  return motor(v, quaternion_align_y(normalized_or_up(n)));
}

Eigen::Matrix4d motor_to_matrix(const Multivector32& m) {
  double err = versor_norm_error(m);
  if (!(err <= 1e-6))
    throw ContractError("motor_to_matrix: not a unit versor (error " +
                        std::to_string(err) + ")");
  Vec3 origin = point_position(apply_versor(m, conformal_point(Vec3::Zero())));
  Eigen::Matrix4d out = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e[i] = 1.0;
    out.block<3, 1>(0, i) =
        point_position(apply_versor(m, conformal_point(e))) - origin;
  }
  out.block<3, 1>(0, 3) = origin;
  return out;
}

}  // namespace ngash::cga
