#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "ngash/mesh.hpp"

namespace ngash::cga {

// Basis vectors of Cl(4,1) in order e1, e2, e3, e+, e-; e-^2 = -1, the rest
// square to +1. A blade is a bitmask over these five (bit 0 = e1).
inline constexpr int kDimension = 32;

// Blade bitmask of each coefficient slot: grade 0, then grades 1..5, each
// grade in lexicographic order of its basis-vector indices.
extern const std::array<std::uint8_t, kDimension> kBladeMask;

std::string_view blade_name(int slot);
int slot_of_mask(std::uint8_t mask);
int grade_of_slot(int slot);

// Hash over blade names and metric. Datasets and weight files record it so
// that stored data and the motor encoding cannot silently drift apart.
std::string blade_order_hash();

class Multivector32 {
 public:
  Multivector32() { c_.fill(0.0); }

  static Multivector32 scalar(double s);
  static Multivector32 blade(int slot, double value = 1.0);
  static Multivector32 vector(const Vec3& v);

  double& operator[](int slot) { return c_[slot]; }
  double operator[](int slot) const { return c_[slot]; }
  const std::array<double, kDimension>& coefficients() const { return c_; }

  double scalar_part() const { return c_[0]; }
  Vec3 euclidean_part() const { return {c_[1], c_[2], c_[3]}; }
  Multivector32 grade(int k) const;
  Multivector32 reverse() const;

  Multivector32 operator+(const Multivector32& o) const;
  Multivector32 operator-(const Multivector32& o) const;
  Multivector32 operator*(const Multivector32& o) const;  // geometric product
  Multivector32 operator*(double s) const;

  // Largest absolute coefficient difference.
  double max_abs_diff(const Multivector32& o) const;

 private:
  std::array<double, kDimension> c_;
};

inline Multivector32 operator*(double s, const Multivector32& m) { return m * s; }

Multivector32 geometric_product(const Multivector32& a, const Multivector32& b);
Multivector32 reverse(const Multivector32& a);

// V x reverse(V).
Multivector32 apply_versor(const Multivector32& versor, const Multivector32& x);

// Max |coefficient| of V reverse(V) - 1.
double versor_norm_error(const Multivector32& versor);

// e_inf = e- + e+, e_0 = (e- - e+) / 2.
Multivector32 e_inf();
Multivector32 e_origin();

// p + |p|^2/2 e_inf + e_0.
Multivector32 conformal_point(const Vec3& p);
// Euclidean position of a (possibly scaled) conformal point.
Vec3 point_position(const Multivector32& x);

struct Quaternion {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static Quaternion from_axis_angle(const Vec3& axis, double angle);
  Quaternion operator*(const Quaternion& o) const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  double norm() const;
  Quaternion normalized() const;
  Vec3 rotate(const Vec3& v) const;
  Eigen::Matrix3d to_matrix() const;
};

// Minimal-angle rotation taking +Y to n (n unit). Exactly opposite n uses a
// half turn about +X.
Quaternion quaternion_align_y(const Vec3& n);

// Even versor over the e1,e2,e3 bivectors whose sandwich equals q's rotation.
Multivector32 rotor_from_quaternion(const Quaternion& q);

// 1 - t e_inf / 2.
Multivector32 translator(const Vec3& t);

// translator(t) * rotor(q): rotate first, then translate.
Multivector32 motor(const Vec3& t, const Quaternion& q);

// Motor of a vertex-normal pair: translator(v) * rotor(align +Y with n).
// A zero normal is replaced by +Y.
Multivector32 encode_vertex_normal(const Vec3& v, const Vec3& n);

// Homogeneous matrix with the same action on points as the motor. Throws
// ContractError if the motor is not unit under the reverse norm (1e-6).
Eigen::Matrix4d motor_to_matrix(const Multivector32& m);

}  // namespace ngash::cga
