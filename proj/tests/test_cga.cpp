#include <doctest.h>

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "ngash/cga.hpp"
#include "ngash/errors.hpp"
#include "support.hpp"

using namespace ngash;
using namespace ngash::cga;
using ngash::testing::random_point;
using ngash::testing::random_unit;

namespace {

// Faithful matrix representation Cl(4,1) ~ M4(C) built from Dirac matrices:
// e1,e2,e3 = i*gamma_k, e+ = gamma_0, e- = i*gamma_5. The geometric product
// becomes the matrix product; coefficients come back through Re tr / 4.
using C4 = Eigen::Matrix<std::complex<double>, 4, 4>;

struct DiracOracle {
  std::array<C4, 32> blade;  // indexed by mask

  DiracOracle() {
    using c = std::complex<double>;
    const c i(0, 1);
    Eigen::Matrix2cd s1, s2, s3, id2 = Eigen::Matrix2cd::Identity();
    s1 << 0, 1, 1, 0;
    s2 << 0, -i, i, 0;
    s3 << 1, 0, 0, -1;
    auto block = [](const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b, const Eigen::Matrix2cd& cc,
                    const Eigen::Matrix2cd& d) {
      C4 m;
      m << a, b, cc, d;
      return m;
    };
    const Eigen::Matrix2cd z = Eigen::Matrix2cd::Zero();
    const C4 g0 = block(id2, z, z, -id2);
    const C4 g1 = block(z, s1, -s1, z), g2 = block(z, s2, -s2, z), g3 = block(z, s3, -s3, z);
    const C4 g5 = i * g0 * g1 * g2 * g3;
    const std::array<C4, 5> gen = {i * g1, i * g2, i * g3, g0, i * g5};
    for (int mask = 0; mask < 32; ++mask) {
      C4 m = C4::Identity();
      for (int b = 0; b < 5; ++b)
        if (mask & (1 << b)) m = m * gen[b];
      blade[mask] = m;
    }
  }

  C4 to_matrix(const Multivector32& a) const {
    C4 m = C4::Zero();
    for (int s = 0; s < 32; ++s) m += a[s] * blade[kBladeMask[s]];
    return m;
  }

  Multivector32 from_matrix(const C4& m) const {
    Multivector32 out;
    for (int s = 0; s < 32; ++s) {
      const C4& b = blade[kBladeMask[s]];
      out[s] = (b.inverse() * m).trace().real() / 4.0;
    }
    return out;
  }
};

Multivector32 random_mv(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  Multivector32 m;
  for (int s = 0; s < 32; ++s) m[s] = u(rng);
  return m;
}

Quaternion random_quaternion(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  return Quaternion::from_axis_angle(random_unit(rng), u(rng));
}

// Rodrigues' rotation formula, independent of the quaternion code.
Vec3 rodrigues(const Vec3& axis, double angle, const Vec3& v) {
  return v * std::cos(angle) + axis.cross(v) * std::sin(angle) +
         axis * axis.dot(v) * (1 - std::cos(angle));
}

double sign_insensitive_diff(const Multivector32& a, const Multivector32& b) {
  return std::min(a.max_abs_diff(b), a.max_abs_diff(b * -1.0));
}

}  // namespace

TEST_SUITE("cga") {

TEST_CASE("blade table: 32 slots in graded lexicographic order") {
  CHECK(blade_name(0) == "1");
  CHECK(blade_name(1) == "e1");
  CHECK(blade_name(4) == "e+");
  CHECK(blade_name(5) == "e-");
  std::array<int, 6> per_grade{};
  for (int s = 0; s < 32; ++s) {
    per_grade[grade_of_slot(s)]++;
    CHECK(slot_of_mask(kBladeMask[s]) == s);
    if (s > 0) CHECK(grade_of_slot(s) >= grade_of_slot(s - 1));
  }
  CHECK(per_grade == std::array<int, 6>{1, 5, 10, 10, 5, 1});
  CHECK(blade_order_hash().size() == 16);
}

TEST_CASE("geometric product matches the Dirac matrix representation") {
  DiracOracle oracle;
  // Basis-vector squares: ++++-
  for (int k = 1; k <= 5; ++k) {
    const auto e = Multivector32::blade(k);
    CHECK((e * e).scalar_part() == doctest::Approx(k == 5 ? -1.0 : 1.0));
  }
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_mv(rng), b = random_mv(rng);
    const auto expected = oracle.from_matrix(oracle.to_matrix(a) * oracle.to_matrix(b));
    CHECK(geometric_product(a, b).max_abs_diff(expected) < 1e-12);
  }
  // Every pair of basis blades individually.
  for (int s = 0; s < 32; ++s)
    for (int t = 0; t < 32; ++t) {
      const auto a = Multivector32::blade(s), b = Multivector32::blade(t);
      const auto expected = oracle.from_matrix(oracle.to_matrix(a) * oracle.to_matrix(b));
      REQUIRE((a * b).max_abs_diff(expected) < 1e-12);
    }
}

TEST_CASE("associativity and distributivity") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_mv(rng), b = random_mv(rng), c = random_mv(rng);
    CHECK(((a * b) * c).max_abs_diff(a * (b * c)) < 1e-9);
    CHECK((a * (b + c)).max_abs_diff(a * b + a * c) < 1e-9);
  }
}

TEST_CASE("reverse flips grades 2 and 3") {
  std::mt19937_64 rng(6);
  const auto a = random_mv(rng);
  const auto r = reverse(a);
  for (int s = 0; s < 32; ++s) {
    const int g = grade_of_slot(s);
    const double sign = (g * (g - 1) / 2) % 2 ? -1.0 : 1.0;
    CHECK(r[s] == sign * a[s]);
  }
  std::mt19937_64 rng2(7);
  const auto b = random_mv(rng2);
  CHECK(reverse(a * b).max_abs_diff(reverse(b) * reverse(a)) < 1e-12);
}

TEST_CASE("null basis") {
  const auto ei = e_inf(), eo = e_origin();
  CHECK((ei * ei).max_abs_diff(Multivector32()) < 1e-15);
  CHECK((eo * eo).max_abs_diff(Multivector32()) < 1e-15);
  // e_inf . e_0 = -1
  CHECK(0.5 * (ei * eo + eo * ei).scalar_part() == doctest::Approx(-1.0));
}

TEST_CASE("conformal points are null and round-trip") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p = random_point(rng, 5.0);
    const auto P = conformal_point(p);
    CHECK(std::abs((P * P).scalar_part()) < 1e-9);
    CHECK((point_position(P) - p).norm() < 1e-12);
    CHECK(0.5 * (P * e_inf() + e_inf() * P).scalar_part() == doctest::Approx(-1.0));
    // Inner product of points is -|p-q|^2 / 2.
    const Vec3 q = random_point(rng, 5.0);
    const auto Q = conformal_point(q);
    CHECK(0.5 * (P * Q + Q * P).scalar_part() ==
          doctest::Approx(-0.5 * (p - q).squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("translator sandwich translates points") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p = random_point(rng), t = random_point(rng);
    const auto moved = apply_versor(translator(t), conformal_point(p));
    CHECK((point_position(moved) - (p + t)).norm() < 1e-12);
    const auto back = apply_versor(translator(-t), moved);
    CHECK((point_position(back) - p).norm() < 1e-12);
  }
}

TEST_CASE("rotor sandwich equals the quaternion rotation") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 axis = random_unit(rng);
    const double angle = u(rng);
    const Quaternion q = Quaternion::from_axis_angle(axis, angle);
    const Vec3 v = random_point(rng);
    const Vec3 expected = rodrigues(axis, angle, v);
    CHECK((q.rotate(v) - expected).norm() < 1e-12);
    CHECK((q.to_matrix() * v - expected).norm() < 1e-12);
    const auto R = rotor_from_quaternion(q);
    const auto image = apply_versor(R, Multivector32::vector(v));
    CHECK((image.euclidean_part() - expected).norm() < 1e-9);
    CHECK((point_position(apply_versor(R, conformal_point(v))) - expected).norm() < 1e-9);
  }
}

TEST_CASE("quaternion composition matches rotor composition") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_quaternion(rng), b = random_quaternion(rng);
    const auto lhs = rotor_from_quaternion(a * b);
    const auto rhs = rotor_from_quaternion(a) * rotor_from_quaternion(b);
    CHECK(lhs.max_abs_diff(rhs) < 1e-12);
  }
}

TEST_CASE("motors are unit even versors") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = encode_vertex_normal(random_point(rng), random_unit(rng));
    CHECK(versor_norm_error(m) < 1e-9);
    int zeros = 0;
    for (int s = 0; s < 32; ++s)
      if (grade_of_slot(s) % 2 == 1) {
        CHECK(m[s] == 0.0);
        ++zeros;
      }
    CHECK(zeros == 16);
  }
}

TEST_CASE("encoded motor carries the origin to v and +Y to n") {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 v = random_point(rng), n = random_unit(rng);
    const auto m = encode_vertex_normal(v, n);
    const Eigen::Matrix4d h = motor_to_matrix(m);
    CHECK((h.block<3, 1>(0, 3) - v).norm() < 1e-9);
    CHECK((h.block<3, 1>(0, 1) - n).norm() < 1e-9);
    CHECK((h.block<3, 3>(0, 0).transpose() * h.block<3, 3>(0, 0) - Eigen::Matrix3d::Identity())
              .norm() < 1e-9);
    CHECK(h.block<3, 3>(0, 0).determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("align_y: minimal rotation, antipodal and zero normals") {
  CHECK((quaternion_align_y(Vec3(0, 1, 0)).rotate(Vec3(0, 1, 0)) - Vec3(0, 1, 0)).norm() < 1e-15);
  const auto flip = quaternion_align_y(Vec3(0, -1, 0));
  CHECK((flip.rotate(Vec3(0, 1, 0)) - Vec3(0, -1, 0)).norm() < 1e-12);
  CHECK(flip.x == doctest::Approx(1.0));
  // Axis of the minimal rotation is perpendicular to both +Y and n.
  const Vec3 n = Vec3(1, 2, 3).normalized();
  const auto q = quaternion_align_y(n);
  CHECK(std::abs(q.y) < 1e-15);
  CHECK((q.rotate(Vec3(0, 1, 0)) - n).norm() < 1e-12);
  CHECK(encode_vertex_normal(Vec3(1, 2, 3), Vec3::Zero())
            .max_abs_diff(encode_vertex_normal(Vec3(1, 2, 3), Vec3(0, 1, 0))) == 0.0);
}

TEST_CASE("encoding is exactly equivariant under translation") {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 v = random_point(rng), n = random_unit(rng), t = random_point(rng);
    const auto lhs = encode_vertex_normal(v + t, n);
    const auto rhs = motor(t, Quaternion{}) * encode_vertex_normal(v, n);
    CHECK(sign_insensitive_diff(lhs, rhs) < 1e-9);
  }
}

TEST_CASE("under rotation the encoding agrees on the +Y axis and differs by a twist about it") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 v = random_point(rng), n = random_unit(rng), t = random_point(rng);
    const auto q = random_quaternion(rng);
    const auto encoded = encode_vertex_normal(q.rotate(v) + t, q.rotate(n));
    const auto composed = motor(t, q) * encode_vertex_normal(v, n);
    const Eigen::Matrix4d a = motor_to_matrix(encoded), b = motor_to_matrix(composed);
    CHECK((a.col(3) - b.col(3)).norm() < 1e-9);
    CHECK((a.col(1) - b.col(1)).norm() < 1e-9);
    // composed^-1 * encoded fixes the origin and +Y: a pure rotor about Y.
    const auto twist = reverse(composed) * encoded;
    for (int s = 0; s < 32; ++s) {
      const auto name = blade_name(s);
      if (name == "1" || name == "e13") continue;
      CHECK(std::abs(twist[s]) < 1e-9);
    }
  }
}

TEST_CASE("motor_to_matrix rejects non-unit input") {
  auto m = encode_vertex_normal(Vec3(1, 0, 0), Vec3(0, 0, 1)) * 1.01;
  CHECK_THROWS_AS(motor_to_matrix(m), ContractError);
}

}  // TEST_SUITE
