#include <doctest.h>

#include <random>

#include "ngash/errors.hpp"
#include "ngash/procedural.hpp"
#include "ngash/shading.hpp"
#include "support.hpp"

using namespace ngash;
using namespace ngash::shading;

namespace {

TransferMatrix random_transfer(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  TransferMatrix t;
  t.rows.resize(Eigen::Index(n), kTransferWidth);
  for (Eigen::Index i = 0; i < t.rows.size(); ++i) t.rows.data()[i] = u(rng);
  return t;
}

sh::LightCoefficients random_light(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  auto l = sh::LightCoefficients::zeros();
  for (int j = 0; j < 9; ++j)
    for (int k = 0; k < 3; ++k) l.values(j, k) = u(rng);
  return l;
}

// Plain triple loop, channel-separable.
VertexColors reference_shade(const TransferMatrix& t, const sh::LightCoefficients& l, double intensity) {
  VertexColors c(t.rows.rows(), 3);
  for (Eigen::Index i = 0; i < t.rows.rows(); ++i)
    for (int k = 0; k < 3; ++k) {
      double s = 0;
      for (int j = 0; j < 9; ++j) s += t.rows(i, 3 * j + k) * l.values(j, k);
      c(i, k) = intensity / 255.0 * s;
    }
  return c;
}

}  // namespace

TEST_SUITE("shading") {

TEST_CASE("matches the triple-loop reference") {
  std::mt19937_64 rng(1);
  const auto t = random_transfer(1000, rng);
  for (double intensity : {255.0, 100.0, 1.0}) {
    const auto l = random_light(rng);
    CHECK((shade(t, l, intensity) - reference_shade(t, l, intensity)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("identity and zero cases") {
  TransferMatrix t;
  t.rows = TransferRows::Zero(4, kTransferWidth);
  t.rows.leftCols(3).setOnes();
  auto l = sh::LightCoefficients::zeros();
  l.values.row(0).setOnes();
  const auto c = shade(t, l);
  for (Eigen::Index i = 0; i < c.size(); ++i) CHECK(c.data()[i] == 1.0);
  CHECK(shade(t, sh::LightCoefficients::zeros()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(shade(t, l, 0.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shading is bilinear") {
  std::mt19937_64 rng(2);
  const auto p = random_transfer(50, rng), q = random_transfer(50, rng);
  const auto l1 = random_light(rng), l2 = random_light(rng);
  const double a = 0.7, b = -1.3;
  auto mix = sh::LightCoefficients::zeros();
  mix.values = a * l1.values + b * l2.values;
  CHECK((shade(p, mix) - (a * shade(p, l1) + b * shade(p, l2))).cwiseAbs().maxCoeff() < 1e-12);
  TransferMatrix pq;
  pq.rows = a * p.rows + b * q.rows;
  CHECK((shade(pq, l1) - (a * shade(p, l1) + b * shade(q, l1))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mismatched shapes are rejected") {
  std::mt19937_64 rng(3);
  const auto t = random_transfer(3, rng);
  sh::LightCoefficients four;
  four.bands = 2;
  four.values = Eigen::MatrixXd::Ones(4, 3);
  CHECK_THROWS_AS(shade(t, four), ContractError);
}

TEST_CASE("cache reshades only when geometry, light or intensity change") {
  std::mt19937_64 rng(4);
  Mesh mesh = procedural::cube(1.0);
  const auto t = random_transfer(mesh.vertex_count(), rng);
  auto l = random_light(rng);
  ShadeCache cache;
  bool recomputed = false;
  CHECK(needs_update(cache, mesh, l));
  const VertexColors first = shade_cached(cache, mesh, t, l, 255, &recomputed);
  CHECK(recomputed);
  CHECK_FALSE(needs_update(cache, mesh, l));
  shade_cached(cache, mesh, t, l, 255, &recomputed);
  CHECK_FALSE(recomputed);

  mesh.vertices[2].x() += 1e-3;
  CHECK(needs_update(cache, mesh, l));
  shade_cached(cache, mesh, t, l, 255, &recomputed);
  CHECK(recomputed);

  l.values(4, 1) += 1e-9;
  CHECK(needs_update(cache, mesh, l));
  shade_cached(cache, mesh, t, l, 255, &recomputed);
  CHECK(recomputed);

  const auto& dimmer = shade_cached(cache, mesh, t, l, 128, &recomputed);
  CHECK(recomputed);
  CHECK((dimmer - reference_shade(t, l, 128)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(first.rows() == dimmer.rows());
}

TEST_CASE("color files and PPM output") {
  std::mt19937_64 rng(5);
  const Mesh mesh = procedural::uv_sphere(1.0, 8, 12);
  const auto colors = shade(random_transfer(mesh.vertex_count(), rng), random_light(rng));
  testing::TempDir dir("shade");
  write_colors_file(dir / "c.txt", colors);
  CHECK(read_colors_file(dir / "c.txt") == colors);
  CHECK_THROWS_AS(parse_colors("1 2\n"), ParseError);

  VertexColors red(Eigen::Index(mesh.vertex_count()), 3);
  red.col(0).setConstant(2.0);  // clamped
  red.col(1).setZero();
  red.col(2).setConstant(-1.0);  // clamped
  const std::string ppm = render_ppm(mesh, red, 32);
  const std::string header = "P6\n32 32\n255\n";
  REQUIRE(ppm.rfind(header, 0) == 0);
  REQUIRE(ppm.size() == header.size() + 32 * 32 * 3);
  auto pixel = [&](int x, int y) {
    const std::size_t at = header.size() + 3 * (std::size_t(y) * 32 + x);
    return std::array<int, 3>{std::uint8_t(ppm[at]), std::uint8_t(ppm[at + 1]), std::uint8_t(ppm[at + 2])};
  };
  CHECK(pixel(16, 16) == std::array<int, 3>{255, 0, 0});
  CHECK(pixel(0, 0) == std::array<int, 3>{0, 0, 0});
  CHECK_THROWS_AS(render_ppm(mesh, red.topRows(3), 32), ContractError);
}

}  // TEST_SUITE
