#include <doctest.h>

#include <set>

#include "ngash/cga.hpp"
#include "ngash/dataset.hpp"
#include "ngash/errors.hpp"
#include "ngash/procedural.hpp"
#include "ngash/text_io.hpp"
#include "support.hpp"

using namespace ngash;
using namespace ngash::dataset;

namespace {

struct Corpus {
  testing::TempDir dir{"dataset"};
  std::filesystem::path meshes = dir / "meshes";
  std::filesystem::path out = dir / "out";
  Corpus() {
    std::filesystem::create_directories(meshes);
    save_obj(procedural::torus(1.0, 0.35, 8, 6), meshes / "a_torus.obj");
    save_obj(procedural::uv_sphere(1.0, 4, 6), meshes / "b_sphere.obj");
  }
};

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("generate then load pairs") {
  Corpus c;
  // One unreadable mesh is skipped, not fatal.
  write_text_file(c.meshes / "c_broken.obj", "v 0 0 0\nf 1 2 3\n");
  write_text_file(c.meshes / "notes.txt", "ignored");
  OracleConfig cfg;
  cfg.sqrt_n = 4;
  const Manifest m = generate(c.meshes, c.out, cfg);
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[0].mesh.filename() == "a_torus.obj");
  CHECK(m.entries[0].vertex_count == 48);
  CHECK(m.entries[1].vertex_count == 2 + 3 * 6);
  REQUIRE(m.failures.size() == 1);
  CHECK(m.failures[0].first.find("c_broken.obj") != std::string::npos);
  CHECK(m.blade_hash == cga::blade_order_hash());
  CHECK(std::filesystem::exists(c.out / "a_torus.coeffs"));

  const Manifest back = read_manifest(c.out / kManifestName);
  REQUIRE(back.entries.size() == 2);
  CHECK(back.oracle.sqrt_n == 4);
  CHECK(back.oracle.shadowed);
  CHECK(std::filesystem::equivalent(back.entries[1].coefficients, c.out / "b_sphere.coeffs"));

  const auto pairs = load_pairs(back);
  REQUIRE(pairs.size() == 68);
  // First pair: encoding of vertex 0 of the torus, its oracle row.
  const Mesh torus = load_obj(c.meshes / "a_torus.obj");
  const auto motor = cga::encode_vertex_normal(torus.vertices[0], torus.normals[0]);
  for (int k = 0; k < 32; ++k) CHECK(pairs[0].input[std::size_t(k)] == motor[k]);
  const auto t = run_oracle(torus, cfg);
  for (int k = 0; k < 27; ++k) CHECK(pairs[0].target[std::size_t(k)] == t.rows(0, k));
}

TEST_CASE("truncated coefficient files are integrity errors") {
  Corpus c;
  OracleConfig cfg;
  cfg.sqrt_n = 3;
  generate(c.meshes, c.out, cfg);
  const auto path = c.out / "a_torus.coeffs";
  const std::string text = read_text_file(path);
  write_text_file(path, text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_pairs(read_manifest(c.out / kManifestName)), IntegrityError);
  // Cut on a line boundary: fewer rows than vertices.
  const auto cut = text.rfind('\n', text.size() - 2);
  write_text_file(path, text.substr(0, cut + 1));
  CHECK_THROWS_AS(load_pairs(read_manifest(c.out / kManifestName)), IntegrityError);
}

TEST_CASE("manifests from a different blade order are refused") {
  Corpus c;
  generate(c.meshes, c.out, OracleConfig{});
  const auto path = c.out / kManifestName;
  std::string text = read_text_file(path);
  const auto at = text.find(cga::blade_order_hash());
  REQUIRE(at != std::string::npos);
  text.replace(at, 16, "ffffffffffffffff");
  write_text_file(path, text);
  CHECK_THROWS_AS(load_pairs(read_manifest(path)), IncompatibilityError);
  CHECK_THROWS_AS(parse_manifest("format=other\n", c.out), FormatError);
  CHECK_THROWS_AS(read_manifest(c.out / "missing"), IoError);
}

TEST_CASE("a vertex with a vanishing normal sum is encoded with +Y") {
  testing::TempDir dir("zero-normal");
  std::filesystem::create_directories(dir / "m");
  // Vertex 3 belongs to no face.
  write_text_file(dir / "m" / "lonely.obj", "v 0 0 0\nv 0 0 1\nv 1 0 0\nv 3 3 3\nf 1 2 3\n");
  const Manifest m = generate(dir / "m", dir / "out", OracleConfig{});
  const auto pairs = load_pairs(m);
  REQUIRE(pairs.size() == 4);
  const auto motor = cga::encode_vertex_normal(Vec3(3, 3, 3), kUp);
  for (int k = 0; k < 32; ++k) CHECK(pairs[3].input[std::size_t(k)] == motor[k]);
  for (double v : pairs[3].target) CHECK(std::isfinite(v));
}

TEST_CASE("split is disjoint, exhaustive, seeded") {
  std::vector<neural::Sample> pairs(100);
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].input[0] = double(i);
  const auto [train, val] = split(pairs, 0.8, 7);
  CHECK(train.size() == 80);
  CHECK(val.size() == 20);
  std::set<double> ids;
  for (const auto& s : train) ids.insert(s.input[0]);
  for (const auto& s : val) ids.insert(s.input[0]);
  CHECK(ids.size() == 100);
  const auto again = split(pairs, 0.8, 7);
  CHECK(again.first[0].input[0] == train[0].input[0]);
  CHECK(again.second.back().input[0] == val.back().input[0]);
  CHECK_THROWS_AS(split(pairs, 1.0, 7), ContractError);
}

TEST_CASE("empty corpora fail") {
  testing::TempDir dir("empty");
  CHECK_THROWS_AS(generate(dir.path(), dir / "out", OracleConfig{}), DataError);
  CHECK_THROWS_AS(generate(dir / "nope", dir / "out", OracleConfig{}), IoError);
}

}  // TEST_SUITE
