#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "ngash/bvh.hpp"
#include "ngash/cga.hpp"
#include "ngash/errors.hpp"
#include "ngash/neural.hpp"
#include "ngash/procedural.hpp"
#include "ngash/prt.hpp"
#include "ngash/text_io.hpp"
#include "ngash/weights_io.hpp"
#include "support.hpp"

using namespace ngash;
using namespace ngash::neural;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Perturbs every trainable value slightly so that batch-norm gamma / beta and
// biases are not at their special initial values.
void jitter(ModelWeights& w, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.1);
  for (auto& p : trainable_params(w))
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data[i] += g(rng);
}

struct GradientReport {
  double worst = 0.0;
  std::string where;
  std::size_t checked = 0;
};

// Central finite differences on loss_value, compared to the analytic
// gradient. Relative error with a floor so that (near) zero gradients are
// compared absolutely.
GradientReport check_gradients(ModelWeights w, const Matrix& x, const Matrix& y,
                               const DropoutMasks& masks, std::size_t per_tensor,
                               std::mt19937_64& rng) {
  constexpr double h = 1e-4, floor = 1e-6;
  ModelWeights grads = zeros_like(w);
  loss_and_gradients(w, x, y, masks, &grads);
  auto params = trainable_params(w);
  auto gparams = trainable_params(grads);
  REQUIRE(params.size() == gparams.size());
  GradientReport report;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<Eigen::Index> idx;
    if (per_tensor == 0 || std::size_t(params[p].size()) <= per_tensor) {
      for (Eigen::Index i = 0; i < params[p].size(); ++i) idx.push_back(i);
    } else {
      std::uniform_int_distribution<Eigen::Index> pick(0, params[p].size() - 1);
      for (std::size_t k = 0; k < per_tensor; ++k) idx.push_back(pick(rng));
    }
    for (auto i : idx) {
      double& v = params[p].data[i];
      const double saved = v;
      v = saved + h;
      const double up = loss_value(w, x, y, masks);
      v = saved - h;
      const double down = loss_value(w, x, y, masks);
      v = saved;
      const double fd = (up - down) / (2 * h);
      const double an = gparams[p].data[i];
      const double err = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), floor);
      ++report.checked;
      if (err > report.worst) {
        report.worst = err;
        report.where = params[p].name + "[" + std::to_string(i) + "] fd=" + format_double(fd) +
                       " analytic=" + format_double(an);
      }
    }
  }
  return report;
}

bool same_tensors(ModelWeights a, ModelWeights b) {
  auto ta = all_tensors(a), tb = all_tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i].name != tb[i].name || ta[i].size() != tb[i].size()) return false;
    for (Eigen::Index k = 0; k < ta[i].size(); ++k)
      if (ta[i].data[k] != tb[i].data[k]) return false;
  }
  return true;
}

struct Scene {
  Mesh mesh;
  TransferMatrix transfer;
};

const Scene& torus_scene() {
  static const Scene scene = [] {
    Scene s;
    s.mesh = procedural::torus(1.0, 0.35, 24, 28, 0.05, 4);
    s.transfer = transfer_shadowed(s.mesh, build_bvh(s.mesh), sh::generate_samples(5, 1));
    return s;
  }();
  return scene;
}

std::vector<Sample> samples_from(const Scene& s, std::size_t count) {
  const Matrix x = encode_mesh(s.mesh);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < count; ++i) {
    Sample smp;
    for (int c = 0; c < kInputWidth; ++c) smp.input[c] = x(Eigen::Index(i), c);
    for (int c = 0; c < kOutputWidth; ++c) smp.target[c] = s.transfer.rows(Eigen::Index(i), c);
    out.push_back(smp);
  }
  return out;
}

const Architecture kNarrow{{6, 5}, {0.3, 0.1}};

}  // namespace

TEST_SUITE("neural") {

TEST_CASE("initialization: shapes, He variance, seed determinism") {
  const ModelWeights w = init_model(7);
  CHECK(w.widths() == std::vector<int>{32, 1024, 512, 256, 128, 27});
  REQUIRE(w.layers.size() == 5);
  CHECK(w.hidden_norms.size() == 4);
  CHECK(w.layers[0].weight.rows() == 1024);
  CHECK(w.layers[0].weight.cols() == 32);
  CHECK(w.layers[4].weight.rows() == 27);
  CHECK_NOTHROW(w.check());
  for (const auto& layer : w.layers) {
    const double n = double(layer.weight.size());
    const double mean = layer.weight.sum() / n;
    const double var = (layer.weight.array() - mean).square().sum() / n;
    const double expected = 2.0 / double(layer.weight.cols());
    CHECK(std::abs(var / expected - 1.0) < 0.2);
    CHECK(layer.bias.cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(same_tensors(init_model(7), w));
  CHECK_FALSE(same_tensors(init_model(8), w));
}

TEST_CASE("forward pass shapes and basic invariants") {
  const auto& scene = torus_scene();
  ModelWeights w = init_model(3);
  const Matrix x = encode_mesh(scene.mesh);
  REQUIRE(x.rows() == 672);
  REQUIRE(x.cols() == kInputWidth);
  const Matrix y = forward_eval(w, x);
  CHECK(y.rows() == 672);
  CHECK(y.cols() == kOutputWidth);
  CHECK(y.allFinite());

  Matrix dup(4, kInputWidth);
  dup << x.row(5), x.row(5), x.row(9), x.row(5);
  const Matrix yd = forward_eval(w, dup);
  CHECK(yd.row(0) == yd.row(1));
  CHECK(yd.row(0) == yd.row(3));
  CHECK((yd.row(0) - y.row(5)).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(forward_eval(w, Matrix::Zero(3, kInputWidth)).allFinite());
  // Train mode on a zero batch: zero variance must not produce NaN.
  std::mt19937_64 rng(1);
  const auto masks = sample_dropout_masks(w, 3, rng);
  CHECK(forward(w, Matrix::Zero(3, kInputWidth), Mode::Train, &masks).allFinite());
  CHECK_THROWS_AS(forward_eval(w, Matrix::Zero(3, 31)), ContractError);
}

TEST_CASE("encoding is the motor coefficient vector") {
  const auto& scene = torus_scene();
  const Matrix x = encode_mesh(scene.mesh);
  for (int v : {0, 100, 671}) {
    const auto m = cga::encode_vertex_normal(scene.mesh.vertices[v], scene.mesh.normals[v]);
    for (int c = 0; c < kInputWidth; ++c) CHECK(x(v, c) == m[c]);
  }
  Mesh bare = scene.mesh;
  bare.normals.clear();
  CHECK_THROWS_AS(encode_mesh(bare), ContractError);
}

TEST_CASE("evaluation does not depend on batch composition") {
  const auto& scene = torus_scene();
  ModelWeights w = init_model(4);
  std::mt19937_64 rng(4);
  jitter(w, rng);
  const Matrix x = encode_mesh(scene.mesh);
  const Matrix all = forward_eval(w, x);
  Eigen::Index start = 0;
  for (Eigen::Index size : {1, 7, 64, 300, 300}) {
    size = std::min(size, x.rows() - start);
    const Matrix part = forward_eval(w, x.middleRows(start, size));
    CHECK((part - all.middleRows(start, size)).cwiseAbs().maxCoeff() < 1e-9);
    start += size;
  }
}

TEST_CASE("analytic gradients match finite differences: every parameter, narrow network") {
  std::mt19937_64 rng(5);
  ModelWeights w = init_model(5, kNarrow);
  jitter(w, rng);
  const Matrix x = random_matrix(3, kInputWidth, rng);
  const Matrix y = random_matrix(3, kOutputWidth, rng);
  const auto masks = sample_dropout_masks(w, 3, rng);
  const auto report = check_gradients(w, x, y, masks, 0, rng);
  INFO(report.where);
  CHECK(report.checked > 400);
  CHECK(report.worst < 1e-5);
}

TEST_CASE("analytic gradients match finite differences: sampled, full network") {
  std::mt19937_64 rng(6);
  ModelWeights w = init_model(6);
  jitter(w, rng);
  const Matrix x = random_matrix(3, kInputWidth, rng);
  const Matrix y = random_matrix(3, kOutputWidth, rng);
  const auto masks = sample_dropout_masks(w, 3, rng);
  const auto report = check_gradients(w, x, y, masks, 6, rng);
  INFO(report.where);
  CHECK(report.worst < 1e-4);
}

TEST_CASE("gradient evaluation leaves the running statistics alone") {
  std::mt19937_64 rng(7);
  ModelWeights w = init_model(7, kNarrow);
  const ModelWeights before = w;
  ModelWeights grads = zeros_like(w);
  const Matrix x = random_matrix(5, kInputWidth, rng);
  loss_and_gradients(w, x, random_matrix(5, kOutputWidth, rng), sample_dropout_masks(w, 5, rng), &grads);
  CHECK(same_tensors(before, w));
}

TEST_CASE("a zero learning rate leaves every trainable parameter unchanged") {
  const auto& scene = torus_scene();
  ModelWeights w = init_model(8, kNarrow);
  const Matrix x = encode_mesh(scene.mesh).topRows(32);
  const Matrix y = Matrix(scene.transfer.rows.topRows(32));
  fit_target_normalization(w, y);
  TrainState state(w, 8);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.architecture = kNarrow;
  for (int i = 0; i < 5; ++i) train_step(state, x, y, cfg);
  auto a = trainable_params(w), b = trainable_params(state.weights);
  for (std::size_t p = 0; p < a.size(); ++p)
    for (Eigen::Index i = 0; i < a[p].size(); ++i) CHECK(a[p].data[i] == b[p].data[i]);
  CHECK(state.step == 5);
  // Batch-norm running statistics do move: they are not trained parameters.
  CHECK(state.weights.input_norm.running_mean != w.input_norm.running_mean);
}

TEST_CASE("ten vertices are memorized") {
  const auto& scene = torus_scene();
  ModelWeights w = init_model(9);
  const Matrix x = encode_mesh(scene.mesh).topRows(10);
  const Matrix y = Matrix(scene.transfer.rows.topRows(10));
  fit_target_normalization(w, y);
  TrainState state(w, 9);
  TrainConfig cfg;
  std::vector<double> losses;
  for (int i = 0; i < 500; ++i) losses.push_back(train_step(state, x, y, cfg));
  double first = 0, last = 0;
  for (int i = 0; i < 10; ++i) {
    first += losses[std::size_t(i)];
    last += losses[losses.size() - 1 - std::size_t(i)];
  }
  MESSAGE("mean loss, first 10 steps " << first / 10 << ", last 10 steps " << last / 10);
  CHECK(last <= 0.1 * first);
}

TEST_CASE("non-finite losses are reported") {
  ModelWeights w = init_model(10, kNarrow);
  TrainState state(w, 10);
  std::mt19937_64 rng(10);
  const Matrix x = random_matrix(4, kInputWidth, rng);
  // Targets so large that their square overflows.
  CHECK_THROWS_AS(train_step(state, x, Matrix::Constant(4, kOutputWidth, 1e300), TrainConfig{}),
                  TrainingError);
  Matrix bad = x;
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train_step(state, bad, Matrix::Zero(4, kOutputWidth), TrainConfig{}), ContractError);
}

TEST_CASE("training is deterministic for a seed") {
  const auto data = samples_from(torus_scene(), 120);
  TrainConfig cfg;
  cfg.architecture = kNarrow;
  cfg.epochs = 4;
  cfg.batch_size = 16;
  cfg.seed = 3;
  std::vector<EpochRecord> streamed;
  const auto a = train(data, cfg, [&](const EpochRecord& r) { streamed.push_back(r); });
  const auto b = train(data, cfg);
  REQUIRE(a.history.size() == 4);
  CHECK(streamed.size() == 4);
  CHECK(a.train_count == 96);
  CHECK(a.validation_count == 24);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].validation_mse == b.history[i].validation_mse);
  }
  CHECK(same_tensors(a.final_weights, b.final_weights));
  cfg.seed = 4;
  CHECK_FALSE(same_tensors(train(data, cfg).final_weights, a.final_weights));

  TrainConfig bad = cfg;
  bad.learning_rate = 0;
  CHECK_THROWS_AS(train(data, bad), ContractError);
  CHECK_THROWS_AS(train({}, cfg), ContractError);
}

TEST_CASE("predictions carry metadata") {
  const auto& scene = torus_scene();
  const auto t = predict_mesh(init_model(11, kNarrow), scene.mesh);
  CHECK(t.vertex_count() == 672);
  CHECK(t.meta.source == "predicted");
  CHECK(t.meta.blade_hash == cga::blade_order_hash());
  CHECK(mean_squared_error(Matrix::Ones(2, 2), Matrix::Zero(2, 2)) == 1.0);
}

TEST_CASE("weights round trip bit-exactly and reject tampering") {
  const auto data = samples_from(torus_scene(), 64);
  TrainConfig cfg;
  cfg.architecture = kNarrow;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  const ModelWeights w = train(data, cfg).final_weights;
  testing::TempDir dir("weights");
  const auto path = dir / "model";
  save_weights(w, path);
  const ModelWeights back = load_weights(path);
  CHECK(same_tensors(w, back));
  CHECK(back.dropout == w.dropout);
  CHECK(back.widths() == w.widths());
  const Matrix x = encode_mesh(torus_scene().mesh);
  CHECK(forward_eval(w, x) == forward_eval(back, x));

  const auto manifest_path = path / kManifestName;
  const std::string manifest = read_text_file(manifest_path);
  auto with_manifest = [&](const std::string& text) { write_text_file(manifest_path, text); };
  auto replace = [&](std::string s, const std::string& from, const std::string& to) {
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    return s.replace(at, from.size(), to);
  };

  with_manifest(replace(manifest, "blade_hash=" + cga::blade_order_hash(), "blade_hash=0000000000000000"));
  CHECK_THROWS_AS(load_weights(path), IncompatibilityError);
  with_manifest(replace(manifest, "version=1", "version=2"));
  CHECK_THROWS_AS(load_weights(path), IncompatibilityError);
  with_manifest(replace(manifest, "format=ngash-weights", "format=other"));
  CHECK_THROWS_AS(load_weights(path), FormatError);
  with_manifest(replace(manifest, "seed=", "seed=x"));
  CHECK_THROWS_AS(load_weights(path), FormatError);
  with_manifest(manifest);
  CHECK_NOTHROW(load_weights(path));

  // Flip one byte of a tensor blob: checksum mismatch.
  const auto blob = path / "layer0.weight.f32";
  REQUIRE(std::filesystem::exists(blob));
  auto bytes = read_binary_file(blob);
  bytes[5] ^= 0x40;
  {
    std::ofstream out(blob, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  }
  CHECK_THROWS_AS(load_weights(path), IntegrityError);
  std::filesystem::resize_file(blob, 8);
  CHECK_THROWS_AS(load_weights(path), IntegrityError);
  std::filesystem::remove(manifest_path);
  CHECK_THROWS_AS(load_weights(path), IoError);
}

}  // TEST_SUITE
