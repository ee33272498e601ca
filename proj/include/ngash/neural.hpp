#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ngash/mesh.hpp"
#include "ngash/prt.hpp"

namespace ngash::neural {

inline constexpr int kInputWidth = 32;
inline constexpr int kOutputWidth = 27;
inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Hidden widths and the dropout rate after each hidden layer. The defaults
// are the production network; narrower instances are used for exhaustive
// gradient checks.
struct Architecture {
  std::vector<int> hidden = {1024, 512, 256, 128};
  std::vector<double> dropout = {0.3, 0.2, 0.1, 0.05};
};

struct BatchNorm {
  Vector gamma, beta, running_mean, running_var;

  static BatchNorm identity(int features);
};

struct Dense {
  RowMatrix weight;  // out x in
  Vector bias;
};

// input batch-norm -> per hidden layer (dense -> batch-norm -> SiLU ->
// dropout) -> dense to 27 outputs. Targets are standardized with
// target_mean / target_std during training; forward() undoes it.
struct ModelWeights {
  BatchNorm input_norm;
  std::vector<Dense> layers;
  std::vector<BatchNorm> hidden_norms;
  std::vector<double> dropout;
  Vector target_mean = Vector::Zero(kOutputWidth);
  Vector target_std = Vector::Ones(kOutputWidth);
  std::uint64_t seed = 0;
  // Free-form provenance written to the manifest (training config etc).
  std::vector<std::pair<std::string, std::string>> notes;

  std::vector<int> widths() const;
  // Throws ContractError when the invariants do not hold.
  void check() const;
};

// One named tensor of a model, row-major view into its storage.
struct ParamView {
  std::string name;
  double* data;
  Eigen::Index rows;
  Eigen::Index cols;
  Eigen::Index size() const { return rows * cols; }
};

// Trainable parameters: weights, biases, batch-norm gamma and beta.
std::vector<ParamView> trainable_params(ModelWeights& w);
// Every tensor in serialization order: input batch-norm (gamma, beta, mean,
// variance), then per layer weight, bias and that layer's batch-norm, then
// the target mean and std.
std::vector<ParamView> all_tensors(ModelWeights& w);

// Same shapes as w, every value zero.
ModelWeights zeros_like(const ModelWeights& w);

// He (fan-in) normal weights, zero biases, identity batch-norm.
ModelWeights init_model(std::uint64_t seed, const Architecture& arch = {});

// Rounds every stored value to the nearest float32, the on-disk precision.
void round_to_float32(ModelWeights& w);

enum class Mode { Train, Eval };

// Inverted-dropout keep masks (already scaled by 1/(1-p)), one per hidden
// layer, features x batch.
using DropoutMasks = std::vector<Matrix>;
DropoutMasks sample_dropout_masks(const ModelWeights& w, Eigen::Index batch,
                                  std::mt19937_64& rng);

// inputs: batch x 32, returns batch x 27 in coefficient units. Eval mode uses
// running statistics and no dropout and is deterministic; train mode uses
// batch statistics, the given masks, and updates running statistics.
Matrix forward(ModelWeights& w, const Matrix& inputs, Mode mode,
               const DropoutMasks* masks = nullptr);
Matrix forward_eval(const ModelWeights& w, const Matrix& inputs);

// Mean squared error over batch x 27 against standardized targets, with
// gradients for every trainable parameter (same layout as trainable_params).
// Running statistics are left untouched.
double loss_and_gradients(const ModelWeights& w, const Matrix& inputs,
                          const Matrix& targets, const DropoutMasks& masks,
                          ModelWeights* gradients);

// Loss only (train-mode statistics, fixed masks); the finite-difference
// oracle in the tests probes this.
double loss_value(const ModelWeights& w, const Matrix& inputs,
                  const Matrix& targets, const DropoutMasks& masks);

Matrix standardize_targets(const ModelWeights& w, const Matrix& targets);

// Per-coefficient mean / std over the given targets (std floored at 1e-8).
void fit_target_normalization(ModelWeights& w, const Matrix& targets);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  int epochs = 200;
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double split_fraction = 0.8;
  Architecture architecture;
  void check() const;
};

struct TrainState {
  ModelWeights weights;
  ModelWeights first_moment;
  ModelWeights second_moment;
  std::uint64_t step = 0;
  std::mt19937_64 rng;

  explicit TrainState(ModelWeights initial, std::uint64_t seed = 0);
};

// One Adam step on a batch (batch x 32 inputs, batch x 27 raw targets).
// Returns the batch loss before the update; throws TrainingError if it is
// not finite.
double train_step(TrainState& state, const Matrix& inputs, const Matrix& targets,
                  const TrainConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;       // mean batch loss, standardized units
  double validation_mse = 0.0;   // eval mode, coefficient units
};

struct TrainResult {
  ModelWeights final_weights;
  ModelWeights best_weights;
  std::vector<EpochRecord> history;
  std::size_t train_count = 0;
  std::size_t validation_count = 0;
};

struct Sample {
  std::array<double, kInputWidth> input;
  std::array<double, kOutputWidth> target;
};

TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Motor inputs for every vertex (vertex count x 32).
Matrix encode_mesh(const Mesh& mesh);

// Encode + eval forward. Requires normals.
TransferMatrix predict_mesh(const ModelWeights& w, const Mesh& mesh);

// Mean over rows*cols of squared differences.
double mean_squared_error(const Matrix& a, const Matrix& b);

}  // namespace ngash::neural
