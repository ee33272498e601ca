#include "ngash/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ngash/cga.hpp"
#include "ngash/errors.hpp"
#include "ngash/parallel.hpp"
#include "ngash/text_io.hpp"

namespace ngash::neural {

namespace {

constexpr Eigen::Index kEvalChunk = 512;
constexpr double kVarianceFloor = 1e-12;

ParamView view(std::string name, Vector& v) {
  return {std::move(name), v.data(), v.size(), 1};
}
ParamView view(std::string name, RowMatrix& m) {
  return {std::move(name), m.data(), m.rows(), m.cols()};
}

void check_inputs(const Matrix& inputs) {
  if (inputs.cols() != kInputWidth)
    throw ContractError("network input must have 32 columns, got " +
                        std::to_string(inputs.cols()));
  if (inputs.rows() == 0) throw ContractError("network input batch is empty");
  if (!inputs.allFinite()) throw ContractError("network input contains non-finite values");
}

struct BnCache {
  Matrix xhat;
  Vector invstd;
};

// Features x batch.
Matrix bn_train(const BatchNorm& bn, const Matrix& z, BnCache* cache, Vector* mean,
                Vector* var) {
  Vector mu = z.rowwise().mean();
  Matrix centered = z.colwise() - mu;
  Vector v = centered.array().square().rowwise().mean();
  Vector invstd = (v.array() + kBatchNormEps).rsqrt();
  Matrix xhat = centered.array().colwise() * invstd.array();
  Matrix y = (xhat.array().colwise() * bn.gamma.array()).colwise() + bn.beta.array();
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->invstd = std::move(invstd);
  }
  if (mean) *mean = std::move(mu);
  if (var) *var = std::move(v);
  return y;
}

Matrix bn_eval(const BatchNorm& bn, const Matrix& z) {
  Vector scale = bn.gamma.array() * (bn.running_var.array() + kBatchNormEps).rsqrt();
  Vector shift = bn.beta.array() - bn.running_mean.array() * scale.array();
  return (z.array().colwise() * scale.array()).colwise() + shift.array();
}

void update_running(BatchNorm& bn, const Vector& mean, const Vector& var, Eigen::Index batch) {
  const double unbias = batch > 1 ? double(batch) / double(batch - 1) : 1.0;
  bn.running_mean = (1.0 - kBatchNormMomentum) * bn.running_mean + kBatchNormMomentum * mean;
  bn.running_var = (1.0 - kBatchNormMomentum) * bn.running_var +
                   kBatchNormMomentum * unbias * var;
  bn.running_var = bn.running_var.cwiseMax(kVarianceFloor);
}

// dy -> dz; accumulates dgamma / dbeta.
Matrix bn_backward(const BatchNorm& bn, const BnCache& c, const Matrix& dy, Vector& dgamma,
                   Vector& dbeta) {
  const double b = double(dy.cols());
  dgamma = (dy.array() * c.xhat.array()).rowwise().sum();
  dbeta = dy.rowwise().sum();
  Matrix dxhat = dy.array().colwise() * bn.gamma.array();
  Vector sum_dxhat = dxhat.rowwise().sum();
  Vector sum_dxhat_xhat = (dxhat.array() * c.xhat.array()).rowwise().sum();
  Matrix dz = (b * dxhat.array() - (c.xhat.array().colwise() * sum_dxhat_xhat.array()))
                  .colwise() -
              sum_dxhat.array();
  return dz.array().colwise() * (c.invstd.array() / b);
}

struct LayerCache {
  Matrix input;  // input of the dense layer
  BnCache bn;
  Matrix pre;    // batch-norm output (SiLU argument)
  Matrix sig;    // sigmoid(pre)
};

struct TrainPass {
  BnCache input_bn;
  std::vector<LayerCache> layers;
  Matrix last_input;
  Matrix output;  // standardized, 27 x batch
  std::vector<Vector> means, vars;  // [0] input stage, then hidden
};

// Train-mode pass on features x batch inputs.
TrainPass train_pass(const ModelWeights& w, const Matrix& x, const DropoutMasks& masks) {
  const std::size_t hidden = w.hidden_norms.size();
  if (masks.size() != hidden) throw ContractError("dropout mask count mismatch");
  TrainPass p;
  p.means.resize(hidden + 1);
  p.vars.resize(hidden + 1);
  Matrix h = bn_train(w.input_norm, x, &p.input_bn, &p.means[0], &p.vars[0]);
  p.layers.resize(hidden);
  for (std::size_t l = 0; l < hidden; ++l) {
    LayerCache& c = p.layers[l];
    Matrix z = w.layers[l].weight * h;
    z.colwise() += w.layers[l].bias;
    c.input = std::move(h);
    c.pre = bn_train(w.hidden_norms[l], z, &c.bn, &p.means[l + 1], &p.vars[l + 1]);
    c.sig = (1.0 + (-c.pre.array()).exp()).inverse();
    const Matrix& m = masks[l];
    if (m.rows() != c.pre.rows() || m.cols() != c.pre.cols())
      throw ContractError("dropout mask shape mismatch");
    h = c.pre.array() * c.sig.array() * m.array();
  }
  p.output = w.layers.back().weight * h;
  p.output.colwise() += w.layers.back().bias;
  p.last_input = std::move(h);
  return p;
}

Matrix eval_pass(const ModelWeights& w, const Matrix& x) {
  Matrix h = bn_eval(w.input_norm, x);
  for (std::size_t l = 0; l < w.hidden_norms.size(); ++l) {
    Matrix z = w.layers[l].weight * h;
    z.colwise() += w.layers[l].bias;
    Matrix y = bn_eval(w.hidden_norms[l], z);
    h = y.array() / (1.0 + (-y.array()).exp());
  }
  Matrix out = w.layers.back().weight * h;
  out.colwise() += w.layers.back().bias;
  return out;
}

Matrix destandardize(const ModelWeights& w, const Matrix& out_t) {
  // out_t: 27 x batch -> batch x 27
  Matrix scaled = (out_t.array().colwise() * w.target_std.array()).colwise() +
                  w.target_mean.array();
  return scaled.transpose();
}

double mse_standardized(const Matrix& out_t, const Matrix& targets_std) {
  return (out_t - targets_std.transpose()).array().square().mean();
}

float to_f32(double v) { return static_cast<float>(v); }

}  // namespace

BatchNorm BatchNorm::identity(int features) {
  return {Vector::Ones(features), Vector::Zero(features), Vector::Zero(features),
          Vector::Ones(features)};
}

std::vector<int> ModelWeights::widths() const {
  std::vector<int> out;
  if (layers.empty()) return out;
  out.push_back(int(layers.front().weight.cols()));
  for (const auto& l : layers) out.push_back(int(l.weight.rows()));
  return out;
}

void ModelWeights::check() const {
  if (layers.size() < 1 || hidden_norms.size() + 1 != layers.size() ||
      dropout.size() != hidden_norms.size())
    throw ContractError("model layer counts are inconsistent");
  const auto w = widths();
  if (w.front() != kInputWidth || w.back() != kOutputWidth)
    throw ContractError("model must map 32 inputs to 27 outputs");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows())
      throw ContractError("layer " + std::to_string(l) + " input width does not chain");
    if (layers[l].bias.size() != layers[l].weight.rows())
      throw ContractError("layer " + std::to_string(l) + " bias size mismatch");
  }
  auto check_bn = [](const BatchNorm& bn, Eigen::Index n, const std::string& what) {
    if (bn.gamma.size() != n || bn.beta.size() != n || bn.running_mean.size() != n ||
        bn.running_var.size() != n)
      throw ContractError(what + " batch-norm size mismatch");
    if ((bn.running_var.array() <= 0.0).any())
      throw ContractError(what + " running variance must be positive");
  };
  check_bn(input_norm, kInputWidth, "input");
  for (std::size_t l = 0; l < hidden_norms.size(); ++l)
    check_bn(hidden_norms[l], layers[l].weight.rows(), "hidden " + std::to_string(l));
  for (std::size_t l = 0; l < dropout.size(); ++l) {
    if (!(dropout[l] >= 0.0 && dropout[l] < 1.0))
      throw ContractError("dropout rates must lie in [0,1)");
    if (l > 0 && dropout[l] > dropout[l - 1])
      throw ContractError("dropout rates must be non-increasing");
  }
  if (target_mean.size() != kOutputWidth || target_std.size() != kOutputWidth ||
      (target_std.array() <= 0.0).any())
    throw ContractError("target normalization must have 27 entries with positive std");
}

std::vector<ParamView> trainable_params(ModelWeights& w) {
  std::vector<ParamView> out;
  out.push_back(view("input_norm.gamma", w.input_norm.gamma));
  out.push_back(view("input_norm.beta", w.input_norm.beta));
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l);
    out.push_back(view(p + ".weight", w.layers[l].weight));
    out.push_back(view(p + ".bias", w.layers[l].bias));
    if (l < w.hidden_norms.size()) {
      out.push_back(view(p + ".norm.gamma", w.hidden_norms[l].gamma));
      out.push_back(view(p + ".norm.beta", w.hidden_norms[l].beta));
    }
  }
  return out;
}

std::vector<ParamView> all_tensors(ModelWeights& w) {
  std::vector<ParamView> out;
  auto add_bn = [&](const std::string& p, BatchNorm& bn) {
    out.push_back(view(p + ".gamma", bn.gamma));
    out.push_back(view(p + ".beta", bn.beta));
    out.push_back(view(p + ".running_mean", bn.running_mean));
    out.push_back(view(p + ".running_var", bn.running_var));
  };
  add_bn("input_norm", w.input_norm);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l);
    out.push_back(view(p + ".weight", w.layers[l].weight));
    out.push_back(view(p + ".bias", w.layers[l].bias));
    if (l < w.hidden_norms.size()) add_bn(p + ".norm", w.hidden_norms[l]);
  }
  out.push_back(view("target.mean", w.target_mean));
  out.push_back(view("target.std", w.target_std));
  return out;
}

ModelWeights zeros_like(const ModelWeights& w) {
  ModelWeights z = w;
  for (auto& v : all_tensors(z)) std::fill(v.data, v.data + v.size(), 0.0);
  z.notes.clear();
  return z;
}

ModelWeights init_model(std::uint64_t seed, const Architecture& arch) {
  if (arch.dropout.size() != arch.hidden.size())
    throw ContractError("one dropout rate per hidden layer is required");
  ModelWeights w;
  w.seed = seed;
  w.dropout = arch.dropout;
  w.input_norm = BatchNorm::identity(kInputWidth);
  std::mt19937_64 rng(seed);
  std::vector<int> widths{kInputWidth};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(kOutputWidth);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l + 1] < 1) throw ContractError("layer widths must be positive");
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / widths[l]));
    Dense d;
    d.weight.resize(widths[l + 1], widths[l]);
    for (Eigen::Index i = 0; i < d.weight.size(); ++i) d.weight.data()[i] = normal(rng);
    d.bias = Vector::Zero(widths[l + 1]);
    w.layers.push_back(std::move(d));
    if (l + 2 < widths.size()) w.hidden_norms.push_back(BatchNorm::identity(widths[l + 1]));
  }
  round_to_float32(w);
  w.check();
  return w;
}

void round_to_float32(ModelWeights& w) {
  for (auto& v : all_tensors(w))
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data[i] = double(to_f32(v.data[i]));
  // A variance that underflows float32 would break the positivity invariant.
  auto fix = [](BatchNorm& bn) {
    bn.running_var = bn.running_var.cwiseMax(double(std::numeric_limits<float>::min()));
  };
  fix(w.input_norm);
  for (auto& bn : w.hidden_norms) fix(bn);
}

DropoutMasks sample_dropout_masks(const ModelWeights& w, Eigen::Index batch,
                                  std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  DropoutMasks masks;
  for (std::size_t l = 0; l < w.hidden_norms.size(); ++l) {
    const double p = w.dropout[l];
    const double keep = 1.0 / (1.0 - p);
    Matrix m(w.layers[l].weight.rows(), batch);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = (p > 0.0 && uniform(rng) < p) ? 0.0 : keep;
    masks.push_back(std::move(m));
  }
  return masks;
}

Matrix forward(ModelWeights& w, const Matrix& inputs, Mode mode, const DropoutMasks* masks) {
  if (mode == Mode::Eval) return forward_eval(w, inputs);
  check_inputs(inputs);
  DropoutMasks ones;
  if (!masks) {
    for (std::size_t l = 0; l < w.hidden_norms.size(); ++l)
      ones.push_back(Matrix::Ones(w.layers[l].weight.rows(), inputs.rows()));
    masks = &ones;
  }
  TrainPass p = train_pass(w, inputs.transpose(), *masks);
  update_running(w.input_norm, p.means[0], p.vars[0], inputs.rows());
  for (std::size_t l = 0; l < w.hidden_norms.size(); ++l)
    update_running(w.hidden_norms[l], p.means[l + 1], p.vars[l + 1], inputs.rows());
  return destandardize(w, p.output);
}

Matrix forward_eval(const ModelWeights& w, const Matrix& inputs) {
  check_inputs(inputs);
  const Eigen::Index n = inputs.rows();
  const std::size_t chunks = std::size_t((n + kEvalChunk - 1) / kEvalChunk);
  Matrix out(n, kOutputWidth);
  // Fixed chunk boundaries keep results independent of the worker count.
  parallel_for(chunks, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const Eigen::Index r0 = Eigen::Index(c) * kEvalChunk;
      const Eigen::Index rows = std::min(kEvalChunk, n - r0);
      Matrix x = inputs.middleRows(r0, rows).transpose();
      out.middleRows(r0, rows) = destandardize(w, eval_pass(w, x));
    }
  });
  return out;
}

Matrix standardize_targets(const ModelWeights& w, const Matrix& targets) {
  if (targets.cols() != kOutputWidth)
    throw ContractError("targets must have 27 columns, got " + std::to_string(targets.cols()));
  Matrix t = targets.rowwise() - w.target_mean.transpose();
  return t.array().rowwise() / w.target_std.transpose().array();
}

void fit_target_normalization(ModelWeights& w, const Matrix& targets) {
  if (targets.cols() != kOutputWidth || targets.rows() == 0)
    throw ContractError("target normalization needs a non-empty n x 27 matrix");
  Vector mean = targets.colwise().mean().transpose();
  Vector var = (targets.rowwise() - mean.transpose()).array().square().colwise().mean();
  Vector sd = var.array().sqrt();
  for (Eigen::Index i = 0; i < sd.size(); ++i)
    if (!(sd[i] > 1e-8)) sd[i] = 1.0;  // constant coefficient: leave unscaled
  // Stored at float32 precision, like every other tensor.
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    mean[i] = double(to_f32(mean[i]));
    sd[i] = double(to_f32(sd[i]));
  }
  w.target_mean = mean;
  w.target_std = sd;
}

double loss_value(const ModelWeights& w, const Matrix& inputs, const Matrix& targets,
                  const DropoutMasks& masks) {
  check_inputs(inputs);
  TrainPass p = train_pass(w, inputs.transpose(), masks);
  return mse_standardized(p.output, targets);
}

namespace {

double backprop(const ModelWeights& w, const Matrix& inputs, const Matrix& targets,
                const DropoutMasks& masks, ModelWeights* g, std::vector<Vector>* means,
                std::vector<Vector>* vars) {
  check_inputs(inputs);
  if (targets.rows() != inputs.rows() || targets.cols() != kOutputWidth)
    throw ContractError("targets must be batch x 27");
  TrainPass p = train_pass(w, inputs.transpose(), masks);
  const double loss = mse_standardized(p.output, targets);
  if (means) *means = p.means;
  if (vars) *vars = p.vars;
  if (!g) return loss;
  if (g->layers.size() != w.layers.size()) *g = zeros_like(w);

  const double scale = 2.0 / double(p.output.size());
  Matrix d = scale * (p.output - targets.transpose());
  const std::size_t hidden = w.hidden_norms.size();

  g->layers[hidden].weight = d * p.last_input.transpose();
  g->layers[hidden].bias = d.rowwise().sum();
  Matrix dh = w.layers[hidden].weight.transpose() * d;
  for (std::size_t l = hidden; l-- > 0;) {
    const LayerCache& c = p.layers[l];
    // SiLU'(y) = s + y s (1 - s)
    Matrix dy = dh.array() * masks[l].array() *
                (c.sig.array() + c.pre.array() * c.sig.array() * (1.0 - c.sig.array()));
    Matrix dz = bn_backward(w.hidden_norms[l], c.bn, dy, g->hidden_norms[l].gamma,
                            g->hidden_norms[l].beta);
    g->layers[l].weight = dz * c.input.transpose();
    g->layers[l].bias = dz.rowwise().sum();
    dh = w.layers[l].weight.transpose() * dz;
  }
  bn_backward(w.input_norm, p.input_bn, dh, g->input_norm.gamma, g->input_norm.beta);
  return loss;
}

}  // namespace

double loss_and_gradients(const ModelWeights& w, const Matrix& inputs, const Matrix& targets,
                          const DropoutMasks& masks, ModelWeights* g) {
  return backprop(w, inputs, targets, masks, g, nullptr, nullptr);
}

void TrainConfig::check() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ContractError("learning rate must be finite and positive");
  if (batch_size < 1) throw ContractError("batch size must be at least 1");
  if (epochs < 1) throw ContractError("epochs must be at least 1");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ContractError("split fraction must lie in (0,1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ContractError("moment coefficients must lie in [0,1)");
}

TrainState::TrainState(ModelWeights initial, std::uint64_t seed)
    : weights(std::move(initial)), rng(seed) {
  first_moment = zeros_like(weights);
  second_moment = zeros_like(weights);
}

double train_step(TrainState& s, const Matrix& inputs, const Matrix& targets,
                  const TrainConfig& config) {
  if (targets.rows() != inputs.rows())
    throw ContractError("input and target batch sizes differ");
  DropoutMasks masks = sample_dropout_masks(s.weights, inputs.rows(), s.rng);
  Matrix t = standardize_targets(s.weights, targets);
  ModelWeights grads = zeros_like(s.weights);
  std::vector<Vector> means, vars;
  const double loss = backprop(s.weights, inputs, t, masks, &grads, &means, &vars);
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << s.step + 1 << " (batch " << inputs.rows()
        << ", learning rate " << config.learning_rate << ", max |input| "
        << inputs.cwiseAbs().maxCoeff() << ")";
    throw TrainingError(msg.str());
  }

  // Running statistics follow the same batch.
  update_running(s.weights.input_norm, means[0], vars[0], inputs.rows());
  for (std::size_t l = 0; l < s.weights.hidden_norms.size(); ++l)
    update_running(s.weights.hidden_norms[l], means[l + 1], vars[l + 1], inputs.rows());

  ++s.step;
  const double c1 = 1.0 - std::pow(config.beta1, double(s.step));
  const double c2 = 1.0 - std::pow(config.beta2, double(s.step));
  auto params = trainable_params(s.weights);
  auto gv = trainable_params(grads);
  auto mv = trainable_params(s.first_moment);
  auto vv = trainable_params(s.second_moment);
  for (std::size_t t2 = 0; t2 < params.size(); ++t2) {
    double* p = params[t2].data;
    const double* g = gv[t2].data;
    double* m = mv[t2].data;
    double* v = vv[t2].data;
    for (Eigen::Index i = 0; i < params[t2].size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      p[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_epsilon);
    }
  }
  return loss;
}

double mean_squared_error(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ContractError("mean_squared_error: shape mismatch");
  if (a.size() == 0) return 0.0;
  return (a - b).array().square().mean();
}

TrainResult train(const std::vector<Sample>& dataset, const TrainConfig& config,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.check();
  if (dataset.empty()) throw ContractError("training dataset is empty");

  const std::size_t n = dataset.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 split_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_train = std::size_t(std::llround(config.split_fraction * double(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n > 1 ? n - 1 : 1);

  auto gather = [&](std::size_t from, std::size_t to, Matrix& x, Matrix& y) {
    x.resize(Eigen::Index(to - from), kInputWidth);
    y.resize(Eigen::Index(to - from), kOutputWidth);
    for (std::size_t i = from; i < to; ++i) {
      const Sample& s = dataset[order[i]];
      for (int k = 0; k < kInputWidth; ++k) x(Eigen::Index(i - from), k) = s.input[k];
      for (int k = 0; k < kOutputWidth; ++k) y(Eigen::Index(i - from), k) = s.target[k];
    }
  };
  Matrix x_train, y_train, x_val, y_val;
  gather(0, n_train, x_train, y_train);
  gather(n_train, n, x_val, y_val);
  const bool has_val = x_val.rows() > 0;

  ModelWeights initial = init_model(config.seed, config.architecture);
  fit_target_normalization(initial, y_train);
  TrainState state(std::move(initial), config.seed + 1);

  TrainResult result;
  result.train_count = n_train;
  result.validation_count = n - n_train;
  double best = std::numeric_limits<double>::infinity();

  std::vector<Eigen::Index> idx(n_train);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t bs = config.batch_size;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(idx.begin(), idx.end(), state.rng);
    // A trailing single-sample batch has no batch statistics; fold it into
    // the previous one.
    std::vector<std::size_t> starts;
    for (std::size_t b = 0; b < n_train; b += bs) starts.push_back(b);
    if (starts.size() > 1 && n_train - starts.back() == 1) starts.pop_back();
    double loss_sum = 0.0;
    for (std::size_t k = 0; k < starts.size(); ++k) {
      const std::size_t b0 = starts[k];
      const std::size_t b1 = k + 1 < starts.size() ? starts[k + 1] : n_train;
      Matrix xb(Eigen::Index(b1 - b0), kInputWidth), yb(Eigen::Index(b1 - b0), kOutputWidth);
      for (std::size_t i = b0; i < b1; ++i) {
        xb.row(Eigen::Index(i - b0)) = x_train.row(idx[i]);
        yb.row(Eigen::Index(i - b0)) = y_train.row(idx[i]);
      }
      loss_sum += train_step(state, xb, yb, config);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / double(starts.size());
    rec.validation_mse = has_val ? mean_squared_error(forward_eval(state.weights, x_val), y_val)
                                 : mean_squared_error(forward_eval(state.weights, x_train), y_train);
    result.history.push_back(rec);
    if (rec.validation_mse < best) {
      best = rec.validation_mse;
      result.best_weights = state.weights;
    }
    if (on_epoch) on_epoch(rec);
  }

  if (result.best_weights.layers.empty()) result.best_weights = state.weights;
  result.final_weights = std::move(state.weights);
  std::vector<std::pair<std::string, std::string>> notes = {
      {"learning_rate", format_double(config.learning_rate)},
      {"batch_size", std::to_string(config.batch_size)},
      {"epochs", std::to_string(config.epochs)},
      {"optimizer", "adam"},
      {"beta1", format_double(config.beta1)},
      {"beta2", format_double(config.beta2)},
      {"adam_epsilon", format_double(config.adam_epsilon)},
      {"split_fraction", format_double(config.split_fraction)},
      {"train_count", std::to_string(result.train_count)},
      {"validation_count", std::to_string(result.validation_count)},
      {"loss", "mse-standardized"},
  };
  for (ModelWeights* w : {&result.final_weights, &result.best_weights}) {
    round_to_float32(*w);
    w->notes = notes;
  }
  result.final_weights.notes.emplace_back("selection", "final");
  result.best_weights.notes.emplace_back("selection", "best-validation");
  return result;
}

Matrix encode_mesh(const Mesh& mesh) {
  if (!mesh.has_normals()) throw ContractError("mesh normals are required for prediction");
  const Eigen::Index n = Eigen::Index(mesh.vertex_count());
  Matrix x(n, kInputWidth);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto m = cga::encode_vertex_normal(mesh.vertices[std::size_t(i)],
                                             mesh.normals[std::size_t(i)]);
    for (int k = 0; k < kInputWidth; ++k) x(i, k) = m[k];
  }
  return x;
}

TransferMatrix predict_mesh(const ModelWeights& w, const Mesh& mesh) {
  Matrix out = forward_eval(w, encode_mesh(mesh));
  TransferMatrix t;
  t.rows = out;
  t.meta.source = "predicted";
  t.meta.albedo = "learned";
  t.meta.seed = w.seed;
  t.meta.blade_hash = cga::blade_order_hash();
  return t;
}

}  // namespace ngash::neural
