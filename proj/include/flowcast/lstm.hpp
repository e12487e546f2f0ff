#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowcast/common.hpp"
#include "flowcast/dataset.hpp"
#include "flowcast/matrix.hpp"
#include "flowcast/rng.hpp"
#include "flowcast/windowing.hpp"

namespace flowcast {

struct TrainConfig {
  int seq_len = 500;    // rows consumed per training sequence
  int hidden_dim = 100;
  int epochs = 50;
  double learning_rate = 0.001;
  double clip_norm = 0.0;  // 0 disables gradient clipping
  bool shuffle = false;    // shuffle sequence order between epochs
  std::uint64_t seed = 0;
  bool operator==(const TrainConfig&) const = default;
};

// Single-layer LSTM with a one-neuron linear readout. Gate weights act on the
// concatenation [h_prev, x]; one row per hidden unit.
struct LstmModel {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Matrix w_forget, w_input, w_cell, w_output;  // hidden_dim x (hidden_dim + input_dim)
  std::vector<double> b_forget, b_input, b_cell, b_output;
  std::vector<double> w_readout;
  double b_readout = 0.0;
  bool operator==(const LstmModel&) const = default;
};

struct CellState {
  std::vector<double> c, h;

  static CellState zeros(std::size_t hidden_dim) {
    return {std::vector<double>(hidden_dim, 0.0), std::vector<double>(hidden_dim, 0.0)};
  }
};

// Everything the backward pass needs from one forward step.
struct StepCache {
  std::vector<double> z;           // [h_prev, x]
  std::vector<double> f, i, g, o;  // gate activations; g is the tanh candidate
  std::vector<double> c_prev, c, tanh_c, h;
  double pred = 0.0;
};

struct LstmGradients {
  Matrix w_forget, w_input, w_cell, w_output;
  std::vector<double> b_forget, b_input, b_cell, b_output;
  std::vector<double> w_readout;
  double b_readout = 0.0;

  static LstmGradients zeros_like(const LstmModel& m) {
    LstmGradients g;
    const std::size_t h = m.hidden_dim, k = m.hidden_dim + m.input_dim;
    g.w_forget = g.w_input = g.w_cell = g.w_output = Matrix(h, k);
    g.b_forget = g.b_input = g.b_cell = g.b_output = std::vector<double>(h, 0.0);
    g.w_readout.assign(h, 0.0);
    return g;
  }
};

struct AdamState {
  LstmGradients m, v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros_like(const LstmModel& model) {
    return {LstmGradients::zeros_like(model), LstmGradients::zeros_like(model), 0};
  }
};

inline double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

namespace detail {

inline void gate_preact(const Matrix& w, const std::vector<double>& b,
                        std::span<const double> z, std::vector<double>& out) {
  const std::size_t h = w.rows();
  out.resize(h);
  for (std::size_t r = 0; r < h; ++r) out[r] = b[r] + dot(w.row(r), z);
}

// Applies fn(param, grad, adam_m, adam_v) to every parameter block.
template <typename Fn>
void visit_params(LstmModel& model, const LstmGradients& g, AdamState& s, Fn&& fn) {
  auto mat = [&](Matrix& p, const Matrix& gp, Matrix& mp, Matrix& vp) {
    fn(std::span<double>(p.data(), p.size()), std::span<const double>(gp.data(), gp.size()),
       std::span<double>(mp.data(), mp.size()), std::span<double>(vp.data(), vp.size()));
  };
  auto vec = [&](std::vector<double>& p, const std::vector<double>& gp, std::vector<double>& mp,
                 std::vector<double>& vp) {
    fn(std::span<double>(p), std::span<const double>(gp), std::span<double>(mp),
       std::span<double>(vp));
  };
  mat(model.w_forget, g.w_forget, s.m.w_forget, s.v.w_forget);
  mat(model.w_input, g.w_input, s.m.w_input, s.v.w_input);
  mat(model.w_cell, g.w_cell, s.m.w_cell, s.v.w_cell);
  mat(model.w_output, g.w_output, s.m.w_output, s.v.w_output);
  vec(model.b_forget, g.b_forget, s.m.b_forget, s.v.b_forget);
  vec(model.b_input, g.b_input, s.m.b_input, s.v.b_input);
  vec(model.b_cell, g.b_cell, s.m.b_cell, s.v.b_cell);
  vec(model.b_output, g.b_output, s.m.b_output, s.v.b_output);
  vec(model.w_readout, g.w_readout, s.m.w_readout, s.v.w_readout);
  fn(std::span<double>(&model.b_readout, 1), std::span<const double>(&g.b_readout, 1),
     std::span<double>(&s.m.b_readout, 1), std::span<double>(&s.v.b_readout, 1));
}

// Applies fn to every gradient block (for norms / clipping).
template <typename Fn>
void visit_grads(LstmGradients& g, Fn&& fn) {
  fn(std::span<double>(g.w_forget.data(), g.w_forget.size()));
  fn(std::span<double>(g.w_input.data(), g.w_input.size()));
  fn(std::span<double>(g.w_cell.data(), g.w_cell.size()));
  fn(std::span<double>(g.w_output.data(), g.w_output.size()));
  fn(std::span<double>(g.b_forget));
  fn(std::span<double>(g.b_input));
  fn(std::span<double>(g.b_cell));
  fn(std::span<double>(g.b_output));
  fn(std::span<double>(g.w_readout));
  fn(std::span<double>(&g.b_readout, 1));
}

}  // namespace detail

// Uniform +/- sqrt(6 / (fan_in + fan_out)) weights, forget-gate bias 1, other
// biases 0. Deterministic given the seed.
inline LstmModel init_network(const TrainConfig& config, std::size_t input_dim,
                              std::uint64_t seed) {
  if (input_dim == 0 || config.hidden_dim < 1) {
    throw ConfigError("init_network: dimensions must be positive");
  }
  const auto h = static_cast<std::size_t>(config.hidden_dim);
  const std::size_t k = h + input_dim;
  LstmModel model;
  model.input_dim = input_dim;
  model.hidden_dim = h;
  Rng rng(seed);

  const double gate_bound = std::sqrt(6.0 / static_cast<double>(k + h));
  auto fill = [&](Matrix& w) {
    w = Matrix(h, k);
    for (std::size_t i = 0; i < w.size(); ++i) w.data()[i] = rng.uniform(-gate_bound, gate_bound);
  };
  fill(model.w_forget);
  fill(model.w_input);
  fill(model.w_cell);
  fill(model.w_output);

  const double readout_bound = std::sqrt(6.0 / static_cast<double>(h + 1));
  model.w_readout.resize(h);
  for (double& w : model.w_readout) w = rng.uniform(-readout_bound, readout_bound);

  model.b_forget.assign(h, 1.0);
  model.b_input.assign(h, 0.0);
  model.b_cell.assign(h, 0.0);
  model.b_output.assign(h, 0.0);
  model.b_readout = 0.0;
  return model;
}

// One LSTM step:
//   f = sigmoid(Wf [h,x] + bf)     i = sigmoid(Wi [h,x] + bi)
//   g = tanh(Wc [h,x] + bc)        o = sigmoid(Wo [h,x] + bo)
//   c = f * c_prev + i * g         h = o * tanh(c)
inline std::pair<CellState, StepCache> cell_forward(const LstmModel& model,
                                                    std::span<const double> x,
                                                    const CellState& prev) {
  const std::size_t h = model.hidden_dim;
  if (x.size() != model.input_dim || prev.c.size() != h || prev.h.size() != h) {
    throw DataError("cell_forward: shape mismatch");
  }
  StepCache cache;
  cache.z.resize(h + x.size());
  std::copy(prev.h.begin(), prev.h.end(), cache.z.begin());
  std::copy(x.begin(), x.end(), cache.z.begin() + static_cast<std::ptrdiff_t>(h));
  cache.c_prev = prev.c;

  detail::gate_preact(model.w_forget, model.b_forget, cache.z, cache.f);
  detail::gate_preact(model.w_input, model.b_input, cache.z, cache.i);
  detail::gate_preact(model.w_cell, model.b_cell, cache.z, cache.g);
  detail::gate_preact(model.w_output, model.b_output, cache.z, cache.o);

  CellState state;
  state.c.resize(h);
  state.h.resize(h);
  cache.tanh_c.resize(h);
  for (std::size_t j = 0; j < h; ++j) {
    cache.f[j] = sigmoid(cache.f[j]);
    cache.i[j] = sigmoid(cache.i[j]);
    cache.g[j] = std::tanh(cache.g[j]);
    cache.o[j] = sigmoid(cache.o[j]);
    state.c[j] = cache.f[j] * cache.c_prev[j] + cache.i[j] * cache.g[j];
    cache.tanh_c[j] = std::tanh(state.c[j]);
    state.h[j] = cache.o[j] * cache.tanh_c[j];
  }
  cache.c = state.c;
  cache.h = state.h;
  cache.pred = model.b_readout + dot(model.w_readout, state.h);
  return {std::move(state), std::move(cache)};
}

struct SequenceRun {
  std::vector<double> predictions;
  std::vector<StepCache> caches;
  CellState final_state;
};

// Threads the cell state through the window rows; one readout prediction per
// row. The returned final state allows chaining further windows.
inline SequenceRun forward_sequence(const LstmModel& model, const Matrix& window,
                                    const CellState& init) {
  if (window.cols() != model.input_dim) throw DataError("forward_sequence: shape mismatch");
  SequenceRun run;
  run.predictions.reserve(window.rows());
  run.caches.reserve(window.rows());
  run.final_state = init;
  for (std::size_t t = 0; t < window.rows(); ++t) {
    auto [state, cache] = cell_forward(model, window.row(t), run.final_state);
    run.final_state = std::move(state);
    run.predictions.push_back(cache.pred);
    run.caches.push_back(std::move(cache));
  }
  return run;
}

// Backpropagation through time over one cached sequence. Loss is the mean
// squared error of the per-step predictions.
inline LstmGradients backward(const LstmModel& model, const std::vector<StepCache>& caches,
                              std::span<const double> targets) {
  if (caches.size() != targets.size() || caches.empty()) {
    throw DataError("backward: cache/target length mismatch");
  }
  const std::size_t h = model.hidden_dim;
  const std::size_t k = h + model.input_dim;
  const auto steps = static_cast<double>(caches.size());

  LstmGradients grads = LstmGradients::zeros_like(model);
  std::vector<double> dh_next(h, 0.0), dc_next(h, 0.0);
  std::vector<double> dh(h), dc(h), da_f(h), da_i(h), da_g(h), da_o(h), dz(k);

  for (std::size_t t = caches.size(); t-- > 0;) {
    const StepCache& cc = caches[t];
    const double dpred = 2.0 * (cc.pred - targets[t]) / steps;

    grads.b_readout += dpred;
    for (std::size_t j = 0; j < h; ++j) {
      grads.w_readout[j] += dpred * cc.h[j];
      dh[j] = dh_next[j] + model.w_readout[j] * dpred;
      const double d_o = dh[j] * cc.tanh_c[j];
      da_o[j] = d_o * cc.o[j] * (1.0 - cc.o[j]);
      dc[j] = dc_next[j] + dh[j] * cc.o[j] * (1.0 - cc.tanh_c[j] * cc.tanh_c[j]);
      const double d_f = dc[j] * cc.c_prev[j];
      da_f[j] = d_f * cc.f[j] * (1.0 - cc.f[j]);
      const double d_i = dc[j] * cc.g[j];
      da_i[j] = d_i * cc.i[j] * (1.0 - cc.i[j]);
      const double d_g = dc[j] * cc.i[j];
      da_g[j] = d_g * (1.0 - cc.g[j] * cc.g[j]);
    }

    std::fill(dz.begin(), dz.end(), 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      const auto wf = model.w_forget.row(j);
      const auto wi = model.w_input.row(j);
      const auto wc = model.w_cell.row(j);
      const auto wo = model.w_output.row(j);
      auto gf = grads.w_forget.row(j);
      auto gi = grads.w_input.row(j);
      auto gc = grads.w_cell.row(j);
      auto go = grads.w_output.row(j);
      for (std::size_t p = 0; p < k; ++p) {
        gf[p] += da_f[j] * cc.z[p];
        gi[p] += da_i[j] * cc.z[p];
        gc[p] += da_g[j] * cc.z[p];
        go[p] += da_o[j] * cc.z[p];
        dz[p] += wf[p] * da_f[j] + wi[p] * da_i[j] + wc[p] * da_g[j] + wo[p] * da_o[j];
      }
      grads.b_forget[j] += da_f[j];
      grads.b_input[j] += da_i[j];
      grads.b_cell[j] += da_g[j];
      grads.b_output[j] += da_o[j];
    }

    for (std::size_t j = 0; j < h; ++j) {
      dh_next[j] = dz[j];
      dc_next[j] = dc[j] * caches[t].f[j];
    }
  }
  return grads;
}

// Returns the global L2 norm before clipping; scales gradients in place when
// the norm exceeds max_norm.
inline double clip_gradients(LstmGradients& grads, double max_norm) {
  double sq = 0.0;
  detail::visit_grads(grads, [&](std::span<double> g) {
    for (double v : g) sq += v * v;
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    detail::visit_grads(grads, [&](std::span<double> g) {
      for (double& v : g) v *= scale;
    });
  }
  return norm;
}

// Standard Adam update with bias correction; increments the step counter.
inline void adam_step(LstmModel& model, const LstmGradients& grads, AdamState& state,
                      double learning_rate) {
  state.step += 1;
  const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  detail::visit_params(model, grads, state,
                       [&](std::span<double> p, std::span<const double> g, std::span<double> m,
                           std::span<double> v) {
                         for (std::size_t i = 0; i < p.size(); ++i) {
                           m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
                           v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
                           const double m_hat = m[i] / corr1;
                           const double v_hat = v[i] / corr2;
                           p[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
                         }
                       });
}

// Trained network plus everything needed to run it on new data: the min-max
// scalers fitted on the training partition, the window recipe, and, when
// produced by the pipeline, the selected source columns.
struct TrainedModel {
  LstmModel net;
  Normalizer feature_scaler;  // per supervised column
  Normalizer target_scaler;   // single column
  TrainConfig config;
  int window_n = 1;
  WindowMode window_mode = WindowMode::block;
  std::vector<FeaturePosition> layout;
  std::vector<std::string> feature_names;  // selected source columns, importance order
  std::string target_name;
  double train_fraction = 2.0 / 3.0;
  std::uint64_t split_seed = 0;
  std::vector<double> train_curve;  // RMSE per epoch, original units
  std::vector<double> test_curve;
  double test_rmse = std::numeric_limits<double>::quiet_NaN();

  bool operator==(const TrainedModel&) const = default;
};

namespace detail {

inline std::vector<double> predict_normalized(const LstmModel& net, const Matrix& x) {
  std::vector<double> preds(x.rows());
  CellState state = CellState::zeros(net.hidden_dim);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto [next, cache] = cell_forward(net, x.row(r), state);
    state = std::move(next);
    preds[r] = cache.pred;
  }
  return preds;
}

}  // namespace detail

// Trains on chronological chunks of seq_len rows (state reset at chunk
// boundaries), one Adam update per chunk, for config.epochs passes. Both loss
// curves are RMSE in original target units. Throws DivergenceError when the
// training loss stops being finite.
inline TrainedModel train(const SupervisedSet& train_set, const SupervisedSet& test_set,
                          const TrainConfig& config) {
  const std::size_t n_rows = train_set.rows();
  if (n_rows == 0) throw DataError("train: empty training set");
  if (train_set.X.cols() == 0) throw DataError("train: no features");
  if (test_set.rows() > 0 && test_set.X.cols() != train_set.X.cols()) {
    throw DataError("train: train/test feature mismatch");
  }
  if (config.seq_len < 1 || config.epochs < 1) {
    throw ConfigError("train: seq_len and epochs must be >= 1");
  }

  TrainedModel out;
  out.config = config;
  out.window_n = train_set.n;
  out.window_mode = train_set.mode;
  out.layout = train_set.layout;
  out.feature_scaler = Normalizer::fit(train_set.X);
  out.target_scaler = Normalizer::fit(std::span<const double>(train_set.y));

  const Matrix x_train = out.feature_scaler.apply(train_set.X);
  const std::vector<double> y_train = out.target_scaler.apply(train_set.y);
  const Matrix x_test = test_set.rows() > 0 ? out.feature_scaler.apply(test_set.X) : Matrix();

  LstmModel net = init_network(config, x_train.cols(), mix_seed(config.seed, 0));
  AdamState adam = AdamState::zeros_like(net);

  const auto s = static_cast<std::size_t>(config.seq_len);
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  for (std::size_t b = 0; b < n_rows; b += s) chunks.emplace_back(b, std::min(b + s, n_rows));
  std::vector<std::size_t> order(chunks.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) {
      Rng rng(mix_seed(config.seed, 1000 + static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }
    for (std::size_t ci : order) {
      const auto [b, e] = chunks[ci];
      Matrix window(e - b, x_train.cols());
      for (std::size_t r = b; r < e; ++r) {
        const auto src = x_train.row(r);
        std::copy(src.begin(), src.end(), window.row(r - b).begin());
      }
      const std::span<const double> targets(y_train.data() + b, e - b);

      SequenceRun run = forward_sequence(net, window, CellState::zeros(net.hidden_dim));
      LstmGradients grads = backward(net, run.caches, targets);
      if (config.clip_norm > 0.0) clip_gradients(grads, config.clip_norm);
      adam_step(net, grads, adam, config.learning_rate);
    }

    // Post-epoch evaluation passes keep both curves on the same footing.
    auto epoch_rmse = [&](const Matrix& x, const std::vector<double>& y_original) {
      const std::vector<double> preds = detail::predict_normalized(net, x);
      double sq = 0.0;
      for (std::size_t r = 0; r < preds.size(); ++r) {
        const double res = out.target_scaler.invert_at(0, preds[r]) - y_original[r];
        sq += res * res;
      }
      return std::sqrt(sq / static_cast<double>(preds.size()));
    };
    const double train_rmse = epoch_rmse(x_train, train_set.y);
    if (!std::isfinite(train_rmse)) {
      throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
    }
    out.train_curve.push_back(train_rmse);
    if (test_set.rows() > 0) out.test_curve.push_back(epoch_rmse(x_test, test_set.y));
  }

  out.net = std::move(net);
  if (!out.test_curve.empty()) out.test_rmse = out.test_curve.back();
  return out;
}

// De-normalized predictions, one per supervised row. The cell state threads
// across the rows in order, starting from zeros; inference is pure.
inline std::vector<double> predict(const TrainedModel& model, const SupervisedSet& set) {
  if (set.X.cols() != model.net.input_dim) throw DataError("predict: feature count mismatch");
  const Matrix x = model.feature_scaler.apply(set.X);
  std::vector<double> preds = detail::predict_normalized(model.net, x);
  for (double& p : preds) p = model.target_scaler.invert_at(0, p);
  return preds;
}

}  // namespace flowcast
