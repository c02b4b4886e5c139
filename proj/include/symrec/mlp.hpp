#pragma once

// Multilayer perceptron on Eigen matrices.
//
// Batches are row-major in the mathematical sense: one example per row. A layer
// with n_in inputs and n_out outputs stores an (n_in + 1) x n_out matrix whose
// last row holds the biases; inputs are extended by a constant 1 column.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "symrec/error.hpp"
#include "symrec/features.hpp"
#include "symrec/recording.hpp"
#include "symrec/result.hpp"

namespace symrec {

enum class Activation { sigmoid, tanh, softmax, linear };

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
    case Activation::linear: return "linear";
  }
  return "linear";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "softmax") return Activation::softmax;
  if (s == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + s + "'");
}

struct Layer {
  Eigen::MatrixXd weights;  // (n_in + 1) x n_out
  Activation activation = Activation::sigmoid;

  std::size_t inputs() const { return static_cast<std::size_t>(weights.rows()) - 1; }
  std::size_t outputs() const { return static_cast<std::size_t>(weights.cols()); }
};

struct MlpModel {
  std::vector<Layer> layers;
  /// Output i is the i-th id of symbols.ids(). May be empty for anonymous toy models,
  /// in which case output indices double as ids.
  SymbolTable symbols;
  /// Preprocessing / feature / standardization sections carried alongside the weights.
  nlohmann::json pipeline = nlohmann::json::object();

  std::vector<std::size_t> topology() const {
    std::vector<std::size_t> t;
    if (layers.empty()) return t;
    t.push_back(layers.front().inputs());
    for (const auto& l : layers) t.push_back(l.outputs());
    return t;
  }
  std::size_t feature_dim() const { return layers.empty() ? 0 : layers.front().inputs(); }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().outputs(); }

  SymbolId symbol_at(std::size_t output) const {
    if (symbols.empty()) return static_cast<SymbolId>(output);
    return symbols.ids().at(output);
  }
};

inline std::string topology_string(const std::vector<std::size_t>& t) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ":" : "") + std::to_string(t[i]);
  return s;
}

/// Throws ParameterError when the layers do not chain, weights are not finite,
/// softmax appears before the last layer or the symbol table does not fit.
inline void validate_model(const MlpModel& m) {
  if (m.layers.empty()) throw ParameterError("model has no layers");
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    const auto& l = m.layers[k];
    if (l.weights.rows() < 2 || l.weights.cols() < 1) throw ParameterError("layer " + std::to_string(k) + " is empty");
    if (k > 0 && m.layers[k - 1].outputs() != l.inputs())
      throw ParameterError("layer " + std::to_string(k) + " does not chain with its predecessor");
    if (l.activation == Activation::softmax && k + 1 != m.layers.size())
      throw ParameterError("softmax is only allowed on the output layer");
    if (!l.weights.allFinite()) throw ParameterError("layer " + std::to_string(k) + " has non-finite weights");
  }
  if (!m.symbols.empty() && m.symbols.size() != m.output_dim())
    throw ParameterError("output width " + std::to_string(m.output_dim()) + " differs from symbol count " +
                         std::to_string(m.symbols.size()));
}

// ---------------------------------------------------------------------------
// Random numbers. The uniform mapping is spelled out so that runs are
// reproducible across standard libraries.

using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Fisher-Yates on 0..n-1.
inline std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = std::min(static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i)), i - 1);
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Initialization

/// Half-width of the uniform initialization interval between layers of widths a and b.
inline double init_bound(std::size_t a, std::size_t b) {
  return 4.0 * std::sqrt(6.0 / static_cast<double>(a + b));
}

inline Layer init_layer(std::size_t n_in, std::size_t n_out, Activation act, Rng& rng) {
  Layer l;
  l.activation = act;
  l.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_in + 1), static_cast<Eigen::Index>(n_out));
  const double bound = init_bound(n_in, n_out);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(n_in); ++r)
    for (Eigen::Index c = 0; c < l.weights.cols(); ++c) l.weights(r, c) = uniform(rng, -bound, bound);
  return l;
}

inline MlpModel init_model(const std::vector<std::size_t>& topology, std::uint64_t seed,
                           Activation hidden = Activation::sigmoid, Activation output = Activation::softmax) {
  if (topology.size() < 2) throw ParameterError("topology needs at least an input and an output width");
  for (auto w : topology)
    if (w < 1) throw ParameterError("topology widths must be >= 1");
  if (hidden == Activation::softmax) throw ParameterError("softmax is only allowed on the output layer");
  Rng rng(seed);
  MlpModel m;
  for (std::size_t k = 0; k + 1 < topology.size(); ++k)
    m.layers.push_back(init_layer(topology[k], topology[k + 1], k + 2 == topology.size() ? output : hidden, rng));
  return m;
}

/// Parses "160:500:369".
inline std::vector<std::size_t> parse_topology(const std::string& text) {
  std::vector<std::size_t> t;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ':')) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(part, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad topology '" + text + "'");
    }
    if (pos != part.size() || v < 1) throw ConfigError("bad topology '" + text + "'");
    t.push_back(static_cast<std::size_t>(v));
  }
  if (t.size() < 2) throw ConfigError("topology '" + text + "' needs at least two widths");
  return t;
}

// ---------------------------------------------------------------------------
// Forward pass

inline Eigen::MatrixXd with_bias(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd e(x.rows(), x.cols() + 1);
  e.leftCols(x.cols()) = x;
  e.col(x.cols()).setOnes();
  return e;
}

inline void softmax_rows(Eigen::MatrixXd& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - mx).exp();
    z.row(r) /= z.row(r).sum();
  }
}

inline void activate(Eigen::MatrixXd& z, Activation act) {
  switch (act) {
    case Activation::sigmoid: z = (1.0 + (-z.array()).exp()).inverse().matrix(); break;
    case Activation::tanh: z = z.array().tanh().matrix(); break;
    case Activation::softmax: softmax_rows(z); break;
    case Activation::linear: break;
  }
}

/// d activation / d z expressed through the activation output o.
inline Eigen::ArrayXXd activation_derivative(const Eigen::MatrixXd& o, Activation act) {
  switch (act) {
    case Activation::sigmoid: return o.array() * (1.0 - o.array());
    case Activation::tanh: return 1.0 - o.array().square();
    case Activation::linear: return Eigen::ArrayXXd::Ones(o.rows(), o.cols());
    case Activation::softmax: break;
  }
  throw ParameterError("softmax derivative is only defined through the output loss");
}

inline Eigen::MatrixXd layer_forward(const Layer& l, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = with_bias(x) * l.weights;
  activate(z, l.activation);
  return z;
}

/// outputs[0] is the input batch, outputs[k + 1] the output of layer k.
inline std::vector<Eigen::MatrixXd> forward_trace(const MlpModel& m, const Eigen::MatrixXd& x) {
  if (m.layers.empty()) throw ParameterError("model has no layers");
  if (static_cast<std::size_t>(x.cols()) != m.feature_dim())
    throw ParameterError("input has " + std::to_string(x.cols()) + " features, model expects " +
                         std::to_string(m.feature_dim()));
  std::vector<Eigen::MatrixXd> outs;
  outs.reserve(m.layers.size() + 1);
  outs.push_back(x);
  for (const auto& l : m.layers) outs.push_back(layer_forward(l, outs.back()));
  return outs;
}

inline Eigen::MatrixXd forward(const MlpModel& m, const Eigen::MatrixXd& x) { return forward_trace(m, x).back(); }

inline Eigen::VectorXd forward(const MlpModel& m, const FeatureVector& x) {
  const Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
  return forward(m, Eigen::MatrixXd(row)).row(0).transpose();
}

// ---------------------------------------------------------------------------
// Losses and regularization

enum class RegularizationKind { none, l1, l2 };

struct Regularization {
  RegularizationKind kind = RegularizationKind::none;
  double lambda = 0.0;
  friend bool operator==(const Regularization&, const Regularization&) = default;
};

/// Penalty over all non-bias weights: lambda * sum |w| or lambda * sum w^2.
inline double regularization_penalty(const MlpModel& m, const Regularization& reg) {
  if (reg.kind == RegularizationKind::none || reg.lambda == 0.0) return 0.0;
  double s = 0.0;
  for (const auto& l : m.layers) {
    const auto w = l.weights.topRows(l.weights.rows() - 1);
    s += reg.kind == RegularizationKind::l1 ? w.cwiseAbs().sum() : w.squaredNorm();
  }
  return reg.lambda * s;
}

inline constexpr double kLossEpsilon = 1e-12;

/// Sum over the batch of -sum_k (y_k log o_k + (1 - y_k) log(1 - o_k)), o clamped to [eps, 1 - eps].
inline double cross_entropy(const Eigen::MatrixXd& o, const Eigen::MatrixXd& y) {
  const Eigen::ArrayXXd c = o.array().max(kLossEpsilon).min(1.0 - kLossEpsilon);
  return -(y.array() * c.log() + (1.0 - y.array()) * (1.0 - c).log()).sum();
}

/// Summed cross entropy of the model on a batch plus the regularization penalty.
inline double ce_loss(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                      const Regularization& reg = {}) {
  if (x.rows() == 0) throw ParameterError("ce_loss: empty batch");
  return cross_entropy(forward(m, x), y) + regularization_penalty(m, reg);
}

/// Which objective backprop differentiates.
/// nll: mean over the batch of -sum_k y_k log o_k (softmax output).
/// mse: mean over the batch of 0.5 * ||o - y||^2.
enum class Loss { nll, mse };

inline double objective(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Loss loss,
                        const Regularization& reg = {}) {
  const Eigen::MatrixXd o = forward(m, x);
  const double b = static_cast<double>(x.rows());
  double v = 0.0;
  if (loss == Loss::nll)
    v = -(y.array() * o.array().max(kLossEpsilon).log()).sum() / b;
  else
    v = 0.5 * (o - y).squaredNorm() / b;
  return v + regularization_penalty(m, reg);
}

using Gradients = std::vector<Eigen::MatrixXd>;

/// Gradient of `objective` with respect to every layer's weights. Following the
/// negative gradient is the delta-rule update w <- w + eta * delta * x.
inline Gradients backprop(const MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Loss loss = Loss::nll,
                          const Regularization& reg = {}) {
  const auto outs = forward_trace(m, x);
  const double b = static_cast<double>(x.rows());
  const std::size_t L = m.layers.size();
  Gradients grads(L);

  // delta = d objective / d z of the current layer.
  Eigen::MatrixXd delta;
  const Activation out_act = m.layers.back().activation;
  if (loss == Loss::nll) {
    if (out_act != Activation::softmax) throw ParameterError("nll loss needs a softmax output layer");
    delta = (outs.back() - y) / b;
  } else {
    if (out_act == Activation::softmax) throw ParameterError("mse loss is not supported with a softmax output");
    delta = (((outs.back() - y) / b).array() * activation_derivative(outs.back(), out_act)).matrix();
  }

  for (std::size_t k = L; k-- > 0;) {
    const auto& w = m.layers[k].weights;
    grads[k] = with_bias(outs[k]).transpose() * delta;
    if (reg.kind != RegularizationKind::none && reg.lambda != 0.0) {
      auto g = grads[k].topRows(grads[k].rows() - 1);
      const auto wv = w.topRows(w.rows() - 1);
      if (reg.kind == RegularizationKind::l2)
        g += 2.0 * reg.lambda * wv;
      else
        g += reg.lambda * wv.cwiseSign();
    }
    if (k > 0) {
      delta = ((delta * w.topRows(w.rows() - 1).transpose()).array() *
               activation_derivative(outs[k], m.layers[k - 1].activation))
                  .matrix();
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Datasets

/// Feature rows with class indices (position in the output layer).
struct Dataset {
  Eigen::MatrixXd x;
  std::vector<std::size_t> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }
};

inline Dataset make_dataset(const std::vector<FeatureVector>& xs, const std::vector<std::size_t>& ys) {
  if (xs.size() != ys.size()) throw ParameterError("make_dataset: feature and label counts differ");
  Dataset d;
  d.y = ys;
  if (xs.empty()) return d;
  const std::size_t dim = xs.front().size();
  d.x.resize(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != dim) throw ParameterError("make_dataset: inconsistent feature dimensions");
    for (std::size_t j = 0; j < dim; ++j) d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i][j];
  }
  return d;
}

inline Eigen::MatrixXd one_hot(const std::vector<std::size_t>& labels, std::size_t classes) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), static_cast<Eigen::Index>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw ParameterError("label index out of range");
    y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])) = 1.0;
  }
  return y;
}

/// Output matrix for a whole dataset, evaluated in chunks.
inline Eigen::MatrixXd predict_all(const MlpModel& m, const Eigen::MatrixXd& x, Eigen::Index chunk = 1024) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(m.output_dim()));
  for (Eigen::Index s = 0; s < x.rows(); s += chunk) {
    const Eigen::Index n = std::min(chunk, x.rows() - s);
    out.middleRows(s, n) = forward(m, Eigen::MatrixXd(x.middleRows(s, n)));
  }
  return out;
}

/// TOP-1 error in percent.
inline double top1_error(const MlpModel& m, const Dataset& d) {
  if (d.empty()) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::MatrixXd o = predict_all(m, d.x);
  std::size_t wrong = 0;
  for (Eigen::Index r = 0; r < o.rows(); ++r) {
    Eigen::Index best = 0;
    o.row(r).maxCoeff(&best);
    if (static_cast<std::size_t>(best) != d.y[static_cast<std::size_t>(r)]) ++wrong;
  }
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(d.size());
}

// ---------------------------------------------------------------------------
// Training

enum class TrainMode { fixed_epochs, newbob };

struct NewbobConfig {
  double decay = 0.5;
  double threshold = 0.5;       // percentage points of validation error
  double stop_threshold = 0.1;  // applies once a decay has happened
  /// Read improvements relative to the previous error instead of in percentage points.
  bool relative = false;
  friend bool operator==(const NewbobConfig&, const NewbobConfig&) = default;
};

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.1;
  std::size_t batch_size = 256;
  int epochs = 1000;
  TrainMode mode = TrainMode::fixed_epochs;
  NewbobConfig newbob;
  Regularization regularization;
  std::uint64_t seed = 0;
  bool shuffle = true;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

inline void validate_train_config(const TrainConfig& c) {
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) throw ConfigError("learning rate must be >= 0");
  if (!(c.momentum >= 0.0 && c.momentum <= 1.0)) throw ConfigError("momentum must lie in [0, 1]");
  if (c.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(c.regularization.lambda >= 0.0)) throw ConfigError("regularization lambda must be >= 0");
  if (c.mode == TrainMode::newbob && !(c.newbob.decay > 0.0 && c.newbob.decay < 1.0))
    throw ConfigError("newbob decay must lie in (0, 1)");
}

struct EpochRecord {
  int epoch = 0;  // 0 describes the model before training
  double eta = 0.0;
  double train_error = 0.0;  // TOP-1 percent
  double valid_error = std::numeric_limits<double>::quiet_NaN();
  double loss = 0.0;  // mean cross entropy per training example, plus penalty
};

using TrainingHistory = std::vector<EpochRecord>;

struct TrainResult {
  MlpModel model;
  TrainingHistory history;
};

/// Weight deltas of the previous step, one matrix per layer.
using Deltas = std::vector<Eigen::MatrixXd>;

/// One update: delta_w = -eta * grad + momentum * delta_w_prev, applied in place.
inline void train_step(MlpModel& m, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const TrainConfig& c,
                       Deltas& prev, Loss loss = Loss::nll) {
  const Gradients g = backprop(m, x, y, loss, c.regularization);
  if (prev.size() != m.layers.size()) {
    prev.clear();
    for (const auto& l : m.layers) prev.push_back(Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()));
  }
  for (std::size_t k = 0; k < m.layers.size(); ++k) {
    prev[k] = -c.learning_rate * g[k] + c.momentum * prev[k];
    m.layers[k].weights += prev[k];
    if (!m.layers[k].weights.allFinite())
      throw TrainingError("non-finite weights in layer " + std::to_string(k) + " (max |grad| " +
                          std::to_string(g[k].cwiseAbs().maxCoeff()) + ", eta " + std::to_string(c.learning_rate) +
                          ")");
  }
}

namespace detail {

inline void gather_rows(const Eigen::MatrixXd& src, const std::vector<std::size_t>& order, std::size_t start,
                        std::size_t n, Eigen::MatrixXd& dst) {
  dst.resize(static_cast<Eigen::Index>(n), src.cols());
  for (std::size_t r = 0; r < n; ++r)
    dst.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(order[start + r]));
}

inline EpochRecord measure(const MlpModel& m, const Dataset& train, const Dataset& valid, int epoch, double eta,
                           const Regularization& reg) {
  EpochRecord rec;
  rec.epoch = epoch;
  rec.eta = eta;
  const Eigen::MatrixXd o = predict_all(m, train.x);
  std::size_t wrong = 0;
  for (Eigen::Index r = 0; r < o.rows(); ++r) {
    Eigen::Index best = 0;
    o.row(r).maxCoeff(&best);
    if (static_cast<std::size_t>(best) != train.y[static_cast<std::size_t>(r)]) ++wrong;
  }
  rec.train_error = 100.0 * static_cast<double>(wrong) / static_cast<double>(train.size());
  rec.loss = cross_entropy(o, one_hot(train.y, m.output_dim())) / static_cast<double>(train.size()) +
             regularization_penalty(m, reg);
  rec.valid_error = valid.empty() ? std::numeric_limits<double>::quiet_NaN() : top1_error(m, valid);
  return rec;
}

}  // namespace detail

/// Called after every epoch; return false to stop early.
using EpochObserver = std::function<bool(const EpochRecord&, const MlpModel&)>;

/// Mini-batch gradient descent with momentum. fixed_epochs runs exactly
/// `epochs` passes; newbob multiplies eta by `decay` when the validation error
/// improves by less than `threshold`, and stops when, after a decay, it improves
/// by less than `stop_threshold` (or after `epochs` passes).
inline TrainResult train(MlpModel model, const Dataset& train_set, const Dataset& valid_set, const TrainConfig& c,
                         const EpochObserver& observer = {}) {
  validate_train_config(c);
  validate_model(model);
  if (train_set.empty()) throw ConfigError("training set is empty");
  if (c.mode == TrainMode::newbob && valid_set.empty()) throw ConfigError("newbob needs a validation set");
  if (static_cast<std::size_t>(train_set.x.cols()) != model.feature_dim())
    throw ParameterError("training features do not match the model input width");

  const std::size_t n = train_set.size();
  const std::size_t classes = model.output_dim();
  const Eigen::MatrixXd y_all = one_hot(train_set.y, classes);
  Rng rng(c.seed);
  TrainConfig cfg = c;
  Deltas prev;
  TrainResult result;
  result.history.push_back(detail::measure(model, train_set, valid_set, 0, cfg.learning_rate, cfg.regularization));
  bool decayed = false;
  Eigen::MatrixXd xb, yb;

  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    std::vector<std::size_t> order;
    if (cfg.shuffle) {
      order = permutation(n, rng);
    } else {
      order.resize(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
    }
    for (std::size_t s = 0; s < n; s += cfg.batch_size) {
      const std::size_t bn = std::min(cfg.batch_size, n - s);
      detail::gather_rows(train_set.x, order, s, bn, xb);
      detail::gather_rows(y_all, order, s, bn, yb);
      train_step(model, xb, yb, cfg, prev);
    }
    EpochRecord rec = detail::measure(model, train_set, valid_set, epoch, cfg.learning_rate, cfg.regularization);
    result.history.push_back(rec);
    if (observer && !observer(rec, model)) break;

    if (cfg.mode == TrainMode::newbob) {
      const double before = result.history[result.history.size() - 2].valid_error;
      double improvement = before - rec.valid_error;
      if (cfg.newbob.relative) improvement = before > 0.0 ? 100.0 * improvement / before : 0.0;
      if (decayed && improvement < cfg.newbob.stop_threshold) break;
      if (improvement < cfg.newbob.threshold) {
        cfg.learning_rate *= cfg.newbob.decay;
        decayed = true;
      }
    }
  }
  result.model = std::move(model);
  return result;
}

/// Called with the freshly assembled network of every stage, before it is trained.
using StageObserver = std::function<void(std::size_t stage, const MlpModel& initial)>;

/// Supervised layer-wise pretraining: train input:h1:out, then replace the output
/// layer by h2 and a fresh output layer keeping the trained hidden layers, and so
/// on until the full topology is reached. Every stage runs the full configuration.
inline TrainResult slp_pretrain(const std::vector<std::size_t>& topology, const Dataset& train_set,
                                const Dataset& valid_set, const TrainConfig& c, Activation hidden = Activation::sigmoid,
                                const StageObserver& on_stage = {}, const SymbolTable& symbols = {}) {
  if (topology.size() < 2) throw ParameterError("topology needs at least an input and an output width");
  const std::size_t hidden_count = topology.size() - 2;
  if (hidden_count == 0) {
    MlpModel m = init_model(topology, c.seed, hidden);
    m.symbols = symbols;
    if (on_stage) on_stage(1, m);
    return train(std::move(m), train_set, valid_set, c);
  }
  TrainResult last;
  for (std::size_t stage = 1; stage <= hidden_count; ++stage) {
    std::vector<std::size_t> stage_topology(topology.begin(), topology.begin() + static_cast<std::ptrdiff_t>(stage + 1));
    stage_topology.push_back(topology.back());
    MlpModel m = init_model(stage_topology, c.seed + stage - 1, hidden);
    m.symbols = symbols;
    for (std::size_t k = 0; k + 1 < stage; ++k) m.layers[k] = last.model.layers[k];
    if (on_stage) on_stage(stage, m);
    TrainConfig sc = c;
    sc.seed = c.seed + stage - 1;
    last = train(std::move(m), train_set, valid_set, sc);
  }
  return last;
}

// ---------------------------------------------------------------------------
// Denoising auto-encoder pretraining

struct DaeConfig {
  double learning_rate = 0.001;
  double momentum = 0.0;
  double corruption = 0.3;
  double l2 = 1e-4;
  std::size_t batch_size = 256;
  int epochs = 100;
  std::uint64_t seed = 0;
  Activation first_activation = Activation::tanh;
  Activation activation = Activation::sigmoid;  // deeper hidden layers
  friend bool operator==(const DaeConfig&, const DaeConfig&) = default;
};

/// Each component independently set to 0 with probability `corruption`.
inline Eigen::MatrixXd apply_masking(const Eigen::MatrixXd& x, double corruption, Rng& rng) {
  if (!(corruption >= 0.0 && corruption < 1.0)) throw ParameterError("corruption must lie in [0, 1)");
  Eigen::MatrixXd out = x;
  if (corruption == 0.0) return out;
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    for (Eigen::Index c = 0; c < out.cols(); ++c)
      if (uniform01(rng) < corruption) out(r, c) = 0.0;
  return out;
}

struct AutoencoderResult {
  Layer encoder;
  Layer decoder;
  /// Mean 0.5 * ||reconstruction - input||^2 on clean input, before training and after every epoch.
  std::vector<double> reconstruction_error;
};

inline AutoencoderResult train_autoencoder(const Eigen::MatrixXd& x, std::size_t hidden, Activation encoder_activation,
                                           const DaeConfig& c, Rng& rng) {
  if (x.rows() == 0) throw ParameterError("auto-encoder needs data");
  const auto n_in = static_cast<std::size_t>(x.cols());
  MlpModel ae;
  ae.layers.push_back(init_layer(n_in, hidden, encoder_activation, rng));
  ae.layers.push_back(init_layer(hidden, n_in, Activation::linear, rng));
  TrainConfig tc;
  tc.learning_rate = c.learning_rate;
  tc.momentum = c.momentum;
  tc.regularization = {c.l2 > 0 ? RegularizationKind::l2 : RegularizationKind::none, c.l2};
  AutoencoderResult res;
  auto recon = [&] { return 0.5 * (forward(ae, x) - x).squaredNorm() / static_cast<double>(x.rows()); };
  res.reconstruction_error.push_back(recon());
  Deltas prev;
  const auto n = static_cast<std::size_t>(x.rows());
  Eigen::MatrixXd xb;
  for (int epoch = 1; epoch <= c.epochs; ++epoch) {
    const auto order = permutation(n, rng);
    for (std::size_t s = 0; s < n; s += c.batch_size) {
      const std::size_t bn = std::min(c.batch_size, n - s);
      detail::gather_rows(x, order, s, bn, xb);
      train_step(ae, apply_masking(xb, c.corruption, rng), xb, tc, prev, Loss::mse);
    }
    res.reconstruction_error.push_back(recon());
  }
  res.encoder = ae.layers[0];
  res.decoder = ae.layers[1];
  return res;
}

/// Stacks one denoising auto-encoder per hidden layer; the output layer is freshly initialized.
inline MlpModel dae_pretrain(const std::vector<std::size_t>& topology, const Eigen::MatrixXd& x, const DaeConfig& c,
                             std::vector<std::vector<double>>* histories = nullptr) {
  if (topology.size() < 2) throw ParameterError("topology needs at least an input and an output width");
  if (static_cast<std::size_t>(x.cols()) != topology.front())
    throw ParameterError("pretraining data does not match the input width");
  Rng rng(c.seed);
  MlpModel m;
  Eigen::MatrixXd rep = x;
  for (std::size_t k = 0; k + 2 < topology.size(); ++k) {
    const Activation act = k == 0 ? c.first_activation : c.activation;
    auto res = train_autoencoder(rep, topology[k + 1], act, c, rng);
    if (histories) histories->push_back(res.reconstruction_error);
    rep = layer_forward(res.encoder, rep);
    m.layers.push_back(std::move(res.encoder));
  }
  m.layers.push_back(init_layer(topology[topology.size() - 2], topology.back(), Activation::softmax, rng));
  return m;
}

// ---------------------------------------------------------------------------
// Prediction

/// The k most probable outputs, descending; equal probabilities by ascending symbol id.
inline ClassificationResult predict_topk(const MlpModel& m, const FeatureVector& x, std::size_t k = 10) {
  const Eigen::VectorXd o = forward(m, x);
  const auto ids = m.symbols.ids();
  ClassificationResult all;
  all.reserve(static_cast<std::size_t>(o.size()));
  for (Eigen::Index i = 0; i < o.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    all.push_back({ids.empty() ? static_cast<SymbolId>(idx) : ids[idx], o(i), o(i)});
  }
  std::stable_sort(all.begin(), all.end(), [](const Prediction& a, const Prediction& b) {
    return a.probability > b.probability || (a.probability == b.probability && a.symbol < b.symbol);
  });
  all.resize(std::min(k, all.size()));
  return all;
}

// ---------------------------------------------------------------------------
// Model files

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const MlpModel& m) {
  validate_model(m);
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["type"] = "mlp";
  doc["topology"] = m.topology();
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : m.layers) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) w.push_back(l.weights(r, c));
    layers.push_back({{"activation", to_string(l.activation)},
                      {"rows", l.weights.rows()},
                      {"cols", l.weights.cols()},
                      {"weights", std::move(w)}});
  }
  doc["layers"] = std::move(layers);
  nlohmann::json symbols = nlohmann::json::array();
  for (const auto& [id, command] : m.symbols.entries()) symbols.push_back({{"id", id}, {"command", command}});
  doc["symbols"] = std::move(symbols);
  if (!m.pipeline.is_null())
    for (const auto& [key, value] : m.pipeline.items()) doc[key] = value;
  return doc;
}

/// Deterministic text: equal models give identical bytes; doubles round-trip exactly.
inline std::string serialize_model(const MlpModel& m) { return model_to_json(m).dump(1) + "\n"; }

inline MlpModel model_from_json(const nlohmann::json& doc) {
  static const char* const kReserved[] = {"format_version", "type", "topology", "layers", "symbols"};
  if (!doc.is_object()) throw LoadError("model file is not a JSON object");
  if (!doc.contains("format_version")) throw LoadError("model file has no format_version");
  if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != kModelFormatVersion)
    throw LoadError("unsupported model format version " + doc["format_version"].dump());
  if (doc.contains("type") && doc["type"] != "mlp") throw LoadError("not an MLP model: " + doc["type"].dump());
  MlpModel m;
  try {
    for (const auto& lj : doc.at("layers")) {
      Layer l;
      l.activation = activation_from_string(lj.at("activation").get<std::string>());
      const auto rows = lj.at("rows").get<Eigen::Index>();
      const auto cols = lj.at("cols").get<Eigen::Index>();
      const auto& w = lj.at("weights");
      if (rows < 2 || cols < 1 || !w.is_array() || static_cast<Eigen::Index>(w.size()) != rows * cols)
        throw LoadError("layer weight array does not match its shape");
      l.weights.resize(rows, cols);
      Eigen::Index i = 0;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) l.weights(r, c) = w[static_cast<std::size_t>(i++)].get<double>();
      m.layers.push_back(std::move(l));
    }
    if (doc.contains("symbols"))
      for (const auto& sj : doc.at("symbols")) m.symbols.add(sj.at("id").get<SymbolId>(), sj.at("command").get<std::string>());
    if (doc.contains("topology") && doc.at("topology").get<std::vector<std::size_t>>() != m.topology())
      throw LoadError("declared topology does not match the layers");
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw LoadError(e.what());
  } catch (const ValueError& e) {
    throw LoadError(e.what());
  }
  try {
    validate_model(m);
  } catch (const ParameterError& e) {
    throw LoadError(e.what());
  }
  for (const auto& [key, value] : doc.items())
    if (std::find(std::begin(kReserved), std::end(kReserved), key) == std::end(kReserved)) m.pipeline[key] = value;
  return m;
}

inline MlpModel deserialize_model(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(doc);
}

}  // namespace symrec
