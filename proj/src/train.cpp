#include "angpn/train.hpp"

#include <cmath>
#include <ostream>

#include "angpn/errors.hpp"
#include "angpn/io.hpp"

namespace angpn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning rate must be > 0");
  }
  if (max_epochs < 1) throw ParameterError("max_epochs must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ParameterError("Adam decay rates must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ParameterError("Adam epsilon must be > 0");
  if (patience < 1) throw ParameterError("patience must be >= 1");
}

AdamState adam_init(const std::vector<Matrix>& params) {
  AdamState s;
  for (const Matrix& p : params) {
    s.m.emplace_back(p.rows(), p.cols());
    s.v.emplace_back(p.rows(), p.cols());
  }
  return s;
}

void adam_step(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               const TrainConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ContractError("adam_step: parameter, gradient and moment counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].same_shape(grads[k]) || !params[k].same_shape(state.m[k]) ||
        !params[k].same_shape(state.v[k])) {
      throw ContractError("adam_step: shape mismatch at parameter " + std::to_string(k) + ": " +
                          params[k].shape_string() + " vs gradient " + grads[k].shape_string());
    }
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, t);
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k].values();
    auto g = grads[k].values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * (g[i] * g[i]);
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows < 1 || cols < 1) throw ShapeError("glorot_init: dimensions must be >= 1");
  const double b = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix w(rows, cols);
  for (double& x : w.values()) x = b * (2.0 * rng.uniform_open() - 1.0);
  return w;
}

ModelState init_model(std::vector<std::size_t> layer_dims, const HyperParams& hyper,
                      Variant variant, std::uint64_t seed) {
  ModelState state = zero_model(std::move(layer_dims), hyper, variant);
  for (std::size_t k = 0; k < state.layer_count(); ++k) {
    Rng rng = Rng::stream(seed, streams::weights(k));
    state.weights[k] = glorot_init(state.layer_dims[k], state.layer_dims[k + 1], rng);
  }
  return state;
}

double accuracy(const Matrix& z, const std::vector<std::size_t>& labels,
                const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw ContractError("accuracy: empty index set");
  std::size_t correct = 0;
  for (std::size_t i : idx) {
    if (i >= z.rows() || i >= labels.size()) throw ContractError("accuracy: index out of range");
    auto row = z.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

FitResult fit(const ModelState& initial, const DistanceMatrix& dist, const Matrix& x,
              const LabeledSplit& split, const TrainConfig& cfg) {
  cfg.validate();
  initial.validate();
  if (split.val_idx.empty()) throw DataError("fit: model selection needs a validation set");
  if (split.labels.size() != x.rows()) throw ShapeError("fit: split does not match the data");
  if (initial.class_count() != split.class_count) {
    throw ShapeError("fit: model outputs " + std::to_string(initial.class_count()) +
                     " classes, data has " + std::to_string(split.class_count));
  }

  FitResult result;
  result.best = initial;
  ModelState current = initial;
  AdamState adam = adam_init(current.weights);
  bool have_best = false;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    LossAndGrad step = loss_and_gradients(current, dist, x, split);
    if (!std::isfinite(step.loss)) throw TrainingError(epoch, "non-finite training loss");
    const double val_acc = accuracy(step.z, split.labels, split.val_idx);
    result.history.push_back({epoch, step.loss, val_acc});

    if (!have_best || val_acc > result.best_val_acc) {
      have_best = true;
      result.best = current;
      result.best_epoch = epoch;
      result.best_val_acc = val_acc;
    } else if (epoch - result.best_epoch >= cfg.patience) {
      break;
    }
    adam_step(adam, current.weights, step.grads, cfg);
  }
  return result;
}

void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history) {
  os << "epoch,train_loss,val_acc\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_acc) << '\n';
  }
}

}  // namespace angpn
