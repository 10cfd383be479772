#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "angpn/data.hpp"
#include "angpn/graphlearn.hpp"
#include "angpn/matrix.hpp"
#include "angpn/model.hpp"
#include "angpn/rng.hpp"

namespace angpn {

struct TrainConfig {
  double learning_rate = 0.005;
  std::size_t max_epochs = 10000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t patience = 100;
  std::uint64_t seed = 0;

  /// Throws ParameterError on a non-positive rate, zero epochs or bad Adam constants.
  void validate() const;
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::uint64_t t = 0;
};

/// Zeroed moments shaped like `params`.
AdamState adam_init(const std::vector<Matrix>& params);

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::vector<Matrix>& params, const std::vector<Matrix>& grads,
               const TrainConfig& cfg);

/// Entries uniform on (-b, b), b = sqrt(6 / (rows + cols)).
Matrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng);

/// Glorot weights for `layer_dims`; weight k draws from stream weights(k) of `seed`.
ModelState init_model(std::vector<std::size_t> layer_dims, const HyperParams& hyper,
                      Variant variant, std::uint64_t seed);

/// Fraction of `idx` whose row argmax (ties to the smaller class) equals the label.
double accuracy(const Matrix& z, const std::vector<std::size_t>& labels,
                const std::vector<std::size_t>& idx);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_acc = 0.0;
};

struct FitResult {
  ModelState best;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
  std::vector<EpochRecord> history;

  std::size_t epochs_run() const noexcept { return history.size(); }
};

/// Full-batch Adam training. Validation accuracy of each epoch is measured on
/// the forward pass that produced that epoch's gradients, so the recorded
/// model is the one before the update. Keeps the first model reaching the best
/// validation accuracy; stops after `patience` epochs without improvement.
FitResult fit(const ModelState& initial, const DistanceMatrix& dist, const Matrix& x,
              const LabeledSplit& split, const TrainConfig& cfg);

/// "epoch,train_loss,val_acc" header plus one line per epoch.
void write_history_csv(std::ostream& os, const std::vector<EpochRecord>& history);

}  // namespace angpn
