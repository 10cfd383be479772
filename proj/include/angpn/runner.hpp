#pragma once

// Experiment plumbing shared by the command-line tool, the acceptance binary
// and the Python module: resolved run configuration, repeated training runs,
// and the artifacts each command writes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "angpn/data.hpp"
#include "angpn/hyperparams.hpp"
#include "angpn/model.hpp"
#include "angpn/oracles.hpp"
#include "angpn/train.hpp"

namespace angpn {

/// Everything one invocation needs. `data` is a CSV or packed file path, or
/// one of the built-in generators "blobs" and "moons".
struct RunConfig {
  std::string data;
  std::string labels;
  std::size_t gen_n_per_class = 150;
  double gen_noise = -1.0;  // negative: generator default (blobs 1.0, moons 0.1)
  double gen_separation = 10.0;
  FeatureTransform transform;

  Variant variant = Variant::angpn;
  double label_rate = 0.1;
  double val_rate = 0.05;
  HyperParams hyper;
  // "auto" (mean of the per-row values at k), "per-row" or a positive number.
  std::string gamma = "auto";
  std::vector<std::size_t> hidden{50, 50};
  TrainConfig train;
  std::size_t repeats = 5;
  std::filesystem::path out = "angpn_out";
  std::filesystem::path checkpoint;

  /// Throws ParameterError on out-of-range settings. Does not touch the data.
  void validate() const;
};

/// Reads a JSON object whose keys are the long flag names with '_' for '-'.
/// Unknown keys are a ParameterError. Missing keys keep the values of `base`.
RunConfig config_from_json(std::string_view text, const RunConfig& base = {});
std::string config_to_json(const RunConfig& cfg);

/// Reads the configured dataset; generators draw from `seed`.
Dataset load_run_dataset(const RunConfig& cfg, std::uint64_t seed);

/// Hyperparameters with gamma resolved against the input distances.
HyperParams resolve_hyper(const RunConfig& cfg, const DistanceMatrix& dist);

struct RunMetrics {
  std::string dataset;
  double label_rate = 0.0;
  std::uint64_t seed = 0;
  Variant variant = Variant::angpn;
  double test_accuracy = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_acc = 0.0;
};

std::string metrics_to_json(const RunMetrics& m);

struct RunOutcome {
  RunMetrics metrics;
  FitResult fit;
  Matrix probabilities;  // best model's class probabilities for every point
};

/// One full protocol run at `seed`: data, split, init and fit all derive from it.
RunOutcome run_once(const RunConfig& cfg, std::uint64_t seed);

struct Summary {
  std::vector<RunMetrics> runs;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
};

/// Seeds cfg.train.seed .. + repeats - 1, spread over `threads` workers;
/// results are ordered by seed whatever the thread count.
Summary run_repeats(const RunConfig& cfg, std::size_t threads);

/// "65.53 ± 1.25" from accuracies in [0, 1].
std::string format_cell(double mean, double std);

/// ANGPN_THREADS if set to a positive integer, else hardware concurrency.
std::size_t worker_threads();

// Commands. Each returns the process exit code: 0 ok, 1 check or metric
// failure, 2 usage or data error. Progress and reports go to `log`.
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_graph_export(const RunConfig& cfg, std::ostream& log);

struct GradcheckOptions {
  oracle::GradcheckSetup setup{};
  double step = 1e-5;
  double tolerance = 1e-4;
  // Adds this to the first analytic gradient entry; a negative control.
  double corrupt = 0.0;
};
int cmd_gradcheck(const RunConfig& cfg, const GradcheckOptions& opts, std::ostream& log);

/// Axis is one of layers, alpha, beta, T, label_rate. "layers" counts hidden
/// propagation layers, so 2 is the default network.
int cmd_sweep(const RunConfig& cfg, std::string_view axis, const std::vector<double>& values,
              std::ostream& log);

/// Runs a command body, mapping library errors to exit codes with a message.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace angpn
