#pragma once

// Slow reference implementations for tests. Nothing here calls the kernels it
// is meant to check; loops are written out independently.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "angpn/data.hpp"
#include "angpn/graphlearn.hpp"
#include "angpn/hyperparams.hpp"
#include "angpn/matrix.hpp"
#include "angpn/model.hpp"

namespace angpn::oracle {

using LossFn = std::function<double(const std::vector<Matrix>&)>;

/// Central differences (L(p + s e) - L(p - s e)) / 2s for every parameter entry.
/// Throws OracleError if the loss is ever non-finite.
std::vector<Matrix> fd_gradient(const LossFn& loss, const std::vector<Matrix>& params,
                                double step = 1e-5);

struct GradEntryReport {
  double max_rel_error = 0.0;
  std::size_t row = 0;
  std::size_t col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradReport {
  std::vector<GradEntryReport> params;

  double max_rel_error() const;
  bool passes(double tol) const { return max_rel_error() <= tol; }
};

/// |a - n| / max(|a|, |n|, 1e-8), maximized per parameter.
GradReport compare_gradients(const std::vector<Matrix>& analytic,
                             const std::vector<Matrix>& numeric);

/// Minimizer of c.s + gamma |s|^2 over the probability simplex, by checking
/// the KKT conditions of all 2^m - 1 supports. m <= 8.
std::vector<double> simplex_qp_oracle(const std::vector<double>& costs, double gamma);

/// Projection onto the simplex by Michelot's iterative support shrinking,
/// skipping index `skip` (pass costs.size() or more for none).
std::vector<double> michelot_projection(const std::vector<double>& v, std::size_t skip);

/// (1 - alpha)(I - alpha S)^{-1} H by textbook Gaussian elimination.
Matrix dense_fixed_point_oracle(const Matrix& s, const Matrix& h, double alpha);

Matrix matmul_oracle(const Matrix& a, const Matrix& b);

/// Distance matrix from a per-pair scalar loop.
Matrix distance_oracle(const Matrix& x);

struct Algorithm1Trace {
  Matrix f;
  Matrix s;
};

/// Re-executes the propagation layer step by step from raw features: its own
/// neighbor order, regularization weights, thresholds and products.
Algorithm1Trace algorithm1_oracle(const Matrix& x, const Matrix& h, const HyperParams& p);

/// Label propagation (1 - alpha)(I - alpha A)^{-1} Y on the row-normalized
/// kNN graph of x; returns the predicted class per point.
std::vector<std::size_t> label_propagation_predict(const Matrix& x, const LabeledSplit& split,
                                                   std::size_t k, double alpha);

struct GradcheckSetup {
  std::size_t n = 12;
  std::size_t input_dim = 4;
  std::vector<std::size_t> hidden{6};
  std::size_t classes = 2;
  std::uint64_t seed = 1;
  // Instances whose relu inputs or threshold arguments come closer than this
  // to a kink are redrawn, so finite differences stay on one smooth piece.
  double min_kink_margin = 1e-3;
  std::size_t max_attempts = 500;
  // Replace hyper.gamma by auto_gamma of each drawn instance.
  bool auto_gamma = false;
};

struct GradcheckInstance {
  Matrix x;
  DistanceMatrix dist;
  LabeledSplit split;
  ModelState state;
  double kink_margin = 0.0;
  std::size_t attempts = 0;
};

/// Random tiny classification problem and weights for gradient checking.
/// Throws OracleError if no draw clears the kink margin.
GradcheckInstance make_gradcheck_instance(const HyperParams& hyper, Variant variant,
                                          const GradcheckSetup& setup);

/// Tape gradients against central differences of the training loss.
/// `tamper`, when set, edits the analytic gradients before comparison.
GradReport check_model_gradients(const GradcheckInstance& inst, double step = 1e-5,
                                 const std::function<void(std::vector<Matrix>&)>& tamper = {});

}  // namespace angpn::oracle
