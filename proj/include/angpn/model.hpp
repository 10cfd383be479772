#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "angpn/data.hpp"
#include "angpn/graphlearn.hpp"
#include "angpn/hyperparams.hpp"
#include "angpn/matrix.hpp"
#include "angpn/propagation.hpp"
#include "angpn/tape.hpp"

namespace angpn {

enum class Variant { angpn, ngpn };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view s);

/// Weights W(0..K-1) with W(k) of shape layer_dims[k] x layer_dims[k+1].
struct ModelState {
  std::vector<Matrix> weights;
  std::vector<std::size_t> layer_dims;
  HyperParams hyper;
  Variant variant = Variant::angpn;

  std::size_t layer_count() const noexcept { return weights.size(); }
  std::size_t class_count() const { return layer_dims.back(); }
  /// Throws ContractError unless the weight shapes chain through layer_dims.
  void validate() const;
};

/// Zero weights for the given dims (at least two entries).
ModelState zero_model(std::vector<std::size_t> layer_dims, const HyperParams& hyper,
                      Variant variant);

/// Propagation used inside a layer: Algorithm 1 for angpn, a single pass over
/// the distance-only graph for ngpn.
Propagation layer_propagate(const ModelState& state, const DistanceMatrix& dist, const Matrix& h);

/// act(P(D, H) W(layer)); act is relu on hidden layers and the identity on the last.
Matrix layer_forward(const ModelState& state, std::size_t layer, const DistanceMatrix& dist,
                     const Matrix& h_in);

/// Class probabilities Z (n x c).
Matrix network_forward(const ModelState& state, const DistanceMatrix& dist, const Matrix& x);

/// -sum over training rows of sum_j Y(i,j) ln max(Z(i,j), 1e-12).
double semi_ce_loss(const Matrix& z, const LabeledSplit& split);

struct TapedForward {
  Var z;
  Var loss;
  std::vector<Var> params;
};

/// Records the full forward pass, with every weight as a tape parameter.
TapedForward record_forward(Tape& tape, const ModelState& state, const DistanceMatrix& dist,
                            const Matrix& x, const LabeledSplit& split);

struct LossAndGrad {
  double loss = 0.0;
  Matrix z;
  std::vector<Matrix> grads;  // one per weight matrix
};

LossAndGrad loss_and_gradients(const ModelState& state, const DistanceMatrix& dist,
                               const Matrix& x, const LabeledSplit& split);

/// "ANGPN1\0\0", u64 K, (K+1) u64 dims, f64 alpha, beta, gamma, u64 k, t_steps,
/// u8 solver, gamma_mode, grad_mode, variant, then row-major f64 weights.
void save_checkpoint(const ModelState& state, const std::filesystem::path& path);
ModelState load_checkpoint(const std::filesystem::path& path);
void write_checkpoint(std::ostream& os, const ModelState& state);
ModelState read_checkpoint(std::istream& is);

}  // namespace angpn
