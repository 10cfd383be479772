#include "angpn/model.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include "angpn/errors.hpp"
#include "angpn/io.hpp"
#include "angpn/propagation.hpp"

namespace angpn {

namespace {

constexpr std::array<char, 8> kCheckpointMagic = {'A', 'N', 'G', 'P', 'N', '1', '\0', '\0'};
constexpr double kLogFloor = 1e-12;

void require_input(const ModelState& state, std::size_t layer, const DistanceMatrix& dist,
                   const Matrix& h) {
  if (layer >= state.layer_count()) {
    throw ContractError("layer " + std::to_string(layer) + " of " +
                        std::to_string(state.layer_count()));
  }
  if (h.rows() != dist.n() || h.cols() != state.layer_dims[layer]) {
    throw ShapeError("layer " + std::to_string(layer) + " input " + h.shape_string() + ", expected " +
                     std::to_string(dist.n()) + "x" + std::to_string(state.layer_dims[layer]));
  }
}

HyperParams ngpn_params(const HyperParams& p) {
  HyperParams q = p;
  q.beta = 0.0;
  q.t_steps = 1;
  return q;
}

Matrix fixed_graph(const DistanceMatrix& dist, const Matrix& f, double beta, const AffinityPlan& plan) {
  std::vector<double> eta = plan.eta;
  return threshold_rows(affinity_logits(dist, f, beta, plan), plan.rule, eta);
}

Var taped_propagate(Tape& tape, const ModelState& state, const DistanceMatrix& dist,
                    const AffinityPlan& plan, Var h) {
  const HyperParams& p = state.hyper;
  const bool distance_only = state.variant == Variant::ngpn || p.beta == 0.0;
  const bool frozen = p.grad_mode == GradMode::frozen_graph;
  const std::size_t steps = state.variant == Variant::ngpn ? 1 : p.t_steps;

  const Var retained = scale(h, 1.0 - p.alpha);
  Var f = h;
  Var s_fixed;
  if (distance_only) s_fixed = tape.constant(fixed_graph(dist, h.value(), 0.0, plan));
  for (std::size_t t = 0; t < steps; ++t) {
    Var s;
    if (distance_only) {
      s = s_fixed;
    } else if (frozen) {
      s = tape.constant(fixed_graph(dist, f.value(), p.beta, plan));
    } else {
      const Var gram = matmul(f, transpose(f));
      s = rowwise_threshold(row_affine(gram, p.beta, dist.d, plan.divisor), plan.rule, plan.eta);
    }
    f = add(scale(matmul(s, h), p.alpha), retained);
  }
  return f;
}

Matrix negated_targets(const Matrix& z, const LabeledSplit& split) {
  if (split.train_idx.empty()) throw ContractError("loss needs at least one training node");
  if (!split.one_hot.same_shape(z)) {
    throw ShapeError("targets " + split.one_hot.shape_string() + " for predictions " +
                     z.shape_string());
  }
  return scale(split.one_hot, -1.0);
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::angpn ? "angpn" : "ngpn"; }

Variant parse_variant(std::string_view s) {
  if (s == "angpn") return Variant::angpn;
  if (s == "ngpn") return Variant::ngpn;
  throw ParameterError("unknown variant '" + std::string(s) + "' (expected angpn or ngpn)");
}

void ModelState::validate() const {
  if (weights.empty()) throw ContractError("model has no layers");
  if (layer_dims.size() != weights.size() + 1) {
    throw ContractError("model has " + std::to_string(weights.size()) + " weights but " +
                        std::to_string(layer_dims.size()) + " dims");
  }
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k].rows() != layer_dims[k] || weights[k].cols() != layer_dims[k + 1]) {
      throw ContractError("weight " + std::to_string(k) + " is " + weights[k].shape_string() +
                          ", expected " + std::to_string(layer_dims[k]) + "x" +
                          std::to_string(layer_dims[k + 1]));
    }
  }
  hyper.validate();
}

ModelState zero_model(std::vector<std::size_t> layer_dims, const HyperParams& hyper,
                      Variant variant) {
  if (layer_dims.size() < 2) throw ParameterError("model needs an input and an output dimension");
  ModelState state;
  for (std::size_t k = 0; k + 1 < layer_dims.size(); ++k) {
    state.weights.emplace_back(layer_dims[k], layer_dims[k + 1]);
  }
  state.layer_dims = std::move(layer_dims);
  state.hyper = hyper;
  state.variant = variant;
  state.validate();
  return state;
}

Propagation layer_propagate(const ModelState& state, const DistanceMatrix& dist, const Matrix& h) {
  if (state.variant == Variant::ngpn) return anfp_propagate(dist, h, ngpn_params(state.hyper));
  return anfp_propagate(dist, h, state.hyper);
}

Matrix layer_forward(const ModelState& state, std::size_t layer, const DistanceMatrix& dist,
                     const Matrix& h_in) {
  require_input(state, layer, dist, h_in);
  Matrix out = matmul(layer_propagate(state, dist, h_in).f, state.weights[layer]);
  return layer + 1 < state.layer_count() ? relu(out) : out;
}

Matrix network_forward(const ModelState& state, const DistanceMatrix& dist, const Matrix& x) {
  state.validate();
  Matrix h = x;
  for (std::size_t k = 0; k < state.layer_count(); ++k) h = layer_forward(state, k, dist, h);
  return rowwise_softmax(h);
}

double semi_ce_loss(const Matrix& z, const LabeledSplit& split) {
  const Matrix neg = negated_targets(z, split);
  double loss = 0.0;
  for (std::size_t i : split.train_idx) {
    for (std::size_t j = 0; j < z.cols(); ++j) {
      if (neg(i, j) != 0.0) loss += neg(i, j) * std::log(std::max(z(i, j), kLogFloor));
    }
  }
  return loss;
}

TapedForward record_forward(Tape& tape, const ModelState& state, const DistanceMatrix& dist,
                            const Matrix& x, const LabeledSplit& split) {
  state.validate();
  require_input(state, 0, dist, x);
  const AffinityPlan plan = make_affinity_plan(dist, state.hyper);

  TapedForward out;
  Var h = tape.constant(x);
  for (std::size_t k = 0; k < state.layer_count(); ++k) {
    const Var w = tape.parameter(state.weights[k]);
    out.params.push_back(w);
    const Var o = matmul(taped_propagate(tape, state, dist, plan, h), w);
    h = k + 1 < state.layer_count() ? relu(o) : o;
  }
  out.z = rowwise_softmax(h);
  out.loss = weighted_sum(log_clamped(out.z, kLogFloor), negated_targets(out.z.value(), split));
  return out;
}

LossAndGrad loss_and_gradients(const ModelState& state, const DistanceMatrix& dist,
                               const Matrix& x, const LabeledSplit& split) {
  Tape tape;
  const TapedForward fwd = record_forward(tape, state, dist, x, split);
  LossAndGrad out;
  out.loss = fwd.loss.value()(0, 0);
  out.z = fwd.z.value();
  out.grads = tape.backward(fwd.loss);
  return out;
}

void write_checkpoint(std::ostream& os, const ModelState& state) {
  state.validate();
  os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
  write_u64_le(os, state.layer_count());
  for (std::size_t d : state.layer_dims) write_u64_le(os, d);
  const HyperParams& p = state.hyper;
  write_f64_le(os, p.alpha);
  write_f64_le(os, p.beta);
  write_f64_le(os, p.gamma);
  write_u64_le(os, p.k);
  write_u64_le(os, p.t_steps);
  write_u8(os, static_cast<std::uint8_t>(p.mode.solver));
  write_u8(os, static_cast<std::uint8_t>(p.mode.gamma_mode));
  write_u8(os, static_cast<std::uint8_t>(p.grad_mode));
  write_u8(os, static_cast<std::uint8_t>(state.variant));
  for (const Matrix& w : state.weights) {
    for (double v : w.values()) write_f64_le(os, v);
  }
}

ModelState read_checkpoint(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kCheckpointMagic) {
    throw DataError("not a model checkpoint (bad magic)");
  }
  const std::uint64_t layers = read_u64_le(is);
  if (layers < 1 || layers > 1024) throw DataError("checkpoint: implausible layer count");
  ModelState state;
  for (std::uint64_t k = 0; k <= layers; ++k) {
    const std::uint64_t d = read_u64_le(is);
    if (d < 1 || d > (1ull << 24)) throw DataError("checkpoint: implausible layer width");
    state.layer_dims.push_back(static_cast<std::size_t>(d));
  }
  HyperParams& p = state.hyper;
  p.alpha = read_f64_le(is);
  p.beta = read_f64_le(is);
  p.gamma = read_f64_le(is);
  p.k = static_cast<std::size_t>(read_u64_le(is));
  p.t_steps = static_cast<std::size_t>(read_u64_le(is));
  const auto enum_byte = [&](std::uint8_t limit, const char* what) {
    const std::uint8_t b = read_u8(is);
    if (b > limit) throw DataError(std::string("checkpoint: bad ") + what);
    return b;
  };
  p.mode.solver = static_cast<GraphSolver>(enum_byte(1, "graph solver"));
  p.mode.gamma_mode = static_cast<GammaMode>(enum_byte(1, "gamma mode"));
  p.grad_mode = static_cast<GradMode>(enum_byte(1, "gradient mode"));
  state.variant = static_cast<Variant>(enum_byte(1, "variant"));
  for (std::size_t k = 0; k < layers; ++k) {
    Matrix w(state.layer_dims[k], state.layer_dims[k + 1]);
    for (double& v : w.values()) v = read_f64_le(is);
    if (!all_finite(w)) throw DataError("checkpoint: non-finite weight");
    state.weights.push_back(std::move(w));
  }
  try {
    state.validate();
  } catch (const ParameterError& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return state;
}

void save_checkpoint(const ModelState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_checkpoint(out, state);
}

ModelState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace angpn
