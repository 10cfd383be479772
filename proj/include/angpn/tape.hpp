#pragma once

#include <cstddef>
#include <vector>

#include "angpn/matrix.hpp"
#include "angpn/simplex.hpp"

namespace angpn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class OpKind {
  constant,
  parameter,
  matmul,
  transpose,
  add,
  scale,
  relu,
  rowwise_softmax,
  row_affine,
  rowwise_threshold,
  log_clamped,
  sum,
  weighted_sum,
};

/// Records a forward computation over dense matrices and differentiates it
/// in reverse. One tape per training step; not safe for concurrent recording.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix m);
  Var parameter(Matrix m);

  const Matrix& value(Var v) const { return nodes_.at(v.id_).value; }
  OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
  std::size_t size() const noexcept { return nodes_.size(); }
  /// Node ids of parameters in registration order.
  const std::vector<std::size_t>& parameters() const noexcept { return params_; }

  /// d loss / d parameter for every parameter, in registration order.
  /// Throws ContractError if loss is not a 1x1 node of this tape.
  std::vector<Matrix> backward(Var loss) const;

  /// Recomputes every recorded node from the leaves and returns the values.
  std::vector<Matrix> replay() const;

  /// Smallest distance of any relu input or threshold argument from its kink.
  double min_kink_margin() const;

  // Recording entry points used by the free functions below.
  Var record_matmul(Var a, Var b);
  Var record_transpose(Var a);
  Var record_add(Var a, Var b);
  Var record_scale(Var a, double s);
  Var record_relu(Var a);
  Var record_softmax(Var a);
  Var record_row_affine(Var a, double s, Matrix offset, std::vector<double> divisor);
  Var record_threshold(Var v, ThresholdRule rule, std::vector<double> eta);
  Var record_log_clamped(Var a, double floor);
  Var record_sum(Var a);
  Var record_weighted_sum(Var a, Matrix weights);

 private:
  struct Node {
    OpKind kind = OpKind::constant;
    std::size_t in0 = 0;
    std::size_t in1 = 0;
    bool requires_grad = false;
    Matrix value;
    double scalar = 0.0;
    Matrix aux;                   // row_affine offset, weighted_sum weights
    std::vector<double> row_aux;  // row_affine divisor, threshold eta
    ThresholdRule rule = ThresholdRule::unit_sum;
  };

  Var push(Node node);
  void check_owned(Var v) const;
  Matrix evaluate(const Node& node, const std::vector<Matrix>& values,
                  std::vector<double>* solved_eta) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> params_;
};

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var scale(Var a, double s);
Var relu(Var a);
Var rowwise_softmax(Var a);
/// out(i,j) = (s * a(i,j) - offset(i,j)) / divisor[i]; offset is data.
Var row_affine(Var a, double s, Matrix offset, std::vector<double> divisor);
/// Row-wise threshold with masked diagonal; see threshold_rows.
Var rowwise_threshold(Var v, ThresholdRule rule, std::vector<double> eta);
/// ln(max(a, floor)); derivative 0 where clamped.
Var log_clamped(Var a, double floor);
Var sum(Var a);
/// sum_ij weights(i,j) * a(i,j); weights are data.
Var weighted_sum(Var a, Matrix weights);

}  // namespace angpn
