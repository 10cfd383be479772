#include "angpn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "angpn/errors.hpp"

namespace angpn {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("Var: not attached to a tape");
  return tape_->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw ContractError("Var does not belong to this tape");
  }
}

Var Tape::constant(Matrix m) {
  Node n;
  n.kind = OpKind::constant;
  n.value = std::move(m);
  return push(std::move(n));
}

Var Tape::parameter(Matrix m) {
  Node n;
  n.kind = OpKind::parameter;
  n.requires_grad = true;
  n.value = std::move(m);
  Var v = push(std::move(n));
  params_.push_back(v.id_);
  return v;
}

Matrix Tape::evaluate(const Node& node, const std::vector<Matrix>& values,
                      std::vector<double>* solved_eta) const {
  if (node.kind == OpKind::constant || node.kind == OpKind::parameter) return node.value;
  const Matrix& a = values[node.in0];
  switch (node.kind) {
    case OpKind::constant:
    case OpKind::parameter:
      return node.value;
    case OpKind::matmul:
      return angpn::matmul(a, values[node.in1]);
    case OpKind::transpose:
      return angpn::transpose(a);
    case OpKind::add:
      return angpn::add(a, values[node.in1]);
    case OpKind::scale:
      return angpn::scale(a, node.scalar);
    case OpKind::relu:
      return angpn::relu(a);
    case OpKind::rowwise_softmax:
      return angpn::rowwise_softmax(a);
    case OpKind::row_affine:
      return angpn::row_affine(a, node.scalar, node.aux, node.row_aux);
    case OpKind::rowwise_threshold: {
      std::vector<double> eta = node.row_aux;
      Matrix out = threshold_rows(a, node.rule, eta);
      if (solved_eta != nullptr) *solved_eta = std::move(eta);
      return out;
    }
    case OpKind::log_clamped: {
      Matrix out = a;
      for (double& x : out.values()) x = std::log(std::max(x, node.scalar));
      return out;
    }
    case OpKind::sum:
      return Matrix(1, 1, angpn::sum(a));
    case OpKind::weighted_sum: {
      double total = 0.0;
      auto x = a.values();
      auto w = node.aux.values();
      for (std::size_t i = 0; i < x.size(); ++i) total += w[i] * x[i];
      return Matrix(1, 1, total);
    }
  }
  throw ContractError("Tape: unknown op");
}

Var Tape::record_matmul(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  Node n;
  n.kind = OpKind::matmul;
  n.in0 = a.id_;
  n.in1 = b.id_;
  n.requires_grad = nodes_[a.id_].requires_grad || nodes_[b.id_].requires_grad;
  n.value = angpn::matmul(nodes_[a.id_].value, nodes_[b.id_].value);
  return push(std::move(n));
}

Var Tape::record_transpose(Var a) {
  check_owned(a);
  Node n;
  n.kind = OpKind::transpose;
  n.in0 = a.id_;
  n.requires_grad = nodes_[a.id_].requires_grad;
  n.value = angpn::transpose(nodes_[a.id_].value);
  return push(std::move(n));
}

Var Tape::record_add(Var a, Var b) {
  check_owned(a);
  check_owned(b);
  Node n;
  n.kind = OpKind::add;
  n.in0 = a.id_;
  n.in1 = b.id_;
  n.requires_grad = nodes_[a.id_].requires_grad || nodes_[b.id_].requires_grad;
  n.value = angpn::add(nodes_[a.id_].value, nodes_[b.id_].value);
  return push(std::move(n));
}

Var Tape::record_scale(Var a, double s) {
  check_owned(a);
  Node n;
  n.kind = OpKind::scale;
  n.in0 = a.id_;
  n.scalar = s;
  n.requires_grad = nodes_[a.id_].requires_grad;
  n.value = angpn::scale(nodes_[a.id_].value, s);
  return push(std::move(n));
}

Var Tape::record_relu(Var a) {
  check_owned(a);
  Node n;
  n.kind = OpKind::relu;
  n.in0 = a.id_;
  n.requires_grad = nodes_[a.id_].requires_grad;
  n.value = angpn::relu(nodes_[a.id_].value);
  return push(std::move(n));
}

Var Tape::record_softmax(Var a) {
  check_owned(a);
  Node n;
  n.kind = OpKind::rowwise_softmax;
  n.in0 = a.id_;
  n.requires_grad = nodes_[a.id_].requires_grad;
  n.value = angpn::rowwise_softmax(nodes_[a.id_].value);
  return push(std::move(n));
}

Var Tape::record_row_affine(Var a, double s, Matrix offset, std::vector<double> divisor) {
  check_owned(a);
  Node n;
  n.kind = OpKind::row_affine;
  n.in0 = a.id_;
  n.scalar = s;
  n.requires_grad = nodes_[a.id_].requires_grad;
  n.value = angpn::row_affine(nodes_[a.id_].value, s, offset, divisor);
  n.aux = std::move(offset);
  n.row_aux = std::move(divisor);
  return push(std::move(n));
}

Var Tape::record_threshold(Var v, ThresholdRule rule, std::vector<double> eta) {
  check_owned(v);
  Node n;
  n.kind = OpKind::rowwise_threshold;
  n.in0 = v.id_;
  n.rule = rule;
  n.requires_grad = nodes_[v.id_].requires_grad;
  n.value = threshold_rows(nodes_[v.id_].value, rule, eta);
  n.row_aux = std::move(eta);
  return push(std::move(n));
}

Var Tape::record_log_clamped(Var a, double floor) {
  check_owned(a);
  Node n;
  n.kind = OpKind::log_clamped;
  n.in0 = a.id_;
  n.scalar = floor;
  n.requires_grad = nodes_[a.id_].requires_grad;
  n.value = nodes_[a.id_].value;
  for (double& x : n.value.values()) x = std::log(std::max(x, floor));
  return push(std::move(n));
}

Var Tape::record_sum(Var a) {
  check_owned(a);
  Node n;
  n.kind = OpKind::sum;
  n.in0 = a.id_;
  n.requires_grad = nodes_[a.id_].requires_grad;
  n.value = Matrix(1, 1, angpn::sum(nodes_[a.id_].value));
  return push(std::move(n));
}

Var Tape::record_weighted_sum(Var a, Matrix weights) {
  check_owned(a);
  if (!weights.same_shape(nodes_[a.id_].value)) {
    throw ShapeError("weighted_sum: weights " + weights.shape_string() + " for " +
                     nodes_[a.id_].value.shape_string());
  }
  Node n;
  n.kind = OpKind::weighted_sum;
  n.in0 = a.id_;
  n.requires_grad = nodes_[a.id_].requires_grad;
  double total = 0.0;
  auto x = nodes_[a.id_].value.values();
  auto w = weights.values();
  for (std::size_t i = 0; i < x.size(); ++i) total += w[i] * x[i];
  n.value = Matrix(1, 1, total);
  n.aux = std::move(weights);
  return push(std::move(n));
}

std::vector<Matrix> Tape::replay() const {
  std::vector<Matrix> values;
  values.reserve(nodes_.size());
  for (const Node& node : nodes_) values.push_back(evaluate(node, values, nullptr));
  return values;
}

namespace {

void accumulate(Matrix& slot, const Matrix& contribution) {
  if (slot.empty()) {
    slot = contribution;
    return;
  }
  auto out = slot.values();
  auto in = contribution.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
}

}  // namespace

std::vector<Matrix> Tape::backward(Var loss) const {
  check_owned(loss);
  const Node& root = nodes_[loss.id_];
  if (root.value.rows() != 1 || root.value.cols() != 1) {
    throw ContractError("backward: loss must be 1x1, got " + root.value.shape_string());
  }
  std::vector<Matrix> grads(nodes_.size());
  grads[loss.id_] = Matrix(1, 1, 1.0);

  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    const Node& node = nodes_[id];
    if (grads[id].empty() || !node.requires_grad) continue;
    const Matrix& g = grads[id];
    const auto wants = [&](std::size_t in) { return nodes_[in].requires_grad; };

    switch (node.kind) {
      case OpKind::constant:
      case OpKind::parameter:
        break;
      case OpKind::matmul: {
        const Matrix& a = nodes_[node.in0].value;
        const Matrix& b = nodes_[node.in1].value;
        if (wants(node.in0)) accumulate(grads[node.in0], angpn::matmul(g, angpn::transpose(b)));
        if (wants(node.in1)) accumulate(grads[node.in1], angpn::matmul(angpn::transpose(a), g));
        break;
      }
      case OpKind::transpose:
        accumulate(grads[node.in0], angpn::transpose(g));
        break;
      case OpKind::add:
        if (wants(node.in0)) accumulate(grads[node.in0], g);
        if (wants(node.in1)) accumulate(grads[node.in1], g);
        break;
      case OpKind::scale:
        accumulate(grads[node.in0], angpn::scale(g, node.scalar));
        break;
      case OpKind::relu: {
        const Matrix& x = nodes_[node.in0].value;
        Matrix d = g;
        auto dv = d.values();
        auto xv = x.values();
        for (std::size_t i = 0; i < dv.size(); ++i) {
          if (!(xv[i] > 0.0)) dv[i] = 0.0;
        }
        accumulate(grads[node.in0], d);
        break;
      }
      case OpKind::rowwise_softmax: {
        const Matrix& z = node.value;
        Matrix d(z.rows(), z.cols());
        for (std::size_t i = 0; i < z.rows(); ++i) {
          double dot = 0.0;
          for (std::size_t j = 0; j < z.cols(); ++j) dot += g(i, j) * z(i, j);
          for (std::size_t j = 0; j < z.cols(); ++j) d(i, j) = z(i, j) * (g(i, j) - dot);
        }
        accumulate(grads[node.in0], d);
        break;
      }
      case OpKind::row_affine: {
        Matrix d(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) d(i, j) = node.scalar * g(i, j) / node.row_aux[i];
        }
        accumulate(grads[node.in0], d);
        break;
      }
      case OpKind::rowwise_threshold: {
        const Matrix& s = node.value;
        Matrix d(s.rows(), s.cols());
        for (std::size_t i = 0; i < s.rows(); ++i) {
          if (node.rule == ThresholdRule::fixed_shift) {
            for (std::size_t j = 0; j < s.cols(); ++j) {
              if (s(i, j) > 0.0) d(i, j) = g(i, j);
            }
            continue;
          }
          // Projection Jacobian on the active set a: I - 1 1^T / |a|.
          double total = 0.0;
          std::size_t active = 0;
          for (std::size_t j = 0; j < s.cols(); ++j) {
            if (s(i, j) > 0.0) {
              total += g(i, j);
              ++active;
            }
          }
          if (active == 0) continue;
          const double mean = total / static_cast<double>(active);
          for (std::size_t j = 0; j < s.cols(); ++j) {
            if (s(i, j) > 0.0) d(i, j) = g(i, j) - mean;
          }
        }
        accumulate(grads[node.in0], d);
        break;
      }
      case OpKind::log_clamped: {
        const Matrix& x = nodes_[node.in0].value;
        Matrix d(x.rows(), x.cols());
        auto dv = d.values();
        auto xv = x.values();
        auto gv = g.values();
        for (std::size_t i = 0; i < dv.size(); ++i) {
          if (xv[i] > node.scalar) dv[i] = gv[i] / xv[i];
        }
        accumulate(grads[node.in0], d);
        break;
      }
      case OpKind::sum: {
        const Matrix& x = nodes_[node.in0].value;
        accumulate(grads[node.in0], Matrix(x.rows(), x.cols(), g(0, 0)));
        break;
      }
      case OpKind::weighted_sum:
        accumulate(grads[node.in0], angpn::scale(node.aux, g(0, 0)));
        break;
    }
  }

  std::vector<Matrix> out;
  out.reserve(params_.size());
  for (std::size_t id : params_) {
    if (grads[id].empty()) {
      out.emplace_back(nodes_[id].value.rows(), nodes_[id].value.cols());
    } else {
      out.push_back(std::move(grads[id]));
    }
  }
  return out;
}

double Tape::min_kink_margin() const {
  double best = std::numeric_limits<double>::infinity();
  for (const Node& node : nodes_) {
    if (node.kind == OpKind::relu) {
      for (double x : nodes_[node.in0].value.values()) best = std::min(best, std::abs(x));
    } else if (node.kind == OpKind::rowwise_threshold) {
      const Matrix& v = nodes_[node.in0].value;
      for (std::size_t i = 0; i < v.rows(); ++i) {
        for (std::size_t j = 0; j < v.cols(); ++j) {
          if (j != i) best = std::min(best, std::abs(v(i, j) + node.row_aux[i]));
        }
      }
    }
  }
  return best;
}

namespace {

Tape& tape_of(Var v) {
  if (v.tape() == nullptr) throw ContractError("Var: not attached to a tape");
  return *v.tape();
}

}  // namespace

Var matmul(Var a, Var b) { return tape_of(a).record_matmul(a, b); }
Var transpose(Var a) { return tape_of(a).record_transpose(a); }
Var add(Var a, Var b) { return tape_of(a).record_add(a, b); }
Var scale(Var a, double s) { return tape_of(a).record_scale(a, s); }
Var relu(Var a) { return tape_of(a).record_relu(a); }
Var rowwise_softmax(Var a) { return tape_of(a).record_softmax(a); }
Var row_affine(Var a, double s, Matrix offset, std::vector<double> divisor) {
  return tape_of(a).record_row_affine(a, s, std::move(offset), std::move(divisor));
}
Var rowwise_threshold(Var v, ThresholdRule rule, std::vector<double> eta) {
  return tape_of(v).record_threshold(v, rule, std::move(eta));
}
Var log_clamped(Var a, double floor) { return tape_of(a).record_log_clamped(a, floor); }
Var sum(Var a) { return tape_of(a).record_sum(a); }
Var weighted_sum(Var a, Matrix weights) { return tape_of(a).record_weighted_sum(a, std::move(weights)); }

}  // namespace angpn
