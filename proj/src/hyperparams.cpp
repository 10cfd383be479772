#include "angpn/hyperparams.hpp"

#include <cmath>

#include "angpn/errors.hpp"

namespace angpn {

void HyperParams::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ParameterError("alpha must lie in [0, 1), got " + std::to_string(alpha));
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ParameterError("beta must be >= 0, got " + std::to_string(beta));
  }
  if (mode.gamma_mode == GammaMode::global && (!(gamma > 0.0) || !std::isfinite(gamma))) {
    throw ParameterError("gamma must be > 0, got " + std::to_string(gamma));
  }
  if (k < 1) throw ParameterError("k must be >= 1");
  if (t_steps < 1) throw ParameterError("t_steps must be >= 1");
}

void HyperParams::validate_strict() const {
  validate();
  if (!(alpha > 0.0)) throw ParameterError("alpha must lie in (0, 1), got " + std::to_string(alpha));
}

std::string_view to_string(GraphSolver s) {
  return s == GraphSolver::paper_literal ? "paper-literal" : "exact-simplex";
}

std::string_view to_string(GammaMode m) {
  return m == GammaMode::global ? "global" : "per-row-k";
}

std::string_view to_string(GradMode m) {
  return m == GradMode::unrolled ? "unrolled" : "frozen-graph";
}

GraphSolver parse_graph_solver(std::string_view s) {
  if (s == "paper-literal") return GraphSolver::paper_literal;
  if (s == "exact-simplex") return GraphSolver::exact_simplex;
  throw ParameterError("unknown graph mode '" + std::string(s) + "'");
}

GammaMode parse_gamma_mode(std::string_view s) {
  if (s == "global") return GammaMode::global;
  if (s == "per-row-k") return GammaMode::per_row_k;
  throw ParameterError("unknown gamma mode '" + std::string(s) + "'");
}

GradMode parse_grad_mode(std::string_view s) {
  if (s == "unrolled") return GradMode::unrolled;
  if (s == "frozen-graph") return GradMode::frozen_graph;
  throw ParameterError("unknown grad mode '" + std::string(s) + "'");
}

}  // namespace angpn
