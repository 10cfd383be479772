#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace angpn {

enum class GraphSolver { paper_literal, exact_simplex };
enum class GammaMode { global, per_row_k };
enum class GradMode { unrolled, frozen_graph };

struct GraphMode {
  GraphSolver solver = GraphSolver::exact_simplex;
  GammaMode gamma_mode = GammaMode::global;

  friend bool operator==(const GraphMode&, const GraphMode&) = default;
};

/// Propagation and graph-learning hyperparameters.
///
/// alpha is the neighbor-information fraction; alpha = 0 disables propagation
/// and is accepted by the forward operations, while anything that needs the
/// fidelity weight mu = (1-alpha)/alpha requires alpha in (0, 1). gamma is
/// ignored in per_row_k gamma mode, where each row derives its own value from
/// its distances.
struct HyperParams {
  double alpha = 0.5;
  double beta = 0.3;
  double gamma = 1.0;
  std::size_t k = 10;
  std::size_t t_steps = 2;
  GraphMode mode{};
  GradMode grad_mode = GradMode::unrolled;

  double mu() const { return (1.0 - alpha) / alpha; }

  /// Throws ParameterError on any out-of-range field (alpha in [0, 1)).
  void validate() const;
  /// As validate(), but alpha must also be strictly positive.
  void validate_strict() const;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;
};

std::string_view to_string(GraphSolver s);
std::string_view to_string(GammaMode m);
std::string_view to_string(GradMode m);
GraphSolver parse_graph_solver(std::string_view s);
GammaMode parse_gamma_mode(std::string_view s);
GradMode parse_grad_mode(std::string_view s);

}  // namespace angpn
