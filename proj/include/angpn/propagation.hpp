#pragma once

#include <cstddef>
#include <vector>

#include "angpn/graphlearn.hpp"
#include "angpn/hyperparams.hpp"
#include "angpn/matrix.hpp"

namespace angpn {

/// Throws GraphError unless `a` is square, nonnegative, zero on the diagonal
/// and every row sums to 1 within `tol`.
void require_row_stochastic(const Matrix& a, double tol = 1e-6);

/// F(0) = H; F(t+1) = alpha A F(t) + (1 - alpha) H, `steps` times.
Matrix nfp_iterate(const Matrix& a, const Matrix& h, double alpha, std::size_t steps);

/// Equilibrium (1 - alpha)(I - alpha A)^{-1} H via an LU solve.
Matrix nfp_closed_form(const Matrix& a, const Matrix& h, double alpha);

/// Joint objective
///   sum D.S + sum_i gamma_i |S_i|^2 + beta Tr(F^T (I - S) F) + mu |F - H|^2.
double anfp_objective(const Matrix& s, const Matrix& f, const DistanceMatrix& dist,
                      const Matrix& h, const HyperParams& p);

struct Propagation {
  Matrix f;
  LearnedGraph graph;
};

/// Truncated alternation used inside a network layer: T rounds of an S-step
/// on the current F followed by F = alpha S H + (1 - alpha) H.
Propagation anfp_propagate(const DistanceMatrix& dist, const Matrix& h, const HyperParams& p);

enum class FStep {
  // Minimizer of the joint objective in F for fixed S:
  // (beta (I - (S + S^T)/2) + mu I) F = mu H.
  exact_minimizer,
  // (1 - alpha)(I - alpha S)^{-1} H. Coincides with exact_minimizer when
  // beta = 1 and S is symmetric.
  fixed_point,
};

struct ExactPropagation {
  Matrix f;
  LearnedGraph graph;
  std::vector<double> trace;  // objective after every half-step
};

/// Alternates the exact-simplex S-step with an exact F-step for `sweeps` rounds.
ExactPropagation anfp_exact(const DistanceMatrix& dist, const Matrix& h, const HyperParams& p,
                            std::size_t sweeps, FStep f_step = FStep::exact_minimizer);

}  // namespace angpn
