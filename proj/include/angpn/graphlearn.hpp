#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "angpn/hyperparams.hpp"
#include "angpn/matrix.hpp"
#include "angpn/simplex.hpp"

namespace angpn {

/// Pairwise Euclidean distances plus, per row, the off-diagonal column
/// indices sorted by ascending distance (ties by ascending index).
struct DistanceMatrix {
  Matrix d;
  std::vector<std::vector<std::size_t>> order;

  std::size_t n() const noexcept { return d.rows(); }
};

DistanceMatrix pairwise_euclidean(const Matrix& x);

/// Threshold of the k-support closed form for row i:
/// 1/k + (sum of the k smallest off-diagonal distances) / (2 k gamma).
double eta_k_support(const DistanceMatrix& dist, std::size_t i, std::size_t k, double gamma);

/// Per-row regularization weights. In per_row_k mode each row gets
/// (k d_(k+1) - sum_{j<=k} d_(j)) / 2, which makes the zero-beta solution
/// supported on exactly the k nearest neighbors.
std::vector<double> row_gammas(const DistanceMatrix& dist, const HyperParams& p);

/// Mean of the per-row-k gammas; a data-scaled default for the global gamma.
double auto_gamma(const DistanceMatrix& dist, std::size_t k);

/// Everything about a graph-learning step that depends only on distances and
/// hyperparameters, not on the features being propagated.
struct AffinityPlan {
  ThresholdRule rule = ThresholdRule::unit_sum;
  std::vector<double> divisor;  // 2 * gamma_i
  std::vector<double> eta;      // fixed shifts; used by the paper-literal rule
};

AffinityPlan make_affinity_plan(const DistanceMatrix& dist, const HyperParams& p);

/// Affinity logits V(i,j) = -(D - beta F F^T)(i,j) / (2 gamma_i).
Matrix affinity_logits(const DistanceMatrix& dist, const Matrix& f, double beta,
                       const AffinityPlan& plan);

struct SparseRowSolution {
  std::vector<double> weights;
  double eta = 0.0;
  std::vector<std::size_t> support;
};

struct LearnedGraph {
  Matrix s;
  std::vector<double> eta;

  SparseRowSolution row(std::size_t i) const;
};

/// Solves the per-row adaptive-graph subproblem for features f.
LearnedGraph s_step(const DistanceMatrix& dist, const Matrix& f, const HyperParams& p);

/// Row-normalized k-nearest-neighbor graph (binary adjacency divided by degree).
Matrix knn_graph(const DistanceMatrix& dist, std::size_t k);

/// n header-less rows of n comma-separated decimals.
void write_affinity_csv(std::ostream& os, const Matrix& s);
/// One "i,j,weight" line per nonzero entry, row-major order.
void write_edge_list(std::ostream& os, const Matrix& s);

}  // namespace angpn
