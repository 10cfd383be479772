#include "angpn/graphlearn.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "angpn/errors.hpp"
#include "angpn/io.hpp"

namespace angpn {

DistanceMatrix pairwise_euclidean(const Matrix& x) {
  if (x.rows() < 2) throw ParameterError("pairwise_euclidean: need at least two points");
  if (!all_finite(x)) throw DataError("pairwise_euclidean: non-finite feature entries");
  const std::size_t n = x.rows();
  DistanceMatrix dist{Matrix(n, n), {}};
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      auto xj = x.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < xi.size(); ++c) {
        const double diff = xi[c] - xj[c];
        acc += diff * diff;
      }
      dist.d(i, j) = dist.d(j, i) = std::sqrt(acc);
    }
  }
  dist.order.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& ord = dist.order[i];
    ord.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) ord.push_back(j);
    }
    std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) {
      return dist.d(i, a) < dist.d(i, b) || (dist.d(i, a) == dist.d(i, b) && a < b);
    });
  }
  return dist;
}

double eta_k_support(const DistanceMatrix& dist, std::size_t i, std::size_t k, double gamma) {
  if (k < 1 || k + 1 > dist.n()) {
    throw ParameterError("eta_k_support: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(dist.n() - 1) + "]");
  }
  if (!(gamma > 0.0)) throw ParameterError("eta_k_support: gamma must be > 0");
  double near = 0.0;
  for (std::size_t r = 0; r < k; ++r) near += dist.d(i, dist.order[i][r]);
  const double kk = static_cast<double>(k);
  return 1.0 / kk + near / (2.0 * kk * gamma);
}

namespace {

double per_row_k_gamma(const DistanceMatrix& dist, std::size_t i, std::size_t k) {
  const auto& ord = dist.order[i];
  double near = 0.0;
  for (std::size_t r = 0; r < k; ++r) near += dist.d(i, ord[r]);
  const double next = dist.d(i, ord[k]);
  const double g = (static_cast<double>(k) * next - near) / 2.0;
  // Ties among the k+1 nearest make the formula vanish; keep gamma positive.
  const double floor = 1e-12 * (1.0 + next);
  return std::max(g, floor);
}

}  // namespace

std::vector<double> row_gammas(const DistanceMatrix& dist, const HyperParams& p) {
  const std::size_t n = dist.n();
  if (p.mode.gamma_mode == GammaMode::global) return std::vector<double>(n, p.gamma);
  if (p.k < 1 || p.k + 2 > n) {
    throw ParameterError("per-row-k gamma needs 1 <= k <= n-2, got k=" + std::to_string(p.k) +
                         " for n=" + std::to_string(n));
  }
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = per_row_k_gamma(dist, i, p.k);
  return g;
}

double auto_gamma(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.n();
  if (k < 1 || k + 2 > n) {
    throw ParameterError("auto gamma needs 1 <= k <= n-2, got k=" + std::to_string(k));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += per_row_k_gamma(dist, i, k);
  return total / static_cast<double>(n);
}

AffinityPlan make_affinity_plan(const DistanceMatrix& dist, const HyperParams& p) {
  p.validate();
  const auto gammas = row_gammas(dist, p);
  AffinityPlan plan;
  plan.divisor.resize(gammas.size());
  for (std::size_t i = 0; i < gammas.size(); ++i) plan.divisor[i] = 2.0 * gammas[i];
  if (p.mode.solver == GraphSolver::paper_literal) {
    plan.rule = ThresholdRule::fixed_shift;
    plan.eta.resize(gammas.size());
    for (std::size_t i = 0; i < gammas.size(); ++i) plan.eta[i] = eta_k_support(dist, i, p.k, gammas[i]);
  } else {
    plan.rule = ThresholdRule::unit_sum;
  }
  return plan;
}

Matrix affinity_logits(const DistanceMatrix& dist, const Matrix& f, double beta,
                       const AffinityPlan& plan) {
  if (f.rows() != dist.n()) {
    throw ShapeError("affinity_logits: features " + f.shape_string() + " for " +
                     std::to_string(dist.n()) + " points");
  }
  if (!all_finite(f)) throw DataError("affinity_logits: non-finite feature entries");
  // With beta = 0 the Gram term vanishes; a zero matrix gives the same bits.
  const Matrix gram = beta == 0.0 ? Matrix(dist.n(), dist.n()) : matmul(f, transpose(f));
  return row_affine(gram, beta, dist.d, plan.divisor);
}

SparseRowSolution LearnedGraph::row(std::size_t i) const {
  SparseRowSolution sol;
  auto r = s.row(i);
  sol.weights.assign(r.begin(), r.end());
  sol.eta = eta.at(i);
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (r[j] > 0.0) sol.support.push_back(j);
  }
  return sol;
}

LearnedGraph s_step(const DistanceMatrix& dist, const Matrix& f, const HyperParams& p) {
  const AffinityPlan plan = make_affinity_plan(dist, p);
  const Matrix v = affinity_logits(dist, f, p.beta, plan);
  LearnedGraph g;
  g.eta = plan.eta;
  g.s = threshold_rows(v, plan.rule, g.eta);
  return g;
}

Matrix knn_graph(const DistanceMatrix& dist, std::size_t k) {
  const std::size_t n = dist.n();
  if (k < 1 || k + 1 > n) {
    throw ParameterError("knn_graph: k=" + std::to_string(k) + " outside [1, " +
                         std::to_string(n - 1) + "]");
  }
  Matrix a(n, n);
  const double w = 1.0 / static_cast<double>(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < k; ++r) a(i, dist.order[i][r]) = w;
  }
  return a;
}

void write_affinity_csv(std::ostream& os, const Matrix& s) { write_matrix_csv(os, s); }

void write_edge_list(std::ostream& os, const Matrix& s) {
  for (std::size_t i = 0; i < s.rows(); ++i) {
    for (std::size_t j = 0; j < s.cols(); ++j) {
      if (s(i, j) != 0.0) os << i << ',' << j << ',' << format_double(s(i, j)) << '\n';
    }
  }
}

}  // namespace angpn
