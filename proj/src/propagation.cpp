#include "angpn/propagation.hpp"

#include <cmath>

#include "angpn/errors.hpp"
#include "angpn/simplex.hpp"

namespace angpn {

namespace {

void require_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ParameterError("alpha must lie in [0, 1), got " + std::to_string(alpha));
  }
}

void require_features_for(const Matrix& a, const Matrix& h) {
  if (h.rows() != a.rows()) {
    throw ShapeError("features " + h.shape_string() + " for graph " + a.shape_string());
  }
}

// Cholesky solve of a symmetric system; fails if the matrix is not positive definite.
// For the F-step that means beta Tr(F^T (I - S) F) + mu |F - H|^2 is not convex in F
// (possible when S is far from symmetric and mu / beta is small), so it has no minimizer.
Matrix cholesky_solve(const Matrix& m, const Matrix& b) {
  const std::size_t n = m.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) throw NumericError("F-subproblem has no minimizer for this S (objective not convex in F; lower beta or alpha)");
    l(j, j) = std::sqrt(diag);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = m(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
      l(i, j) = v / l(j, j);
    }
  }
  Matrix x = b;
  for (std::size_t c = 0; c < x.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = x(i, c);
      for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * x(k, c);
      x(i, c) = v / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) v -= l(k, i) * x(k, c);
      x(i, c) = v / l(i, i);
    }
  }
  return x;
}

}  // namespace

void require_row_stochastic(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) throw GraphError("graph must be square, got " + a.shape_string());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      if (a(i, j) < 0.0) throw GraphError("negative affinity at row " + std::to_string(i));
      total += a(i, j);
    }
    if (a(i, i) != 0.0) throw GraphError("nonzero self-affinity at row " + std::to_string(i));
    if (std::abs(total - 1.0) > tol) {
      throw GraphError("row " + std::to_string(i) + " sums to " + std::to_string(total));
    }
  }
}

Matrix nfp_iterate(const Matrix& a, const Matrix& h, double alpha, std::size_t steps) {
  require_alpha(alpha);
  require_row_stochastic(a);
  require_features_for(a, h);
  const Matrix retained = scale(h, 1.0 - alpha);
  Matrix f = h;
  for (std::size_t t = 0; t < steps; ++t) f = add(scale(matmul(a, f), alpha), retained);
  return f;
}

Matrix nfp_closed_form(const Matrix& a, const Matrix& h, double alpha) {
  require_alpha(alpha);
  require_row_stochastic(a);
  require_features_for(a, h);
  const Matrix system = subtract(Matrix::identity(a.rows()), scale(a, alpha));
  return lu_solve(system, scale(h, 1.0 - alpha));
}

double anfp_objective(const Matrix& s, const Matrix& f, const DistanceMatrix& dist,
                      const Matrix& h, const HyperParams& p) {
  p.validate_strict();
  if (!s.same_shape(dist.d)) throw ShapeError("anfp_objective: S " + s.shape_string());
  if (!f.same_shape(h) || f.rows() != dist.n()) {
    throw ShapeError("anfp_objective: F " + f.shape_string() + ", H " + h.shape_string());
  }
  const auto gammas = row_gammas(dist, p);
  const std::size_t n = dist.n();

  double graph_term = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      graph_term += dist.d(i, j) * s(i, j);
      sq += s(i, j) * s(i, j);
    }
    graph_term += gammas[i] * sq;
  }

  // Tr(F^T (I - S) F) = |F|^2 - sum_i <F_i, (S F)_i>
  const Matrix sf = matmul(s, f);
  double smooth = frobenius_sq(f);
  auto fv = f.values();
  auto sfv = sf.values();
  for (std::size_t i = 0; i < fv.size(); ++i) smooth -= fv[i] * sfv[i];

  return graph_term + p.beta * smooth + p.mu() * frobenius_sq(subtract(f, h));
}

Propagation anfp_propagate(const DistanceMatrix& dist, const Matrix& h, const HyperParams& p) {
  const AffinityPlan plan = make_affinity_plan(dist, p);
  const double alpha = p.alpha;
  const Matrix retained = scale(h, 1.0 - alpha);
  Propagation out{h, {}};
  for (std::size_t t = 0; t < p.t_steps; ++t) {
    const Matrix v = affinity_logits(dist, out.f, p.beta, plan);
    out.graph.eta = plan.eta;
    out.graph.s = threshold_rows(v, plan.rule, out.graph.eta);
    out.f = add(scale(matmul(out.graph.s, h), alpha), retained);
  }
  return out;
}

ExactPropagation anfp_exact(const DistanceMatrix& dist, const Matrix& h, const HyperParams& p,
                            std::size_t sweeps, FStep f_step) {
  if (sweeps < 1) throw ParameterError("anfp_exact: sweeps must be >= 1");
  HyperParams exact = p;
  exact.mode.solver = GraphSolver::exact_simplex;
  exact.validate_strict();
  const std::size_t n = dist.n();
  const double mu = exact.mu();

  ExactPropagation out{h, {}, {}};
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    out.graph = s_step(dist, out.f, exact);
    out.trace.push_back(anfp_objective(out.graph.s, out.f, dist, h, exact));

    if (f_step == FStep::fixed_point) {
      out.f = nfp_closed_form(out.graph.s, h, exact.alpha);
    } else {
      Matrix system(n, n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          const double sym = 0.5 * (out.graph.s(i, j) + out.graph.s(j, i));
          system(i, j) = (i == j ? exact.beta + mu : 0.0) - exact.beta * sym;
        }
      }
      out.f = cholesky_solve(system, scale(h, mu));
    }
    out.trace.push_back(anfp_objective(out.graph.s, out.f, dist, h, exact));
  }
  return out;
}

}  // namespace angpn
