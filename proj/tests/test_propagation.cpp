#include <cmath>
#include <numbers>

#include "angpn/data.hpp"
#include "angpn/errors.hpp"
#include "angpn/oracles.hpp"
#include "angpn/propagation.hpp"
#include "doctest.h"
#include "support.hpp"

using angpn::HyperParams;
using angpn::Matrix;

namespace {

const Matrix kSwap = Matrix::from_rows({{0, 1}, {1, 0}});
const Matrix kE1 = Matrix::from_rows({{1}, {0}});

HyperParams defaults(double alpha, double beta, double gamma, std::size_t t = 2) {
  HyperParams p;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma = gamma;
  p.k = 2;
  p.t_steps = t;
  return p;
}

// Sum over every index of the objective's terms, written without matrix kernels.
double objective_oracle(const Matrix& s, const Matrix& f, const Matrix& d, const Matrix& h,
                        const std::vector<double>& gamma, double beta, double mu) {
  const std::size_t n = s.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      total += d(i, j) * s(i, j) + gamma[i] * s(i, j) * s(i, j);
      for (std::size_t c = 0; c < f.cols(); ++c) {
        total += beta * f(i, c) * ((i == j ? 1.0 : 0.0) - s(i, j)) * f(j, c);
      }
    }
    for (std::size_t c = 0; c < f.cols(); ++c) total += mu * (f(i, c) - h(i, c)) * (f(i, c) - h(i, c));
  }
  return total;
}

}  // namespace

TEST_CASE("nfp iterate examples") {
  angpn::Rng rng(1);
  const Matrix a = testing::random_row_stochastic(rng, 6);
  const Matrix h = testing::random_matrix(rng, 6, 3);
  CHECK(angpn::nfp_iterate(a, h, 0.0, 7) == h);
  CHECK(angpn::nfp_iterate(a, h, 0.6, 0) == h);
  const Matrix ref = angpn::oracle::dense_fixed_point_oracle(kSwap, kE1, 0.5);
  const Matrix f = angpn::nfp_iterate(kSwap, kE1, 0.5, 50);
  CHECK(std::abs(ref(0, 0) - 2.0 / 3.0) <= 1e-15);
  CHECK(std::abs(f(0, 0) - 2.0 / 3.0) <= 1e-10);
  CHECK(std::abs(f(1, 0) - 1.0 / 3.0) <= 1e-10);
}

TEST_CASE("nfp closed form examples") {
  angpn::Rng rng(2);
  const Matrix h = testing::random_matrix(rng, 5, 2);
  const Matrix a = testing::random_row_stochastic(rng, 5);
  CHECK(angpn::max_abs_diff(angpn::nfp_closed_form(a, h, 0.0), h) == 0.0);
  const Matrix f = angpn::nfp_closed_form(kSwap, kE1, 0.5);
  CHECK(f(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(f(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.index(30);
    const Matrix g = testing::random_row_stochastic(rng, n);
    const Matrix hh = testing::random_matrix(rng, n, 3);
    const double alpha = rng.uniform(0.05, 0.95);
    const Matrix fs = angpn::nfp_closed_form(g, hh, alpha);
    const Matrix step = angpn::add(angpn::scale(angpn::matmul(g, fs), alpha), angpn::scale(hh, 1 - alpha));
    CHECK(angpn::max_abs_diff(fs, step) <= 1e-10);
    // (I - alpha A) F - (1 - alpha) H = 0 is the optimality condition for any row-stochastic A.
    const Matrix resid = angpn::subtract(angpn::subtract(fs, angpn::scale(angpn::matmul(g, fs), alpha)),
                                         angpn::scale(hh, 1 - alpha));
    CHECK(angpn::max_abs(resid) <= 1e-10);
  }
}

TEST_CASE("propagation input validation") {
  const Matrix h(2, 1, 1.0);
  CHECK_THROWS_AS(angpn::nfp_iterate(Matrix::from_rows({{0, 0.5}, {1, 0}}), h, 0.5, 3), angpn::GraphError);
  CHECK_THROWS_AS(angpn::nfp_iterate(Matrix::from_rows({{0.5, 0.5}, {1, 0}}), h, 0.5, 3), angpn::GraphError);
  CHECK_THROWS_AS(angpn::nfp_closed_form(kSwap, h, 1.0), angpn::ParameterError);
  CHECK_THROWS_AS(angpn::nfp_closed_form(kSwap, Matrix(3, 1), 0.5), angpn::ShapeError);
}

TEST_CASE("iterates contract geometrically in the max-abs norm") {
  angpn::Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(49);
    const Matrix a = testing::random_row_stochastic(rng, n);
    const Matrix h = testing::random_matrix(rng, n, 2);
    const double alpha = rng.uniform(0.1, 0.9);
    const Matrix star = angpn::nfp_closed_form(a, h, alpha);
    const double e0 = angpn::max_abs_diff(h, star);
    for (std::size_t t : {1u, 5u, 20u}) {
      const double et = angpn::max_abs_diff(angpn::nfp_iterate(a, h, alpha, t), star);
      CHECK(et <= std::pow(alpha, t) * e0 + 1e-12);
    }
  }
}

TEST_CASE("the Frobenius form of the contraction bound fails for a hub graph") {
  // Every node points at node 0, so A E copies row 0 of E into every row.
  const std::size_t n = 10;
  Matrix a(n, n);
  a(0, 1) = 1.0;
  for (std::size_t i = 1; i < n; ++i) a(i, 0) = 1.0;
  Matrix h(n, 1);
  h(0, 0) = 1.0;
  const double alpha = 0.9;
  const Matrix star = angpn::nfp_closed_form(a, h, alpha);
  const double e0 = std::sqrt(angpn::frobenius_sq(angpn::subtract(h, star)));
  const double e1 = std::sqrt(angpn::frobenius_sq(angpn::subtract(angpn::nfp_iterate(a, h, alpha, 1), star)));
  CHECK(e1 > alpha * e0);
}

TEST_CASE("on a symmetric graph the equilibrium zeroes the smoothness gradient") {
  // Ring graph: symmetric and row-stochastic.
  const std::size_t n = 8;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, (i + 1) % n) = 0.5;
    a(i, (i + n - 1) % n) = 0.5;
  }
  angpn::Rng rng(4);
  const Matrix h = testing::random_matrix(rng, n, 3);
  const double alpha = 0.4;
  const double mu = (1 - alpha) / alpha;
  const Matrix f = angpn::nfp_closed_form(a, h, alpha);
  const Matrix grad = angpn::add(angpn::scale(angpn::subtract(f, angpn::matmul(a, f)), 2.0),
                                 angpn::scale(angpn::subtract(f, h), 2.0 * mu));
  CHECK(angpn::max_abs(grad) <= 1e-10);
}

TEST_CASE("objective examples") {
  angpn::Rng rng(5);
  const Matrix x = testing::random_matrix(rng, 5, 2);
  const auto d = angpn::pairwise_euclidean(x);
  const Matrix h = testing::random_matrix(rng, 5, 3);
  const HyperParams p = defaults(0.5, 0.3, 1.2);
  CHECK(angpn::anfp_objective(Matrix(5, 5), h, d, h, p) ==
        doctest::Approx(0.3 * angpn::frobenius_sq(h)).epsilon(1e-14));

  const Matrix s = angpn::s_step(d, h, p).s;
  double graph_term = 0.0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) graph_term += d.d(i, j) * s(i, j) + 1.2 * s(i, j) * s(i, j);
  }
  CHECK(angpn::anfp_objective(s, h, d, h, defaults(0.5, 0.0, 1.2)) == doctest::Approx(graph_term).epsilon(1e-14));

  for (int trial = 0; trial < 10; ++trial) {
    const Matrix f = testing::random_matrix(rng, 5, 3);
    HyperParams q = defaults(rng.uniform(0.1, 0.9), rng.uniform(0, 2), rng.uniform(0.1, 2));
    if (trial % 2) q.mode.gamma_mode = angpn::GammaMode::per_row_k;
    const Matrix sq = angpn::s_step(d, f, q).s;
    const double ref = objective_oracle(sq, f, d.d, h, angpn::row_gammas(d, q), q.beta, q.mu());
    CHECK(std::abs(angpn::anfp_objective(sq, f, d, h, q) - ref) <= 1e-10 * std::max(1.0, std::abs(ref)));
  }
  HyperParams zero = p;
  zero.alpha = 0.0;
  CHECK_THROWS_AS(angpn::anfp_objective(s, h, d, h, zero), angpn::ParameterError);
}

TEST_CASE("propagation layer examples") {
  angpn::Rng rng(6);
  const auto d = angpn::pairwise_euclidean(testing::random_matrix(rng, 7, 2));
  const Matrix h = testing::random_matrix(rng, 7, 3);
  CHECK(angpn::anfp_propagate(d, h, defaults(0.0, 0.3, 1.0, 3)).f == h);

  const auto one = angpn::anfp_propagate(d, h, defaults(0.5, 0.0, 1.0, 1));
  const auto five = angpn::anfp_propagate(d, h, defaults(0.5, 0.0, 1.0, 5));
  CHECK(one.f == five.f);
  CHECK(one.graph.s == five.graph.s);
}

TEST_CASE("propagation layer equals the step-by-step re-execution on a blob instance") {
  const Matrix centers = Matrix::from_rows({{0, 0, 0}, {3, 3, 3}});
  const auto ds = angpn::gen_blobs(3, centers, 1.0, 17);
  Matrix x(5, 3);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t c = 0; c < 3; ++c) x(i, c) = ds.features(i, c);
  }
  const auto d = angpn::pairwise_euclidean(x);
  for (auto solver : {angpn::GraphSolver::exact_simplex, angpn::GraphSolver::paper_literal}) {
    HyperParams p = defaults(0.5, 0.3, 2.0, 2);
    p.mode.solver = solver;
    const auto fast = angpn::anfp_propagate(d, x, p);
    const auto ref = angpn::oracle::algorithm1_oracle(x, x, p);
    CHECK(fast.f == ref.f);
    CHECK(fast.graph.s == ref.s);
  }
}

TEST_CASE("exact alternation decreases the objective") {
  angpn::Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 4 + rng.index(8);
    const auto d = angpn::pairwise_euclidean(testing::random_matrix(rng, n, 2));
    const Matrix h = testing::random_matrix(rng, n, 3);
    HyperParams p = defaults(rng.uniform(0.2, 0.8), rng.uniform(0.05, 1.0), rng.uniform(0.5, 3.0));
    if (trial % 2) p.mode.gamma_mode = angpn::GammaMode::per_row_k;
    const auto run = angpn::anfp_exact(d, h, p, 10);
    REQUIRE(run.trace.size() == 20);
    for (std::size_t i = 1; i < run.trace.size(); ++i) CHECK(run.trace[i] <= run.trace[i - 1] + 1e-10);
  }
}

TEST_CASE("exact alternation with zero beta settles after one sweep") {
  angpn::Rng rng(8);
  const auto d = angpn::pairwise_euclidean(testing::random_matrix(rng, 6, 2));
  const Matrix h = testing::random_matrix(rng, 6, 2);
  const auto one = angpn::anfp_exact(d, h, defaults(0.5, 0.0, 1.0), 1);
  const auto many = angpn::anfp_exact(d, h, defaults(0.5, 0.0, 1.0), 4);
  CHECK(angpn::max_abs_diff(one.f, many.f) == 0.0);
  for (std::size_t i = 2; i < many.trace.size(); ++i) CHECK(many.trace[i] == many.trace[1]);
}

TEST_CASE("exact alternation ends no worse than the truncated layer") {
  angpn::Rng rng(9);
  const auto d = angpn::pairwise_euclidean(testing::random_matrix(rng, 6, 2));
  const Matrix h = testing::random_matrix(rng, 6, 3);
  const HyperParams p = defaults(0.5, 0.3, 1.5);
  const auto exact = angpn::anfp_exact(d, h, p, 10);
  const auto approx = angpn::anfp_propagate(d, h, p);
  CHECK(exact.trace.back() <= angpn::anfp_objective(approx.graph.s, approx.f, d, h, p) + 1e-12);
}

TEST_CASE("both F-steps agree on a symmetric instance with unit beta") {
  // A regular hexagon with H = X gives circulant distances and Gram matrix,
  // so the learned graph is symmetric.
  Matrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) {
    const double t = std::numbers::pi * static_cast<double>(i) / 3.0;
    x(i, 0) = std::cos(t);
    x(i, 1) = std::sin(t);
  }
  const auto d = angpn::pairwise_euclidean(x);
  const HyperParams p = defaults(0.5, 1.0, 0.8);
  const auto exact = angpn::anfp_exact(d, x, p, 1, angpn::FStep::exact_minimizer);
  const auto fixed = angpn::anfp_exact(d, x, p, 1, angpn::FStep::fixed_point);
  CHECK(angpn::max_abs_diff(exact.graph.s, angpn::transpose(exact.graph.s)) <= 1e-12);
  CHECK(angpn::max_abs_diff(exact.f, fixed.f) <= 1e-10);
}

TEST_CASE("exact alternation refuses an F-step with no minimizer") {
  // A star: every outer point's nearest neighbor is the center, so S has one
  // heavy column and beta Tr(F^T (I - S) F) is far from convex.
  const std::size_t n = 6;
  Matrix x(n, 2);
  for (std::size_t i = 1; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    x(i, 0) = std::cos(a);
    x(i, 1) = std::sin(a);
  }
  const auto d = angpn::pairwise_euclidean(x);
  HyperParams p = defaults(0.9, 1.0, 0.05);
  const Matrix h(n, 1);
  const auto s = angpn::s_step(d, h, p).s;
  const auto dir = testing::lowest_curvature(testing::f_step_system(s, p.beta, p.mu()));
  REQUIRE(dir.quotient < 0.0);
  CHECK_THROWS_AS(angpn::anfp_exact(d, h, p, 1), angpn::NumericError);
  // Milder smoothing weight makes the same geometry well posed.
  p.beta = 0.05;
  CHECK(testing::lowest_curvature(testing::f_step_system(s, p.beta, p.mu())).quotient > 0.0);
  CHECK_NOTHROW(angpn::anfp_exact(d, h, p, 1));
}
