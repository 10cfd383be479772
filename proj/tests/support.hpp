#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "angpn/data.hpp"
#include "angpn/matrix.hpp"
#include "angpn/rng.hpp"

namespace testing {

inline angpn::Matrix random_matrix(angpn::Rng& rng, std::size_t r, std::size_t c,
                                   double lo = -1.0, double hi = 1.0) {
  angpn::Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

// Random nonnegative weights on a random sparsity pattern, zero diagonal,
// rows normalized to one.
inline angpn::Matrix random_row_stochastic(angpn::Rng& rng, std::size_t n) {
  angpn::Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || rng.uniform() < 0.4) continue;
      a(i, j) = rng.uniform(0.05, 1.0);
      total += a(i, j);
    }
    if (total == 0.0) {
      const std::size_t j = (i + 1) % n;
      a(i, j) = 1.0;
      total = 1.0;
    }
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= total;
  }
  return a;
}

// Deals the points of each class to train, validation and test in turn.
inline angpn::LabeledSplit alternating_split(const std::vector<std::size_t>& labels,
                                             std::size_t classes) {
  std::vector<std::size_t> train, val, test;
  std::vector<std::size_t> seen(classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t r = seen[labels[i]]++;
    (r % 3 == 0 ? train : r % 3 == 1 ? val : test).push_back(i);
  }
  return angpn::make_split(labels, classes, train, val, test);
}

// The F-step system (beta + mu) I - beta (S + S^T) / 2, built by hand.
inline angpn::Matrix f_step_system(const angpn::Matrix& s, double beta, double mu) {
  const std::size_t n = s.rows();
  angpn::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      m(i, j) = -beta * 0.5 * (s(i, j) + s(j, i));
    }
    m(i, i) += beta + mu;
  }
  return m;
}

// Unit vector with the smallest Rayleigh quotient that power iteration on
// (shift I - m) finds. A negative quotient certifies m is not semidefinite.
struct Curvature {
  double quotient = 0.0;
  std::vector<double> direction;
};
inline Curvature lowest_curvature(const angpn::Matrix& m, int iterations = 5000) {
  const std::size_t n = m.rows();
  double shift = 0.0;  // Gershgorin bound on the spectrum
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += std::abs(m(i, j));
    shift = std::max(shift, r);
  }
  std::vector<double> v(n), w(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i);
  Curvature best{INFINITY, v};
  for (int it = 0; it < iterations; ++it) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    double q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double mv = 0.0;
      for (std::size_t j = 0; j < n; ++j) mv += m(i, j) * v[j];
      q += v[i] * mv;
      w[i] = shift * v[i] - mv;
    }
    if (q < best.quotient) best = {q, v};
    v.swap(w);
  }
  return best;
}

}  // namespace testing
