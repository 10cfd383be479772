#include "angpn/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "angpn/errors.hpp"

namespace angpn {

double project_onto_simplex(std::span<const double> v, std::span<double> out,
                            std::size_t skip) {
  if (out.size() != v.size()) throw ShapeError("project_onto_simplex: output length differs");
  std::vector<std::size_t> idx;
  idx.reserve(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (j != skip) idx.push_back(j);
  }
  if (idx.empty()) throw ShapeError("project_onto_simplex: nothing to project");

  const auto before = [&](std::size_t a, std::size_t b) {
    return v[a] > v[b] || (v[a] == v[b] && a < b);
  };
  // Only a sorted prefix is needed: the support is a leading run of the sorted
  // values, so sort 32 candidates and double until the margin test fails.
  const auto sort_prefix = [&](std::size_t from, std::size_t to) {
    const auto first = idx.begin() + static_cast<std::ptrdiff_t>(from);
    const auto last = idx.begin() + static_cast<std::ptrdiff_t>(to);
    if (to < idx.size()) std::nth_element(first, last, idx.end(), before);
    std::sort(first, last, before);
  };
  std::size_t sorted = std::min<std::size_t>(32, idx.size());
  sort_prefix(0, sorted);

  // Entries whose margin above the running threshold is at rounding level are
  // left out of the support, so exact-zero weights stay exactly zero.
  const double tol = 64.0 * std::numeric_limits<double>::epsilon() *
                     std::max(1.0, std::abs(v[idx.front()]));
  double running = 0.0;
  std::size_t support = 1;
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (r == sorted) {
      const std::size_t grow = std::min(2 * sorted, idx.size());
      sort_prefix(sorted, grow);
      sorted = grow;
    }
    running += v[idx[r]];
    const double margin = v[idx[r]] - (running - 1.0) / static_cast<double>(r + 1);
    if (margin > tol) {
      support = r + 1;
    } else if (r + 1 == sorted) {
      break;
    }
  }

  std::vector<std::size_t> active(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(support));
  std::sort(active.begin(), active.end());
  double total = 0.0;
  for (std::size_t j : active) total += v[j];
  const double threshold = (total - 1.0) / static_cast<double>(active.size());

  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t j : active) out[j] = std::max(v[j] - threshold, 0.0);
  return threshold;
}

SimplexProjection simplex_project(std::span<const double> v) {
  SimplexProjection p;
  p.weights.assign(v.size(), 0.0);
  p.threshold = project_onto_simplex(v, p.weights);
  return p;
}

Matrix threshold_rows(const Matrix& v, ThresholdRule rule, std::vector<double>& eta) {
  if (v.rows() != v.cols()) throw ShapeError("threshold_rows: expects square, got " + v.shape_string());
  if (v.rows() < 2) throw ShapeError("threshold_rows: needs at least two rows");
  const std::size_t n = v.rows();
  Matrix s(n, n);
  if (rule == ThresholdRule::fixed_shift) {
    if (eta.size() != n) throw ShapeError("threshold_rows: shift length differs from row count");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double x = v(i, j) + eta[i];
        s(i, j) = x > 0.0 ? x : 0.0;
      }
    }
  } else {
    eta.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eta[i] = -project_onto_simplex(v.row(i), s.row(i), i);
  }
  return s;
}

}  // namespace angpn
