#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "angpn/matrix.hpp"

namespace angpn {

inline constexpr std::size_t kNoSkip = std::numeric_limits<std::size_t>::max();

struct SimplexProjection {
  std::vector<double> weights;
  // weights[j] = max(v[j] - threshold, 0)
  double threshold = 0.0;
};

/// Euclidean projection of v onto the probability simplex (sort and threshold).
SimplexProjection simplex_project(std::span<const double> v);

/// Projects v onto the simplex over every index except `skip`, writing the
/// result to out (out[skip] = 0). Returns the threshold.
///
/// The support is found by the descending sort with ties broken by index;
/// the threshold is then recomputed from the support summed in index order,
/// so any method that finds the same support reproduces it bit for bit.
double project_onto_simplex(std::span<const double> v, std::span<double> out,
                            std::size_t skip = kNoSkip);

enum class ThresholdRule {
  fixed_shift,  // out = max(v + eta_i, 0) with eta_i given
  unit_sum,     // eta_i solved so that each row sums to one
};

/// Row-wise threshold with the diagonal masked to zero. For fixed_shift,
/// `eta` supplies the per-row shift; for unit_sum it is overwritten with the
/// solved shift (eta_i = -threshold_i).
Matrix threshold_rows(const Matrix& v, ThresholdRule rule, std::vector<double>& eta);

}  // namespace angpn
