#include "angpn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "angpn/errors.hpp"

namespace angpn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("matrix dimensions must be positive, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  data_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw ShapeError("matrix dimensions must be positive, got " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + shape_string() + " given " + std::to_string(data_.size()) +
                     " values");
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> values;
  values.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("from_rows: ragged initializer");
    values.insert(values.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(values));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + a.shape_string() + " x " +
                     b.shape_string());
  }
  const std::size_t n = a.rows();
  const std::size_t m = a.cols();
  const std::size_t p = b.cols();
  Matrix c(n, p);
  // Zero entries of a only add signed zeros to sums that start at +0, so they
  // can be skipped without changing any bit, as long as b holds no inf/NaN.
  const bool skip_zeros = all_finite(b);
  // i-k-j order; each c(i,j) still accumulates over k ascending from 0.
  for (std::size_t i = 0; i < n; ++i) {
    double* out = c.row(i).data();
    const double* arow = a.row(i).data();
    for (std::size_t k = 0; k < m; ++k) {
      const double aik = arow[k];
      if (aik == 0.0 && skip_zeros) continue;
      const double* brow = b.row(k).data();
      for (std::size_t j = 0; j < p; ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix c = a;
  auto out = c.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += rhs[i];
  return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix c = a;
  auto out = c.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= rhs[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (double& v : c.values()) v *= s;
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix c = a;
  auto out = c.values();
  auto rhs = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= rhs[i];
  return c;
}

Matrix relu(const Matrix& a) {
  Matrix c = a;
  for (double& v : c.values()) v = v > 0.0 ? v : 0.0;
  return c;
}

Matrix rowwise_softmax(const Matrix& a) {
  Matrix z(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto in = a.row(i);
    auto out = z.row(i);
    const double shift = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - shift);
      total += out[j];
    }
    for (double& v : out) v /= total;
  }
  return z;
}

Matrix row_affine(const Matrix& a, double s, const Matrix& offset,
                  std::span<const double> divisor) {
  require_same_shape(a, offset, "row_affine");
  if (divisor.size() != a.rows()) {
    throw ShapeError("row_affine: divisor length " + std::to_string(divisor.size()) +
                     " for " + a.shape_string());
  }
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out(i, j) = (s * a(i, j) - offset(i, j)) / divisor[i];
    }
  }
  return out;
}

double sum(const Matrix& a) {
  double total = 0.0;
  for (double v : a.values()) total += v;
  return total;
}

double frobenius_sq(const Matrix& a) {
  double total = 0.0;
  for (double v : a.values()) total += v * v;
  return total;
}

double max_abs(const Matrix& a) {
  double best = 0.0;
  for (double v : a.values()) best = std::max(best, std::abs(v));
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double best = 0.0;
  auto x = a.values();
  auto y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) best = std::max(best, std::abs(x[i] - y[i]));
  return best;
}

bool all_finite(const Matrix& a) noexcept {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

void require_finite(const Matrix& a, const char* what) {
  if (!all_finite(a)) throw NumericError(std::string(what) + ": non-finite entries");
}

Matrix lu_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw ShapeError("lu_solve: matrix not square, " + a.shape_string());
  if (b.rows() != a.rows()) {
    throw ShapeError("lu_solve: rhs " + b.shape_string() + " for system " + a.shape_string());
  }
  const std::size_t n = a.rows();
  Matrix lu = a;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  const double scale_ref = std::max(max_abs(a), std::numeric_limits<double>::min());
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(lu(r, col)) > std::abs(lu(pivot, col))) pivot = r;
    }
    if (std::abs(lu(pivot, col)) <= scale_ref * 1e-14) {
      throw NumericError("lu_solve: singular system at column " + std::to_string(col));
    }
    if (pivot != col) {
      std::swap_ranges(lu.row(col).begin(), lu.row(col).end(), lu.row(pivot).begin());
      std::swap(perm[col], perm[pivot]);
    }
    const double diag = lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double factor = lu(r, col) / diag;
      lu(r, col) = factor;
      if (factor == 0.0) continue;
      for (std::size_t c = col + 1; c < n; ++c) lu(r, c) -= factor * lu(col, c);
    }
  }

  Matrix x(n, b.cols());
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(b.row(perm[i]).begin(), b.row(perm[i]).end(), x.row(i).begin());
  }
  // Forward substitution with the unit lower factor, then back substitution.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      const double l = lu(i, k);
      if (l == 0.0) continue;
      for (std::size_t c = 0; c < x.cols(); ++c) x(i, c) -= l * x(k, c);
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double u = lu(ii, k);
      for (std::size_t c = 0; c < x.cols(); ++c) x(ii, c) -= u * x(k, c);
    }
    const double diag = lu(ii, ii);
    for (std::size_t c = 0; c < x.cols(); ++c) x(ii, c) /= diag;
  }
  require_finite(x, "lu_solve");
  return x;
}

}  // namespace angpn
