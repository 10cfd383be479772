#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace angpn {

/// Dense row-major matrix of doubles.
///
/// A default-constructed Matrix is empty (0x0) and only useful as a
/// placeholder; every sized constructor requires rows >= 1 and cols >= 1.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool same_shape(const Matrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Plain kernels. Every accumulation runs over the inner index in ascending
// order starting from 0.0, so results are reproducible bit for bit.

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix relu(const Matrix& a);
Matrix rowwise_softmax(const Matrix& a);

/// out(i,j) = (s * a(i,j) - offset(i,j)) / divisor[i]
Matrix row_affine(const Matrix& a, double s, const Matrix& offset,
                  std::span<const double> divisor);

double sum(const Matrix& a);
double frobenius_sq(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& a) noexcept;
/// Throws NumericError naming `what` when any entry is NaN or infinite.
void require_finite(const Matrix& a, const char* what);

/// Solves a * x = b by LU factorization with partial pivoting.
Matrix lu_solve(const Matrix& a, const Matrix& b);

}  // namespace angpn
