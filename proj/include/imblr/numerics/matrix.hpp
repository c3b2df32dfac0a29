#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace imblr {

using Vector = std::vector<double>;

// Dense row-major matrix. Also used as a point set: one point per row.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);
Matrix multiply(const Matrix& a, const Matrix& b);
Vector multiply(const Matrix& a, std::span<const double> x);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(const Matrix& m);

// Symmetric matrix intended for Cholesky-based operations. Construction
// checks squareness and symmetry (1e-12 relative to the largest entry);
// positive definiteness is only established by cholesky().
class SpdMatrix {
 public:
  SpdMatrix() = default;
  explicit SpdMatrix(Matrix m);
  SpdMatrix(std::initializer_list<std::initializer_list<double>> rows)
      : SpdMatrix(Matrix(rows)) {}

  static SpdMatrix diagonal(std::span<const double> diag);
  static SpdMatrix scalar(double value) { return SpdMatrix(Matrix{{value}}); }

  std::size_t dim() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }

 private:
  Matrix m_;
};

// Lower-triangular L with L * L^T = m. Throws NotPositiveDefinite when a
// pivot is not strictly positive.
Matrix cholesky(const SpdMatrix& m);

// Solves L L^T x = rhs given the factor from cholesky().
Vector cholesky_solve(const Matrix& lower, std::span<const double> rhs);

Vector spd_solve(const SpdMatrix& m, std::span<const double> rhs);

// m^{-1} B for every column of B.
Matrix spd_solve(const SpdMatrix& m, const Matrix& rhs);

}  // namespace imblr
