#include "imblr/numerics/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "imblr/error.hpp"

namespace imblr {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::InvalidArgument, "ragged matrix initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (data.size() != rows * cols) {
    throw Error(ErrorCode::InvalidArgument, "matrix data size does not match shape");
  }
  Matrix m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  return m;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::InvalidArgument, "matrix product shape mismatch");
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

Vector multiply(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw Error(ErrorCode::InvalidArgument, "matrix-vector shape mismatch");
  }
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double max_abs(const Matrix& m) {
  double r = 0.0;
  for (double v : m.values()) r = std::max(r, std::abs(v));
  return r;
}

SpdMatrix::SpdMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() == 0) {
    throw Error(ErrorCode::InvalidArgument, "SPD matrix must be square and non-empty");
  }
  const double scale = max_abs(m_);
  for (std::size_t i = 0; i < m_.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double a = m_(i, j);
      const double b = m_(j, i);
      if (!std::isfinite(a) || !std::isfinite(b) || std::abs(a - b) > 1e-12 * scale) {
        std::ostringstream os;
        os << "matrix is not finite and symmetric at (" << i << "," << j << ")";
        throw Error(ErrorCode::InvalidArgument, os.str());
      }
    }
}

SpdMatrix SpdMatrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return SpdMatrix(std::move(m));
}

Matrix cholesky(const SpdMatrix& spd) {
  const Matrix& a = spd.matrix();
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= l(j, k) * l(j, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot)) {
      std::ostringstream os;
      os << "Cholesky pivot " << j << " is " << pivot << " (matrix not positive definite)";
      throw Error(ErrorCode::NotPositiveDefinite, os.str());
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Vector cholesky_solve(const Matrix& lower, std::span<const double> rhs) {
  const std::size_t n = lower.rows();
  if (rhs.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "right-hand side has wrong length");
  }
  Vector y(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= lower(i, k) * y[k];
    y[i] /= lower(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) y[i] -= lower(k, i) * y[k];
    y[i] /= lower(i, i);
  }
  return y;
}

Vector spd_solve(const SpdMatrix& m, std::span<const double> rhs) {
  return cholesky_solve(cholesky(m), rhs);
}

Matrix spd_solve(const SpdMatrix& m, const Matrix& rhs) {
  if (rhs.rows() != m.dim()) {
    throw Error(ErrorCode::InvalidArgument, "right-hand side has wrong row count");
  }
  const Matrix l = cholesky(m);
  Matrix x(rhs.rows(), rhs.cols());
  Vector column(rhs.rows());
  for (std::size_t j = 0; j < rhs.cols(); ++j) {
    for (std::size_t i = 0; i < rhs.rows(); ++i) column[i] = rhs(i, j);
    const Vector sol = cholesky_solve(l, column);
    for (std::size_t i = 0; i < rhs.rows(); ++i) x(i, j) = sol[i];
  }
  return x;
}

}  // namespace imblr
