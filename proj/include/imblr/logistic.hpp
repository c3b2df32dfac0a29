#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "imblr/distributions.hpp"
#include "imblr/numerics/matrix.hpp"

namespace imblr {

// Majority points (label 0) and the minority sample (label 1), stored
// centered at the minority mean xbar. The log-loss depends on the features
// only through x - xbar.
class LogisticData {
 public:
  LogisticData(const Matrix& majority, MinoritySample minority);

  std::size_t majority_count() const noexcept { return majority_.rows(); }
  std::size_t minority_count() const noexcept { return minority_.size(); }
  std::size_t dim() const noexcept { return majority_.cols(); }
  const Vector& xbar() const noexcept { return minority_.mean(); }
  const MinoritySample& minority() const noexcept { return minority_; }

  const Matrix& centered_majority() const noexcept { return majority_; }
  const Matrix& centered_minority() const noexcept { return minority_centered_; }

 private:
  Matrix majority_;
  MinoritySample minority_;
  Matrix minority_centered_;
};

struct FitResult {
  double alpha = 0.0;
  Vector beta;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  std::size_t N = 0;
  std::size_t n = 0;
};

struct FitIterate {
  int iteration;
  double alpha;
  Vector beta;
  double loss;
  double grad_norm;
  Matrix hessian;
  int halvings;
};

struct FitOptions {
  double tol = 1e-10;
  int max_iter = 100;
  std::function<void(const FitIterate&)> observer;
};

/// n alpha - sum_j softplus(alpha + beta.(x_j - xbar))
///         - sum_i softplus(alpha + beta.(x_i - xbar))
double log_loss(const LogisticData& data, double alpha, std::span<const double> beta);

/// d/d(alpha, beta) of log_loss; element 0 is the alpha component.
Vector gradient(const LogisticData& data, double alpha, std::span<const double> beta);

/// Second derivatives in (alpha, beta), ordered like gradient(). Negative
/// semidefinite.
Matrix hessian(const LogisticData& data, double alpha, std::span<const double> beta);

/// Damped Newton ascent from alpha = log(n/N), beta = 0. Each step is
/// halved (at most 30 times) until the loss does not decrease.
///
/// Throws SeparationSuspected when ||beta|| exceeds 1e3, when the negated
/// Hessian fails Cholesky, or when the fitted information sum p(1-p)
/// collapses below 1e-8 n (the signature of separable classes). Throws
/// MaxIterations when max_iter is reached first.
FitResult fit(const LogisticData& data, const FitOptions& options = {});

}  // namespace imblr
