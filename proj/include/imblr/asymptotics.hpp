#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "imblr/distributions.hpp"
#include "imblr/numerics/matrix.hpp"

namespace imblr {

// Limit of the slope as the majority class grows without bound, plus the
// ingredients of its sqrt(N) asymptotic covariance Sigma = H^{-1} V H^{-T}.
struct LimitInference {
  Vector beta_star;
  SpdMatrix H;
  SpdMatrix V;
  SpdMatrix Sigma;
  Matrix chol_A;  // lower-triangular, chol_A chol_A^T = Sigma
  Vector xbar;
};

struct ConfidenceInterval {
  double level = 0.0;
  std::size_t N = 0;
  Vector lower;
  Vector upper;

  bool contains(std::span<const double> beta) const;
};

struct BetaStarOptions {
  double tol = 1e-10;
  int max_iter = 100;
  MomentPath path = MomentPath::automatic;
};

/// Root of tilted_mean(beta) = xbar by damped Newton from beta = 0. The
/// Jacobian is the tilted covariance; the step is halved until the convex
/// objective log m0(beta) - beta . xbar decreases.
///
/// Throws NoInteriorSolution when ||beta|| exceeds 1e3 or xbar is outside
/// the range an empirical model can tilt to; InvalidModel for degenerate
/// empirical models; MomentOverflow propagates.
Vector solve_beta_star(const MajorityModel& model, std::span<const double> xbar,
                       const BetaStarOptions& options = {});

/// cov^{-1} (xbar - mu).
Vector gaussian_beta_star(std::span<const double> mu, const SpdMatrix& cov,
                          std::span<const double> xbar);

/// H and V from the k = 1 and k = 2 tilted moments centered at xbar, Sigma by
/// two SPD solves. Throws DegenerateHessian when H fails Cholesky.
LimitInference compute_covariance(const MajorityModel& model, std::span<const double> xbar,
                                  std::span<const double> beta_star,
                                  MomentPath path = MomentPath::automatic);

/// solve_beta_star followed by compute_covariance.
LimitInference limit_inference(const MajorityModel& model, std::span<const double> xbar,
                               const BetaStarOptions& options = {});

/// Closed form for a N(mu, sigma^2) majority:
/// exp((xbar - mu)^2 / sigma^2) ((xbar - mu)^2 + sigma^2) / sigma^4.
double sigma_1d_gaussian(double xbar, double mu, double sigma);

/// Var(dg/dbeta) / E[d^2 g/dbeta^2]^2 with g(x; beta) = exp(beta (x - xbar)),
/// evaluated directly against the model (Gauss-Hermite for Gaussian models,
/// sums for empirical ones, adaptive Simpson for densities). One-dimensional
/// models only; used to cross-check compute_covariance.
double sandwich_variance_1d(const MajorityModel& model, double xbar, double beta);

/// beta*_k +/- ||row k of A|| z_{theta/2} / sqrt(N), coordinatewise.
ConfidenceInterval confidence_interval(const LimitInference& inference, std::size_t N, double theta);

struct SampleSizePlan {
  std::int64_t n = 0;     // saturated at INT64_MAX when overflow is set
  double exact = 0.0;     // e^{2 z^2} / epsilon^2 before rounding up
  bool overflow = false;
};

/// ceil(exp(2 (xbar - mu)^2 / sigma^2) / epsilon^2).
SampleSizePlan plan_sample_size(double xbar, double mu, double sigma, double epsilon);

}  // namespace imblr
