#include "imblr/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "imblr/error.hpp"
#include "imblr/numerics/normal.hpp"
#include "imblr/numerics/quadrature.hpp"

namespace imblr {

namespace {

constexpr double kDivergenceNorm = 1e3;
constexpr int kMaxHalvings = 30;

Matrix symmetrized(const Matrix& m) {
  Matrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

// E[e^{k beta.x} (x - xbar)(x - xbar)^T] from the raw tilted moments.
Matrix centered_second_moment(const TiltedMoments& t, std::span<const double> xbar) {
  const std::size_t d = xbar.size();
  Matrix c(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      c(i, j) = t.m2(i, j) - t.m1[i] * xbar[j] - xbar[i] * t.m1[j] + t.m0 * xbar[i] * xbar[j];
    }
  return symmetrized(c);
}

void require_xbar(const MajorityModel& model, std::span<const double> xbar) {
  if (xbar.size() != model.dim()) {
    std::ostringstream os;
    os << "xbar has dimension " << xbar.size() << " but the model has dimension " << model.dim();
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  for (double v : xbar) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "xbar must be finite");
  }
}

// An empirical model can only tilt its mean to the interior of its range.
void require_tiltable(const MajorityModel& model, std::span<const double> xbar) {
  const auto* e = model.empirical_part();
  if (e == nullptr || model.dim() != 1) return;
  const auto values = e->points.values();
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (!(xbar[0] > *lo && xbar[0] < *hi)) {
    std::ostringstream os;
    os << "xbar = " << xbar[0] << " is outside the open range (" << *lo << ", " << *hi
       << ") of the empirical model; no finite tilt matches it";
    throw Error(ErrorCode::NoInteriorSolution, os.str());
  }
}

double tilt_objective(const TiltedMoments& t, std::span<const double> beta,
                      std::span<const double> xbar) {
  return std::log(t.m0) - dot(beta, xbar);
}

}  // namespace

bool ConfidenceInterval::contains(std::span<const double> beta) const {
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (!(beta[i] >= lower[i] && beta[i] <= upper[i])) return false;
  }
  return true;
}

Vector solve_beta_star(const MajorityModel& model, std::span<const double> xbar,
                       const BetaStarOptions& options) {
  require_xbar(model, xbar);
  model.require_nondegenerate();
  require_tiltable(model, xbar);
  const std::size_t d = model.dim();

  Vector beta(d, 0.0);
  TiltedMoments t = tilted_moments(model, beta, 1, options.path);
  Vector trial(d);
  for (int it = 0;; ++it) {
    const Vector mean = t.tilted_mean();
    Vector residual(d);
    for (std::size_t i = 0; i < d; ++i) residual[i] = mean[i] - xbar[i];
    const double rnorm = norm2(residual);
    if (rnorm < options.tol) return beta;
    if (it >= options.max_iter) {
      std::ostringstream os;
      os << "tilted-mean equation did not converge in " << options.max_iter
         << " iterations (residual " << rnorm << ")";
      throw Error(ErrorCode::NoInteriorSolution, os.str());
    }

    Vector step;
    try {
      step = spd_solve(SpdMatrix(symmetrized(t.tilted_covariance())), residual);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotPositiveDefinite) throw;
      throw Error(ErrorCode::NoInteriorSolution,
                  std::string("tilted covariance is singular: ") + e.what());
    }
    const double objective = tilt_objective(t, beta, xbar);
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(objective));
    const double predicted = dot(residual, step);

    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings && !accepted; ++h, scale *= 0.5) {
      for (std::size_t i = 0; i < d; ++i) trial[i] = beta[i] - scale * step[i];
      TiltedMoments next;
      try {
        next = tilted_moments(model, trial, 1, options.path);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::MomentOverflow) continue;
        throw;
      }
      const double value = tilt_objective(next, trial, xbar);
      if (value <= objective || (scale * predicted <= noise && value <= objective + noise)) {
        accepted = true;
        beta = trial;
        t = std::move(next);
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "line search for the limiting slope stalled (residual " << rnorm << ")";
      throw Error(ErrorCode::NoInteriorSolution, os.str());
    }
    if (norm2(beta) > kDivergenceNorm) {
      throw Error(ErrorCode::NoInteriorSolution,
                  "limiting slope diverged; xbar is likely outside the tiltable range of the model");
    }
  }
}

Vector gaussian_beta_star(std::span<const double> mu, const SpdMatrix& cov,
                          std::span<const double> xbar) {
  if (mu.size() != cov.dim() || xbar.size() != cov.dim()) {
    throw Error(ErrorCode::InvalidArgument, "dimension mismatch in gaussian_beta_star");
  }
  Vector diff(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) diff[i] = xbar[i] - mu[i];
  return spd_solve(cov, diff);
}

LimitInference compute_covariance(const MajorityModel& model, std::span<const double> xbar,
                                  std::span<const double> beta_star, MomentPath path) {
  require_xbar(model, xbar);
  const TiltedMoments first = tilted_moments(model, beta_star, 1, path);
  const TiltedMoments second = tilted_moments(model, beta_star, 2, path);

  LimitInference inf;
  inf.beta_star.assign(beta_star.begin(), beta_star.end());
  inf.xbar.assign(xbar.begin(), xbar.end());
  inf.H = SpdMatrix(centered_second_moment(first, xbar));
  inf.V = SpdMatrix(centered_second_moment(second, xbar));
  try {
    cholesky(inf.H);
  } catch (const Error& e) {
    throw Error(ErrorCode::DegenerateHessian,
                std::string("H is not positive definite (determinant condition violated): ") +
                    e.what());
  }
  const Matrix h_inv_v = spd_solve(inf.H, inf.V.matrix());
  inf.Sigma = SpdMatrix(symmetrized(spd_solve(inf.H, transpose(h_inv_v))));
  try {
    inf.chol_A = cholesky(inf.Sigma);
  } catch (const Error& e) {
    throw Error(ErrorCode::DegenerateHessian, std::string("Sigma is not positive definite: ") + e.what());
  }
  return inf;
}

LimitInference limit_inference(const MajorityModel& model, std::span<const double> xbar,
                               const BetaStarOptions& options) {
  const Vector beta = solve_beta_star(model, xbar, options);
  return compute_covariance(model, xbar, beta, options.path);
}

double sigma_1d_gaussian(double xbar, double mu, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::DomainError, "sigma must be positive");
  const double diff2 = (xbar - mu) * (xbar - mu);
  const double s2 = sigma * sigma;
  return std::exp(diff2 / s2) * (diff2 + s2) / (s2 * s2);
}

double sandwich_variance_1d(const MajorityModel& model, double xbar, double beta) {
  if (model.dim() != 1) {
    throw Error(ErrorCode::UnsupportedDimension, "sandwich_variance_1d needs a 1-D model");
  }
  // score psi = dg/dbeta = e^{beta(x - xbar)} (x - xbar);
  // slope     = d^2 g/dbeta^2 = e^{beta(x - xbar)} (x - xbar)^2.
  double mean_psi = 0.0, mean_psi2 = 0.0, mean_slope = 0.0;
  if (const auto* g = model.gaussian_part()) {
    const QuadratureRule rule = gauss_hermite(64);
    const double mu = g->mean[0];
    const double sd = std::sqrt(g->cov(0, 0));
    mean_psi = gaussian_expectation(rule, mu, sd, [&](double x) {
      return std::exp(beta * (x - xbar)) * (x - xbar);
    });
    mean_psi2 = gaussian_expectation(rule, mu, sd, [&](double x) {
      const double psi = std::exp(beta * (x - xbar)) * (x - xbar);
      return psi * psi;
    });
    mean_slope = gaussian_expectation(rule, mu, sd, [&](double x) {
      return std::exp(beta * (x - xbar)) * (x - xbar) * (x - xbar);
    });
  } else if (const auto* e = model.empirical_part()) {
    const auto values = e->points.values();
    for (double x : values) {
      const double psi = std::exp(beta * (x - xbar)) * (x - xbar);
      mean_psi += psi;
      mean_psi2 += psi * psi;
      mean_slope += psi * (x - xbar);
    }
    const double n = static_cast<double>(values.size());
    mean_psi /= n;
    mean_psi2 /= n;
    mean_slope /= n;
  } else {
    const auto& m = *model.density_part();
    const Interval range = tilted_support(m, 2.0 * beta);
    const auto moments = adaptive_simpson3(
        [&](double x) -> std::array<double, 3> {
          const double f = m.density(x);
          const double psi = std::exp(beta * (x - xbar)) * (x - xbar);
          return {f * psi, f * psi * psi, f * psi * (x - xbar)};
        },
        range.lower, range.upper, 1e-14);
    mean_psi = moments[0];
    mean_psi2 = moments[1];
    mean_slope = moments[2];
  }
  const double variance = mean_psi2 - mean_psi * mean_psi;
  return variance / (mean_slope * mean_slope);
}

ConfidenceInterval confidence_interval(const LimitInference& inference, std::size_t N, double theta) {
  if (N == 0) throw Error(ErrorCode::InvalidArgument, "N must be at least 1");
  if (!(theta > 0.0 && theta < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "theta must lie in (0, 1)");
  }
  const double z = normal_quantile(1.0 - 0.5 * theta);
  const double root_n = std::sqrt(static_cast<double>(N));
  const std::size_t d = inference.beta_star.size();
  ConfidenceInterval ci;
  ci.level = 1.0 - theta;
  ci.N = N;
  ci.lower.resize(d);
  ci.upper.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double half = norm2(inference.chol_A.row(k)) * z / root_n;
    ci.lower[k] = inference.beta_star[k] - half;
    ci.upper[k] = inference.beta_star[k] + half;
  }
  return ci;
}

SampleSizePlan plan_sample_size(double xbar, double mu, double sigma, double epsilon) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::DomainError, "sigma must be positive");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::DomainError, "epsilon must be positive");
  const double z = (xbar - mu) / sigma;
  const double log_value = 2.0 * z * z - 2.0 * std::log(epsilon);
  SampleSizePlan plan;
  plan.exact = std::exp(log_value);
  constexpr double limit = 9.2233720368547748e18;  // 2^63
  double rounded = std::round(plan.exact);
  // Snap values within rounding of an integer (1/0.1^2 is 99.99999999999997).
  if (std::abs(plan.exact - rounded) > 1e-13 * plan.exact) rounded = std::ceil(plan.exact);
  if (!(rounded < limit)) {
    plan.overflow = true;
    plan.n = std::numeric_limits<std::int64_t>::max();
    return plan;
  }
  plan.n = static_cast<std::int64_t>(rounded);
  return plan;
}

}  // namespace imblr
