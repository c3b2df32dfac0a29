#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "imblr/numerics/matrix.hpp"
#include "imblr/numerics/quadrature.hpp"
#include "imblr/numerics/random.hpp"

namespace imblr {

struct GaussianModel {
  Vector mean;
  SpdMatrix cov;
  Matrix chol;
};

// Points are the rows of a matrix; each row carries weight 1/N.
struct EmpiricalModel {
  Matrix points;
};

// One-dimensional density on an interval. `support` is the truncated
// interval actually integrated over; `cdf_x`/`cdf_p` tabulate the CDF
// used for inverse-transform sampling.
struct DensityModel {
  Density density;
  Interval support;  // truncated
  Interval domain;   // as given, may be infinite
  std::vector<double> cdf_x;
  std::vector<double> cdf_p;
};

// Majority-class distribution. Immutable once built.
class MajorityModel {
 public:
  using Variant = std::variant<GaussianModel, EmpiricalModel, DensityModel>;

  /// Throws NotPositiveDefinite if `cov` fails Cholesky.
  static MajorityModel gaussian(Vector mean, SpdMatrix cov);
  static MajorityModel gaussian_1d(double mu, double sigma);
  /// Requires at least one point with finite coordinates.
  static MajorityModel empirical(Matrix points);
  static MajorityModel empirical_1d(std::span<const double> points);
  /// Truncates `support` where f < 1e-14 of its peak and checks that f
  /// integrates to 1 within 1e-8 (InvalidModel otherwise).
  static MajorityModel density(Density f, Interval support);

  ModelKind kind() const;
  std::size_t dim() const;
  const Variant& variant() const noexcept { return model_; }

  const GaussianModel* gaussian_part() const { return std::get_if<GaussianModel>(&model_); }
  const EmpiricalModel* empirical_part() const { return std::get_if<EmpiricalModel>(&model_); }
  const DensityModel* density_part() const { return std::get_if<DensityModel>(&model_); }

  /// Throws InvalidModel unless the model can support a non-degenerate
  /// tilted covariance (an empirical model needs two distinct points).
  void require_nondegenerate() const;

 private:
  explicit MajorityModel(Variant v) : model_(std::move(v)) {}
  Variant model_;
};

// The n minority points, their mean xbar and the bound C = max ||x_j||.
class MinoritySample {
 public:
  explicit MinoritySample(Matrix points);
  /// n = 1 sample sitting exactly at `xbar`.
  static MinoritySample at(Vector xbar);

  const Matrix& points() const noexcept { return points_; }
  const Vector& mean() const noexcept { return mean_; }
  double bound() const noexcept { return bound_; }
  std::size_t size() const noexcept { return points_.rows(); }
  std::size_t dim() const noexcept { return points_.cols(); }

 private:
  Matrix points_;
  Vector mean_;
  double bound_ = 0.0;
};

// Integrals of e^{k beta . x} {1, x, x x^T} against F0.
struct TiltedMoments {
  double m0 = 0.0;
  Vector m1;
  Matrix m2;
  Vector tilt;
  int multiplier = 1;

  Vector tilted_mean() const;
  Matrix tilted_covariance() const;
};

enum class MomentPath {
  automatic,   // closed form for Gaussian models
  quadrature,  // Gauss-Hermite even for Gaussian models (cross-checks)
};

/// Throws MomentOverflow if an integrand or summand exceeds 1e300.
TiltedMoments tilted_moments(const MajorityModel& model, std::span<const double> beta, int k,
                             MomentPath path = MomentPath::automatic);

/// Mean of the tilted Gaussian N(mu + t sigma2, sigma2).
/// Truncated support widened until e^{rate x} f(x) has decayed, within the given domain.
Interval tilted_support(const DensityModel& m, double rate);

double gaussian_tilted_mean(double mu, double sigma2, double t);

Matrix sample_majority(const MajorityModel& model, std::size_t count, Rng& rng);

struct SurroundsReport {
  bool satisfied = false;
  double worst_mass = 0.0;
  Vector worst_direction;
  std::size_t directions_checked = 0;
};

/// Smallest F0-mass of {x : (x - xbar) . w > epsilon} over a set of unit
/// directions w: {+1, -1} in one dimension, otherwise `directions`
/// quasi-uniform vectors plus the positive and negative coordinate axes.
SurroundsReport surrounds_check(const MajorityModel& model, std::span<const double> xbar,
                                double epsilon, std::size_t directions = 256);
SurroundsReport surrounds_check(const Matrix& sample, std::span<const double> xbar, double epsilon,
                                std::size_t directions = 256);

/// Quasi-uniform unit vectors (Halton points pushed through the normal
/// quantile and normalized) followed by the 2d signed coordinate axes.
std::vector<Vector> sphere_directions(std::size_t dim, std::size_t count);

}  // namespace imblr
