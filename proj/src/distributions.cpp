#include "imblr/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "imblr/error.hpp"
#include "imblr/kernels/kernels.hpp"
#include "imblr/numerics/normal.hpp"

namespace imblr {

namespace {

// Largest exponent whose exponential stays below the 1e300 overflow guard.
const double kMaxExponent = std::log(1e300);

[[noreturn]] void throw_overflow(double beta_norm, int k) {
  std::ostringstream os;
  os << "tilted moment exceeds 1e300 (|beta| = " << beta_norm << ", k = " << k
     << "); the tilt is too large for the model's tails";
  throw Error(ErrorCode::MomentOverflow, os.str());
}

void require_dim(const MajorityModel& model, std::size_t got, const char* what) {
  if (got != model.dim()) {
    std::ostringstream os;
    os << what << " has dimension " << got << " but the model has dimension " << model.dim();
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

int tensor_order(std::size_t dim) {
  switch (dim) {
    case 1: return 64;
    case 2: return 48;
    case 3: return 24;
    default: return 10;
  }
}

TiltedMoments gaussian_closed_form(const GaussianModel& g, std::span<const double> beta, int k) {
  const std::size_t d = g.mean.size();
  Vector kb(d);
  for (std::size_t i = 0; i < d; ++i) kb[i] = k * beta[i];
  const Vector cov_kb = multiply(g.cov.matrix(), kb);
  const double log_m0 = dot(kb, g.mean) + 0.5 * dot(kb, cov_kb);
  TiltedMoments t;
  t.tilt.assign(beta.begin(), beta.end());
  t.multiplier = k;
  // The tilted law is N(mu + k Sigma beta, Sigma).
  Vector shifted(d);
  for (std::size_t i = 0; i < d; ++i) shifted[i] = g.mean[i] + cov_kb[i];
  double second_scale = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    second_scale = std::max(second_scale, shifted[i] * shifted[i] + g.cov(i, i));
  }
  if (!(log_m0 + std::log(second_scale) <= kMaxExponent)) throw_overflow(norm2(beta), k);
  t.m0 = std::exp(log_m0);
  t.m1.resize(d);
  for (std::size_t i = 0; i < d; ++i) t.m1[i] = t.m0 * shifted[i];
  t.m2 = Matrix(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) t.m2(i, j) = t.m0 * (g.cov(i, j) + shifted[i] * shifted[j]);
  return t;
}

TiltedMoments gaussian_quadrature(const GaussianModel& g, std::span<const double> beta, int k) {
  const std::size_t d = g.mean.size();
  const QuadratureRule rule = gauss_hermite(tensor_order(d));
  const std::size_t q = rule.size();
  TiltedMoments t;
  t.tilt.assign(beta.begin(), beta.end());
  t.multiplier = k;
  t.m1.assign(d, 0.0);
  t.m2 = Matrix(d, d);
  std::vector<std::size_t> index(d, 0);
  Vector node(d), x(d);
  const double norm = std::pow(std::numbers::pi, -0.5 * static_cast<double>(d));
  while (true) {
    double w = norm;
    for (std::size_t i = 0; i < d; ++i) {
      node[i] = std::numbers::sqrt2 * rule.nodes[index[i]];
      w *= rule.weights[index[i]];
    }
    for (std::size_t i = 0; i < d; ++i) {
      double s = g.mean[i];
      for (std::size_t j = 0; j <= i; ++j) s += g.chol(i, j) * node[j];
      x[i] = s;
    }
    const double exponent = k * dot(beta, x);
    if (exponent > kMaxExponent) throw_overflow(norm2(beta), k);
    const double e = w * std::exp(exponent);
    t.m0 += e;
    for (std::size_t i = 0; i < d; ++i) {
      t.m1[i] += e * x[i];
      for (std::size_t j = 0; j < d; ++j) t.m2(i, j) += e * x[i] * x[j];
    }
    std::size_t pos = 0;
    while (pos < d && ++index[pos] == q) index[pos++] = 0;
    if (pos == d) break;
  }
  return t;
}

TiltedMoments empirical_sums(const EmpiricalModel& e, std::span<const double> beta, int k) {
  const std::size_t n = e.points.rows();
  const std::size_t d = e.points.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  TiltedMoments t;
  t.tilt.assign(beta.begin(), beta.end());
  t.multiplier = k;
  t.m1.assign(d, 0.0);
  t.m2 = Matrix(d, d);
  const kernels::KernelTable& kt = kernels::current();
  if (d == 1) {
    const kernels::TiltSums s = kt.tilt_sums_1d(e.points.values(), k * beta[0]);
    if (s.max_exponent > kMaxExponent) throw_overflow(norm2(beta), k);
    t.m0 = s.s0 * inv_n;
    t.m1[0] = s.s1 * inv_n;
    t.m2(0, 0) = s.s2 * inv_n;
    return t;
  }
  std::vector<double> weights(n);
  double max_exponent = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    weights[i] = k * dot(beta, e.points.row(i));
    max_exponent = std::max(max_exponent, weights[i]);
  }
  if (max_exponent > kMaxExponent) throw_overflow(norm2(beta), k);
  kt.exp_inplace(weights);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = e.points.row(i);
    const double w = weights[i];
    t.m0 += w;
    for (std::size_t a = 0; a < d; ++a) {
      t.m1[a] += w * x[a];
      for (std::size_t b = a; b < d; ++b) t.m2(a, b) += w * x[a] * x[b];
    }
  }
  t.m0 *= inv_n;
  for (std::size_t a = 0; a < d; ++a) {
    t.m1[a] *= inv_n;
    for (std::size_t b = a; b < d; ++b) {
      t.m2(a, b) *= inv_n;
      t.m2(b, a) = t.m2(a, b);
    }
  }
  return t;
}

TiltedMoments density_quadrature(const DensityModel& m, std::span<const double> beta, int k) {
  const double rate = k * beta[0];
  const Interval range = tilted_support(m, rate);
  const double a = range.lower;
  const double b = range.upper;
  bool overflow = false;
  auto integrand = [&](double x) -> std::array<double, 3> {
    const double exponent = rate * x;
    const double fx = m.density(x);
    const double v = fx > 0.0 ? std::exp(exponent + std::log(fx)) : 0.0;
    if (v > 1e300 || std::isinf(v)) overflow = true;
    return {v, v * x, v * x * x};
  };
  // Coarse composite Simpson sets the scale for the absolute tolerance.
  constexpr int coarse = 512;
  const double h = (b - a) / coarse;
  double scale = 0.0;
  for (int i = 0; i <= coarse; ++i) {
    const auto v = integrand(a + i * h);
    const double c = (i == 0 || i == coarse) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    scale += c * (v[0] + std::abs(v[1]) + v[2]);
  }
  scale *= h / 3.0;
  if (overflow) throw_overflow(std::abs(beta[0]), k);
  const auto r = adaptive_simpson3(integrand, a, b, std::max(scale, 1e-300) * 1e-13);
  if (overflow) throw_overflow(std::abs(beta[0]), k);
  TiltedMoments t;
  t.tilt.assign(beta.begin(), beta.end());
  t.multiplier = k;
  t.m0 = r[0];
  t.m1 = {r[1]};
  t.m2 = Matrix{{r[2]}};
  return t;
}

}  // namespace

MajorityModel MajorityModel::gaussian(Vector mean, SpdMatrix cov) {
  if (mean.size() != cov.dim()) {
    throw Error(ErrorCode::InvalidArgument, "Gaussian mean and covariance dimensions differ");
  }
  for (double v : mean) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidModel, "Gaussian mean must be finite");
  }
  Matrix chol = cholesky(cov);
  return MajorityModel(GaussianModel{std::move(mean), std::move(cov), std::move(chol)});
}

MajorityModel MajorityModel::gaussian_1d(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidModel, "Gaussian sigma must be positive");
  }
  return gaussian({mu}, SpdMatrix::scalar(sigma * sigma));
}

MajorityModel MajorityModel::empirical(Matrix points) {
  if (points.rows() == 0 || points.cols() == 0) {
    throw Error(ErrorCode::EmptyInput, "empirical model needs at least one point");
  }
  for (double v : points.values()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidModel, "empirical points must be finite");
  }
  return MajorityModel(EmpiricalModel{std::move(points)});
}

MajorityModel MajorityModel::empirical_1d(std::span<const double> points) {
  return empirical(Matrix::from_rows(points.size(), 1, {points.begin(), points.end()}));
}

Interval tilted_support(const DensityModel& m, double rate) {
  auto log_g = [&](double x) {
    const double fx = m.density(x);
    return fx > 0.0 ? std::log(fx) + rate * x : -INFINITY;
  };
  Interval out = m.support;
  const double step = out.width() / 8.0;
  double peak = -INFINITY;
  for (int i = 0; i <= 256; ++i) peak = std::max(peak, log_g(out.lower + out.width() * i / 256.0));
  // Relative floor of the tilted integrand, matching the untilted truncation.
  constexpr double log_floor = -32.3;
  for (int i = 0; i < 4096 && out.lower - step >= m.domain.lower; ++i) {
    const double g = log_g(out.lower);
    if (g < peak + log_floor) break;
    out.lower -= step;
    peak = std::max(peak, g);
  }
  for (int i = 0; i < 4096 && out.upper + step <= m.domain.upper; ++i) {
    const double g = log_g(out.upper);
    if (g < peak + log_floor) break;
    out.upper += step;
    peak = std::max(peak, g);
  }
  return out;
}

MajorityModel MajorityModel::density(Density f, Interval support) {
  if (!f) throw Error(ErrorCode::InvalidModel, "density model needs a density function");
  const Interval truncated = truncate_support(f, support);
  const double total = adaptive_simpson(f, truncated.lower, truncated.upper, 1e-13);
  if (!(std::abs(total - 1.0) <= 1e-8)) {
    std::ostringstream os;
    os.precision(12);
    os << "density integrates to " << total << " over its support, expected 1";
    throw Error(ErrorCode::InvalidModel, os.str());
  }
  DensityModel m{std::move(f), truncated, support, {}, {}};
  constexpr std::size_t grid = 8192;
  m.cdf_x.resize(grid + 1);
  m.cdf_p.resize(grid + 1);
  const double h = truncated.width() / grid;
  double prev = m.density(truncated.lower);
  m.cdf_x[0] = truncated.lower;
  m.cdf_p[0] = 0.0;
  for (std::size_t i = 1; i <= grid; ++i) {
    const double x = i == grid ? truncated.upper : truncated.lower + static_cast<double>(i) * h;
    const double mid = m.density(x - 0.5 * h);
    const double cur = m.density(x);
    m.cdf_x[i] = x;
    m.cdf_p[i] = m.cdf_p[i - 1] + h / 6.0 * (prev + 4.0 * mid + cur);
    prev = cur;
  }
  const double last = m.cdf_p.back();
  for (double& p : m.cdf_p) p /= last;
  return MajorityModel(std::move(m));
}

ModelKind MajorityModel::kind() const {
  switch (model_.index()) {
    case 0: return ModelKind::gaussian;
    case 1: return ModelKind::empirical;
    default: return ModelKind::density;
  }
}

std::size_t MajorityModel::dim() const {
  if (const auto* g = gaussian_part()) return g->mean.size();
  if (const auto* e = empirical_part()) return e->points.cols();
  return 1;
}

void MajorityModel::require_nondegenerate() const {
  if (const auto* e = empirical_part()) {
    const auto first = e->points.row(0);
    for (std::size_t i = 1; i < e->points.rows(); ++i) {
      const auto row = e->points.row(i);
      if (!std::equal(first.begin(), first.end(), row.begin())) return;
    }
    throw Error(ErrorCode::InvalidModel,
                "empirical model has fewer than two distinct points; the tilted covariance is singular");
  }
}

MinoritySample::MinoritySample(Matrix points) : points_(std::move(points)) {
  if (points_.rows() == 0 || points_.cols() == 0) {
    throw Error(ErrorCode::EmptyInput, "minority sample needs at least one point");
  }
  const std::size_t d = points_.cols();
  mean_.assign(d, 0.0);
  for (std::size_t i = 0; i < points_.rows(); ++i) {
    const auto row = points_.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(row[j])) {
        throw Error(ErrorCode::InvalidArgument, "minority points must be finite");
      }
      mean_[j] += row[j];
    }
    bound_ = std::max(bound_, norm2(row));
  }
  for (double& m : mean_) m /= static_cast<double>(points_.rows());
}

MinoritySample MinoritySample::at(Vector xbar) {
  const std::size_t d = xbar.size();
  return MinoritySample(Matrix::from_rows(1, d, std::move(xbar)));
}

Vector TiltedMoments::tilted_mean() const {
  Vector m(m1.size());
  for (std::size_t i = 0; i < m1.size(); ++i) m[i] = m1[i] / m0;
  return m;
}

Matrix TiltedMoments::tilted_covariance() const {
  const Vector mean = tilted_mean();
  Matrix c(mean.size(), mean.size());
  for (std::size_t i = 0; i < mean.size(); ++i)
    for (std::size_t j = 0; j < mean.size(); ++j) c(i, j) = m2(i, j) / m0 - mean[i] * mean[j];
  return c;
}

TiltedMoments tilted_moments(const MajorityModel& model, std::span<const double> beta, int k,
                             MomentPath path) {
  require_dim(model, beta.size(), "tilt");
  if (k != 1 && k != 2) throw Error(ErrorCode::InvalidArgument, "tilt multiplier must be 1 or 2");
  for (double b : beta) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "tilt must be finite");
  }
  if (const auto* g = model.gaussian_part()) {
    return path == MomentPath::quadrature ? gaussian_quadrature(*g, beta, k)
                                          : gaussian_closed_form(*g, beta, k);
  }
  if (const auto* e = model.empirical_part()) return empirical_sums(*e, beta, k);
  return density_quadrature(*model.density_part(), beta, k);
}

double gaussian_tilted_mean(double mu, double sigma2, double t) {
  if (!(sigma2 > 0.0)) throw Error(ErrorCode::DomainError, "variance must be positive");
  return mu + t * sigma2;
}

Matrix sample_majority(const MajorityModel& model, std::size_t count, Rng& rng) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be positive");
  const std::size_t d = model.dim();
  Matrix out(count, d);
  if (const auto* g = model.gaussian_part()) {
    for (std::size_t i = 0; i < count; ++i) mvn_sample(g->mean, g->chol, rng, out.row(i));
  } else if (const auto* e = model.empirical_part()) {
    const std::size_t n = e->points.rows();
    for (std::size_t i = 0; i < count; ++i) {
      const auto src = e->points.row(rng.index(n));
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
  } else {
    const auto& m = *model.density_part();
    for (std::size_t i = 0; i < count; ++i) {
      const double u = rng.uniform();
      const auto it = std::upper_bound(m.cdf_p.begin(), m.cdf_p.end(), u);
      const std::size_t hi = std::min<std::size_t>(
          std::max<std::ptrdiff_t>(it - m.cdf_p.begin(), 1), m.cdf_p.size() - 1);
      const std::size_t lo = hi - 1;
      const double span = m.cdf_p[hi] - m.cdf_p[lo];
      const double frac = span > 0.0 ? (u - m.cdf_p[lo]) / span : 0.5;
      out(i, 0) = m.cdf_x[lo] + frac * (m.cdf_x[hi] - m.cdf_x[lo]);
    }
  }
  return out;
}

std::vector<Vector> sphere_directions(std::size_t dim, std::size_t count) {
  std::vector<Vector> dirs;
  if (dim == 1) {
    dirs.push_back({1.0});
    dirs.push_back({-1.0});
    return dirs;
  }
  static constexpr unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                        43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101,
                                        103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157,
                                        163, 167, 173, 179, 181, 191, 193, 197, 199, 211, 223,
                                        227, 229};
  if (dim > std::size(primes)) {
    throw Error(ErrorCode::UnsupportedDimension, "direction sets support at most 50 dimensions");
  }
  for (std::size_t i = 1; i <= count; ++i) {
    Vector v(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      // Radical inverse of i in base primes[j], offset away from 0 and 1.
      double f = 1.0, r = 0.0;
      std::size_t n = i;
      while (n > 0) {
        f /= primes[j];
        r += f * static_cast<double>(n % primes[j]);
        n /= primes[j];
      }
      v[j] = normal_quantile(std::clamp(r, 1e-12, 1.0 - 1e-12));
    }
    const double len = norm2(v);
    if (len == 0.0) continue;
    for (double& c : v) c /= len;
    dirs.push_back(std::move(v));
  }
  for (std::size_t j = 0; j < dim; ++j) {
    Vector pos(dim, 0.0), neg(dim, 0.0);
    pos[j] = 1.0;
    neg[j] = -1.0;
    dirs.push_back(std::move(pos));
    dirs.push_back(std::move(neg));
  }
  return dirs;
}

namespace {

double empirical_half_space_mass(const Matrix& points, std::span<const double> xbar,
                                 std::span<const double> dir, double epsilon) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const auto x = points.row(i);
    double proj = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) proj += (x[j] - xbar[j]) * dir[j];
    if (proj > epsilon) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(points.rows());
}

SurroundsReport worst_over(const std::vector<Vector>& dirs,
                           const std::function<double(const Vector&)>& mass) {
  SurroundsReport report;
  report.worst_mass = std::numeric_limits<double>::infinity();
  for (const Vector& w : dirs) {
    const double m = mass(w);
    if (m < report.worst_mass) {
      report.worst_mass = m;
      report.worst_direction = w;
    }
  }
  report.directions_checked = dirs.size();
  report.satisfied = report.worst_mass > 0.0;
  return report;
}

}  // namespace

SurroundsReport surrounds_check(const MajorityModel& model, std::span<const double> xbar,
                                double epsilon, std::size_t directions) {
  require_dim(model, xbar.size(), "xbar");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (directions == 0) throw Error(ErrorCode::InvalidArgument, "need at least one direction");
  const auto dirs = sphere_directions(model.dim(), directions);
  if (const auto* g = model.gaussian_part()) {
    return worst_over(dirs, [&](const Vector& w) {
      // (X - xbar) . w ~ N(w . (mu - xbar), w^T Sigma w)
      double shift = 0.0;
      for (std::size_t j = 0; j < w.size(); ++j) shift += w[j] * (g->mean[j] - xbar[j]);
      const double sd = std::sqrt(dot(w, multiply(g->cov.matrix(), w)));
      return normal_cdf((shift - epsilon) / sd);
    });
  }
  if (const auto* e = model.empirical_part()) {
    return worst_over(dirs, [&](const Vector& w) {
      return empirical_half_space_mass(e->points, xbar, w, epsilon);
    });
  }
  const auto& m = *model.density_part();
  return worst_over(dirs, [&](const Vector& w) {
    const double cut = w[0] > 0.0 ? xbar[0] + epsilon : xbar[0] - epsilon;
    const double lo = w[0] > 0.0 ? std::max(cut, m.support.lower) : m.support.lower;
    const double hi = w[0] > 0.0 ? m.support.upper : std::min(cut, m.support.upper);
    if (!(lo < hi)) return 0.0;
    return adaptive_simpson(m.density, lo, hi, 1e-12);
  });
}

SurroundsReport surrounds_check(const Matrix& sample, std::span<const double> xbar, double epsilon,
                                std::size_t directions) {
  if (sample.rows() == 0) throw Error(ErrorCode::EmptyInput, "sample is empty");
  if (sample.cols() != xbar.size()) {
    throw Error(ErrorCode::InvalidArgument, "sample and xbar dimensions differ");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
  if (directions == 0) throw Error(ErrorCode::InvalidArgument, "need at least one direction");
  const auto dirs = sphere_directions(sample.cols(), directions);
  return worst_over(dirs, [&](const Vector& w) {
    return empirical_half_space_mass(sample, xbar, w, epsilon);
  });
}

}  // namespace imblr
