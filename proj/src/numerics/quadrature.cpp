#include "imblr/numerics/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "imblr/error.hpp"

namespace imblr {

std::string_view to_string(QuadratureKind kind) {
  switch (kind) {
    case QuadratureKind::gauss_hermite: return "gauss-hermite";
    case QuadratureKind::adaptive_simpson: return "adaptive-simpson";
    case QuadratureKind::exact_sum: return "exact-sum";
  }
  return "unknown";
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::gaussian: return "gaussian";
    case ModelKind::empirical: return "empirical";
    case ModelKind::density: return "density";
  }
  return "unknown";
}

QuadratureRule gauss_hermite(int order) {
  if (order < 2) {
    throw Error(ErrorCode::InvalidArgument, "quadrature order must be >= 2");
  }
  const auto n = static_cast<std::size_t>(order);
  // pi^{-1/4}: leading coefficient of the orthonormal Hermite recurrence.
  const double pim4 = 1.0 / std::sqrt(std::sqrt(std::numbers::pi));
  std::vector<double> x(n), w(n);
  const std::size_t half = (n + 1) / 2;
  double z = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    // Asymptotic starting guesses for the largest roots, then extrapolation.
    const double dn = static_cast<double>(n);
    if (i == 0) {
      z = std::sqrt(2.0 * dn + 1.0) - 1.85575 * std::pow(2.0 * dn + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(dn, 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double derivative = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double dj = static_cast<double>(j);
        p1 = z * std::sqrt(2.0 / (dj + 1.0)) * p2 - std::sqrt(dj / (dj + 1.0)) * p3;
      }
      derivative = std::sqrt(2.0 * dn) * p2;
      const double step = p1 / derivative;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (derivative * derivative);
    w[n - 1 - i] = w[i];
  }
  if (n % 2 == 1) x[half - 1] = 0.0;

  QuadratureRule rule;
  rule.kind = QuadratureKind::gauss_hermite;
  rule.nodes.assign(x.rbegin(), x.rend());
  rule.weights.assign(w.rbegin(), w.rend());
  return rule;
}

QuadratureRule exact_sum(std::size_t count) {
  if (count == 0) {
    throw Error(ErrorCode::EmptyInput, "exact-sum rule needs at least one point");
  }
  QuadratureRule rule;
  rule.kind = QuadratureKind::exact_sum;
  rule.nodes.resize(count);
  for (std::size_t i = 0; i < count; ++i) rule.nodes[i] = static_cast<double>(i);
  rule.weights.assign(count, 1.0 / static_cast<double>(count));
  return rule;
}

namespace {

struct Panel {
  double a, b;
};

void refine(const Density& f, double a, double fa, double m, double fm, double b, double fb,
            double whole, double tol, int depth, std::vector<Panel>& out) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    out.push_back({a, m});
    out.push_back({m, b});
    return;
  }
  refine(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1, out);
  refine(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1, out);
}

double simpson_step(const std::function<double(double)>& f, double a, double fa, double m,
                    double fm, double b, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

using Triple = std::array<double, 3>;

Triple simpson_combine(double h, const Triple& fa, const Triple& fm, const Triple& fb) {
  Triple r{};
  for (std::size_t k = 0; k < 3; ++k) r[k] = h / 6.0 * (fa[k] + 4.0 * fm[k] + fb[k]);
  return r;
}

Triple simpson3_step(const std::function<Triple(double)>& f, double a, const Triple& fa, double m,
                     const Triple& fm, double b, const Triple& fb, const Triple& whole, double tol,
                     int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const Triple flm = f(lm);
  const Triple frm = f(rm);
  const Triple left = simpson_combine(m - a, fa, flm, fm);
  const Triple right = simpson_combine(b - m, fm, frm, fb);
  bool ok = depth <= 0;
  Triple delta{};
  double worst = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    delta[k] = left[k] + right[k] - whole[k];
    worst = std::max(worst, std::abs(delta[k]));
  }
  ok = ok || worst <= 15.0 * tol;
  if (ok) {
    Triple r{};
    for (std::size_t k = 0; k < 3; ++k) r[k] = left[k] + right[k] + delta[k] / 15.0;
    return r;
  }
  const Triple l = simpson3_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1);
  const Triple rr = simpson3_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
  return {l[0] + rr[0], l[1] + rr[1], l[2] + rr[2]};
}

void require_finite(Interval support) {
  if (!std::isfinite(support.lower) || !std::isfinite(support.upper) ||
      !(support.lower < support.upper)) {
    throw Error(ErrorCode::InvalidArgument, "integration interval must be finite and non-empty");
  }
}

}  // namespace

QuadratureRule adaptive_simpson_rule(const Density& f, Interval support, int min_panels,
                                     double tolerance) {
  require_finite(support);
  if (min_panels < 1) min_panels = 1;
  const double h = support.width() / min_panels;
  const double panel_tol = tolerance / min_panels;
  std::vector<Panel> panels;
  for (int p = 0; p < min_panels; ++p) {
    const double a = support.lower + p * h;
    const double b = p + 1 == min_panels ? support.upper : support.lower + (p + 1) * h;
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    refine(f, a, fa, m, fm, b, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), panel_tol, 40, panels);
  }
  QuadratureRule rule;
  rule.kind = QuadratureKind::adaptive_simpson;
  rule.nodes.reserve(2 * panels.size() + 1);
  rule.weights.reserve(2 * panels.size() + 1);
  rule.nodes.push_back(panels.front().a);
  rule.weights.push_back(0.0);
  for (const Panel& panel : panels) {
    const double w = panel.b - panel.a;
    rule.weights.back() += w / 6.0;
    rule.nodes.push_back(0.5 * (panel.a + panel.b));
    rule.weights.push_back(4.0 * w / 6.0);
    rule.nodes.push_back(panel.b);
    rule.weights.push_back(w / 6.0);
  }
  return rule;
}

Interval truncate_support(const Density& f, Interval support, double relative_floor) {
  if (!(support.lower < support.upper)) {
    throw Error(ErrorCode::InvalidArgument, "support must be a non-empty interval");
  }
  constexpr int grid = 4000;
  double lo = std::isfinite(support.lower) ? support.lower
                                           : (std::isfinite(support.upper) ? support.upper - 2.0 : -1.0);
  double hi = std::isfinite(support.upper) ? support.upper
                                           : (std::isfinite(support.lower) ? support.lower + 2.0 : 1.0);
  std::vector<double> values(grid + 1);
  for (int round = 0; round < 64; ++round) {
    const double step = (hi - lo) / grid;
    double peak = 0.0;
    for (int i = 0; i <= grid; ++i) {
      values[i] = f(lo + i * step);
      if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
        throw Error(ErrorCode::InvalidModel, "density must be finite and nonnegative");
      }
      peak = std::max(peak, values[i]);
    }
    const double floor = relative_floor * peak;
    const bool grow_lo = !std::isfinite(support.lower) && (peak == 0.0 || values.front() >= floor);
    const bool grow_hi = !std::isfinite(support.upper) && (peak == 0.0 || values.back() >= floor);
    if (!grow_lo && !grow_hi) {
      if (peak == 0.0) throw Error(ErrorCode::InvalidModel, "density vanishes on its support");
      int first = 0;
      while (values[first] < floor) ++first;
      int last = grid;
      while (values[last] < floor) --last;
      Interval out{lo + std::max(0, first - 1) * step, lo + std::min(grid, last + 1) * step};
      if (first == 0) out.lower = lo;
      if (last == grid) out.upper = hi;
      return out;
    }
    const double width = hi - lo;
    if (width > 1e8) break;
    if (grow_lo) lo -= width;
    if (grow_hi) hi += width;
  }
  throw Error(ErrorCode::InvalidModel, "density tails do not decay; cannot truncate support");
}

QuadratureRule make_quadrature(ModelKind kind, int order, Interval support, std::size_t dimension,
                               std::size_t sample_count, const Density& density) {
  if (order < 2) {
    throw Error(ErrorCode::InvalidArgument, "quadrature order must be >= 2");
  }
  switch (kind) {
    case ModelKind::gaussian:
      return gauss_hermite(order);
    case ModelKind::empirical:
      return exact_sum(sample_count);
    case ModelKind::density: {
      if (dimension != 1) {
        std::ostringstream os;
        os << "no quadrature rule for a " << dimension << "-dimensional density model";
        throw Error(ErrorCode::UnsupportedDimension, os.str());
      }
      if (!density) throw Error(ErrorCode::InvalidArgument, "density model needs a density");
      const Interval truncated = truncate_support(density, support);
      return adaptive_simpson_rule(density, truncated, order);
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown model kind");
}

double gaussian_expectation(const QuadratureRule& rule, double mu, double sigma,
                            const std::function<double(double)>& f) {
  double s = 0.0;
  const double scale = std::numbers::sqrt2 * sigma;
  for (std::size_t i = 0; i < rule.size(); ++i) s += rule.weights[i] * f(mu + scale * rule.nodes[i]);
  return s * std::numbers::inv_sqrtpi;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tolerance, int max_depth) {
  require_finite({a, b});
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  return simpson_step(f, a, fa, m, fm, b, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tolerance,
                      max_depth);
}

std::array<double, 3> adaptive_simpson3(const std::function<std::array<double, 3>(double)>& f,
                                        double a, double b, double tolerance, int max_depth) {
  require_finite({a, b});
  // Start from 16 panels so narrow peaks are not missed by the first estimate.
  constexpr int panels = 16;
  const double h = (b - a) / panels;
  Triple total{};
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double hi = p + 1 == panels ? b : a + (p + 1) * h;
    const double m = 0.5 * (lo + hi);
    const Triple fa = f(lo), fm = f(m), fb = f(hi);
    const Triple part = simpson3_step(f, lo, fa, m, fm, hi, fb, simpson_combine(hi - lo, fa, fm, fb),
                                      tolerance / panels, max_depth);
    for (std::size_t k = 0; k < 3; ++k) total[k] += part[k];
  }
  return total;
}

}  // namespace imblr
