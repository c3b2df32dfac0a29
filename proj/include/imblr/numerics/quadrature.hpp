#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <string_view>
#include <vector>

namespace imblr {

enum class QuadratureKind { gauss_hermite, adaptive_simpson, exact_sum };

enum class ModelKind { gaussian, empirical, density };

std::string_view to_string(QuadratureKind kind);
std::string_view to_string(ModelKind kind);

struct Interval {
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();

  double width() const { return upper - lower; }
  bool contains(double x) const { return x >= lower && x <= upper; }
};

// sum_i weights[i] * f(nodes[i]) approximates the integral. For
// gauss_hermite the weight function e^{-x^2} is implied; for exact_sum
// the nodes are sample indices.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  QuadratureKind kind = QuadratureKind::gauss_hermite;

  std::size_t size() const noexcept { return nodes.size(); }
};

using Density = std::function<double(double)>;

/// Gauss-Hermite rule for the weight e^{-x^2}; weights sum to sqrt(pi).
QuadratureRule gauss_hermite(int order);

/// Uniform 1/count weights over sample indices 0..count-1.
QuadratureRule exact_sum(std::size_t count);

/// Composite Simpson rule on a partition adaptively refined until the
/// integral of `f` over every panel is resolved to `tolerance`. At least
/// `min_panels` equal panels are used as the starting partition.
QuadratureRule adaptive_simpson_rule(const Density& f, Interval support, int min_panels,
                                     double tolerance = 1e-10);

/// Shrinks a (possibly infinite) support to where the density is at least
/// `relative_floor` times its peak. Throws InvalidModel when no finite
/// window captures the tails.
Interval truncate_support(const Density& f, Interval support, double relative_floor = 1e-14);

/// Rule selection by model kind: Gauss-Hermite for Gaussian models, adaptive
/// Simpson on the truncated support for generic densities, exact sums for
/// empirical models. Requires order >= 2. Throws UnsupportedDimension for a
/// density model with dimension > 1.
QuadratureRule make_quadrature(ModelKind kind, int order, Interval support,
                               std::size_t dimension = 1, std::size_t sample_count = 0,
                               const Density& density = {});

/// E[f(X)] for X ~ N(mu, sigma^2) using a Gauss-Hermite rule.
double gaussian_expectation(const QuadratureRule& rule, double mu, double sigma,
                            const std::function<double(double)>& f);

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tolerance = 1e-10, int max_depth = 50);

// Simultaneous adaptive Simpson for three integrands sharing one partition.
std::array<double, 3> adaptive_simpson3(const std::function<std::array<double, 3>(double)>& f,
                                        double a, double b, double tolerance = 1e-10,
                                        int max_depth = 50);

}  // namespace imblr
