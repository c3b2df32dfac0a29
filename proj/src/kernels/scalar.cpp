#include <algorithm>
#include <cmath>

#include "imblr/kernels/kernels.hpp"

namespace imblr::kernels::scalar {

namespace {

struct Sigmoid {
  double p;
  double w;
  double softplus;
};

inline Sigmoid sigmoid(double z) {
  const double e = std::exp(-std::abs(z));
  const double inv = 1.0 / (1.0 + e);
  const double p = z >= 0.0 ? inv : e * inv;
  return {p, e * inv * inv, std::max(z, 0.0) + std::log1p(e)};
}

}  // namespace

LogisticSums logistic_sums_1d(std::span<const double> u, double alpha, double beta) {
  LogisticSums s;
  for (double ui : u) {
    const Sigmoid g = sigmoid(alpha + beta * ui);
    s.softplus += g.softplus;
    s.prob += g.p;
    s.prob_u += g.p * ui;
    s.weight += g.w;
    s.weight_u += g.w * ui;
    s.weight_uu += g.w * ui * ui;
  }
  return s;
}

double logistic_terms(std::span<const double> z, std::span<double> prob, std::span<double> weight) {
  double total = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const Sigmoid g = sigmoid(z[i]);
    prob[i] = g.p;
    weight[i] = g.w;
    total += g.softplus;
  }
  return total;
}

TiltSums tilt_sums_1d(std::span<const double> x, double rate) {
  TiltSums s;
  for (double xi : x) {
    const double exponent = rate * xi;
    s.max_exponent = std::max(s.max_exponent, exponent);
    const double e = std::exp(exponent);
    s.s0 += e;
    s.s1 += e * xi;
    s.s2 += e * xi * xi;
  }
  return s;
}

void exp_inplace(std::span<double> values) {
  for (double& v : values) v = std::exp(v);
}

}  // namespace imblr::kernels::scalar
