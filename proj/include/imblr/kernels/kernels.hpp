#pragma once

// Data-parallel inner loops shared by the logistic fit and the empirical
// tilted moments. Each kernel has a scalar reference implementation and,
// on x86-64, an AVX2+FMA variant. The variant is chosen once at startup
// from CPU features (override with IMBLR_KERNELS=scalar|avx2) and can be
// switched at runtime for equivalence testing.

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>

namespace imblr::kernels {

enum class Isa { scalar, avx2 };

std::string_view to_string(Isa isa);

// Sums over points with linear predictor z = alpha + beta * u:
//   softplus = sum log(1 + e^z)
//   prob     = sum p,         prob_u   = sum p u
//   weight   = sum p (1-p),   weight_u = sum p (1-p) u,   weight_uu = sum p (1-p) u^2
// where p = 1 / (1 + e^{-z}).
struct LogisticSums {
  double softplus = 0.0;
  double prob = 0.0;
  double prob_u = 0.0;
  double weight = 0.0;
  double weight_u = 0.0;
  double weight_uu = 0.0;
};

// Sums of e^{rate x} {1, x, x^2} together with the largest exponent seen,
// which callers use to detect overflow before trusting the sums.
struct TiltSums {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;
  double max_exponent = -std::numeric_limits<double>::infinity();
};

struct KernelTable {
  Isa isa;
  LogisticSums (*logistic_sums_1d)(std::span<const double> u, double alpha, double beta);
  // Per-point sigmoid and its derivative for precomputed predictors z;
  // returns sum softplus(z).
  double (*logistic_terms)(std::span<const double> z, std::span<double> prob,
                           std::span<double> weight);
  TiltSums (*tilt_sums_1d)(std::span<const double> x, double rate);
  // out[i] = exp(z[i]) for z[i] <= 709; larger inputs give +inf.
  void (*exp_inplace)(std::span<double> values);
};

bool supported(Isa isa);
Isa detect_best();
Isa active();
void set_active(Isa isa);
const KernelTable& table(Isa isa);
const KernelTable& current();

namespace scalar {
LogisticSums logistic_sums_1d(std::span<const double> u, double alpha, double beta);
double logistic_terms(std::span<const double> z, std::span<double> prob, std::span<double> weight);
TiltSums tilt_sums_1d(std::span<const double> x, double rate);
void exp_inplace(std::span<double> values);
}  // namespace scalar

#if defined(IMBLR_HAS_AVX2)
namespace avx2 {
LogisticSums logistic_sums_1d(std::span<const double> u, double alpha, double beta);
double logistic_terms(std::span<const double> z, std::span<double> prob, std::span<double> weight);
TiltSums tilt_sums_1d(std::span<const double> x, double rate);
void exp_inplace(std::span<double> values);
}  // namespace avx2
#endif

// RAII guard used by tests to pin a variant for a scope.
class ScopedIsa {
 public:
  explicit ScopedIsa(Isa isa) : previous_(active()) { set_active(isa); }
  ~ScopedIsa() { set_active(previous_); }
  ScopedIsa(const ScopedIsa&) = delete;
  ScopedIsa& operator=(const ScopedIsa&) = delete;

 private:
  Isa previous_;
};

}  // namespace imblr::kernels
