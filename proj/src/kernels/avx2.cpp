// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after the dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

#include "imblr/kernels/kernels.hpp"

namespace imblr::kernels::avx2 {

namespace {

constexpr std::size_t kLanes = 4;

inline __m256i tail_mask(std::size_t remaining) {
  alignas(32) static constexpr std::int64_t table[8] = {-1, -1, -1, -1, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(table + 4 - remaining));
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

inline double hmax(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
}

inline __m256d pow2_pd(__m256d n) {
  // 2^n assembled directly in the exponent field; n must be a normal exponent.
  const __m256d shifter = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
  const __m256i bits = _mm256_castpd_si256(_mm256_add_pd(n, shifter));
  const __m256i bias = _mm256_set1_epi64x(0x4338000000000000LL - 1023);
  return _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_sub_epi64(bits, bias), 52));
}

// e^x by Cody-Waite reduction x = n ln2 + r, |r| <= ln2/2, and a degree-13
// Taylor polynomial for e^r (truncation below 1e-17). Inputs above
// log(DBL_MAX) return +inf; results in the subnormal range are kept.
inline __m256d exp_pd(__m256d x) {
  const __m256d upper = _mm256_set1_pd(709.782712893384);  // log(DBL_MAX)
  const __m256d lower = _mm256_set1_pd(-746.0);             // exp rounds to 0 below
  const __m256d xc = _mm256_max_pd(_mm256_min_pd(x, upper), lower);

  const __m256d log2e = _mm256_set1_pd(1.4426950408889634);
  const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
  const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);
  const __m256d n =
      _mm256_round_pd(_mm256_mul_pd(xc, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, ln2_hi, xc);
  r = _mm256_fnmadd_pd(n, ln2_lo, r);

  static constexpr double inv_factorial[14] = {
      1.0,
      1.0,
      1.0 / 2.0,
      1.0 / 6.0,
      1.0 / 24.0,
      1.0 / 120.0,
      1.0 / 720.0,
      1.0 / 5040.0,
      1.0 / 40320.0,
      1.0 / 362880.0,
      1.0 / 3628800.0,
      1.0 / 39916800.0,
      1.0 / 479001600.0,
      1.0 / 6227020800.0,
  };
  __m256d p = _mm256_set1_pd(inv_factorial[13]);
  for (int k = 12; k >= 0; --k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_factorial[k]));

  // Two half-size scalings keep both factors normal for n in [-1076, 1024],
  // so the subnormal range and the top binade round once at the end.
  const __m256d n1 = _mm256_floor_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)));
  const __m256d n2 = _mm256_sub_pd(n, n1);
  __m256d result = _mm256_mul_pd(_mm256_mul_pd(p, pow2_pd(n1)), pow2_pd(n2));

  const __m256d overflow = _mm256_cmp_pd(x, upper, _CMP_GT_OQ);
  result = _mm256_blendv_pd(result, _mm256_set1_pd(std::numeric_limits<double>::infinity()), overflow);
  return result;
}

// log(1 + t) for t in [0, 1] via 2 atanh(s). For t <= sqrt(2) - 1,
// s = t / (2 + t); otherwise log(1 + t) = ln2 + 2 atanh((t - 1) / (t + 3)).
// Either way |s| <= 0.1716, so the odd series converges after 11 terms.
inline __m256d log1p_unit(__m256d t) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d big = _mm256_cmp_pd(t, _mm256_set1_pd(0.41421356237309503), _CMP_GT_OQ);
  const __m256d num = _mm256_blendv_pd(t, _mm256_sub_pd(t, one), big);
  const __m256d den =
      _mm256_blendv_pd(_mm256_add_pd(t, _mm256_set1_pd(2.0)), _mm256_add_pd(t, _mm256_set1_pd(3.0)), big);
  const __m256d s = _mm256_div_pd(num, den);
  const __m256d s2 = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(1.0 / 23.0);
  for (int k = 10; k >= 0; --k) p = _mm256_fmadd_pd(p, s2, _mm256_set1_pd(1.0 / (2.0 * k + 1.0)));
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d ln2_hi = _mm256_and_pd(big, _mm256_set1_pd(6.93147180369123816490e-01));
  const __m256d ln2_lo = _mm256_and_pd(big, _mm256_set1_pd(1.90821492927058770002e-10));
  return _mm256_add_pd(ln2_hi, _mm256_fmadd_pd(two_s, p, ln2_lo));
}

struct SigmoidPd {
  __m256d p;
  __m256d w;
  __m256d softplus;
};

inline SigmoidPd sigmoid_pd(__m256d z) {
  const __m256d sign_bit = _mm256_set1_pd(-0.0);
  const __m256d neg_abs = _mm256_or_pd(z, sign_bit);
  const __m256d e = exp_pd(neg_abs);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d inv = _mm256_div_pd(one, _mm256_add_pd(one, e));
  const __m256d negative = _mm256_cmp_pd(z, _mm256_setzero_pd(), _CMP_LT_OQ);
  const __m256d p = _mm256_blendv_pd(inv, _mm256_mul_pd(e, inv), negative);
  const __m256d w = _mm256_mul_pd(_mm256_mul_pd(e, inv), inv);
  const __m256d softplus = _mm256_add_pd(_mm256_max_pd(z, _mm256_setzero_pd()), log1p_unit(e));
  return {p, w, softplus};
}

}  // namespace

LogisticSums logistic_sums_1d(std::span<const double> u, double alpha, double beta) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d vb = _mm256_set1_pd(beta);
  __m256d sp = _mm256_setzero_pd(), pr = _mm256_setzero_pd(), pu = _mm256_setzero_pd();
  __m256d wt = _mm256_setzero_pd(), wu = _mm256_setzero_pd(), wuu = _mm256_setzero_pd();
  const std::size_t n = u.size();
  std::size_t i = 0;
  auto accumulate = [&](__m256d ui, __m256d keep) {
    const SigmoidPd g = sigmoid_pd(_mm256_fmadd_pd(vb, ui, va));
    const __m256d p = _mm256_and_pd(keep, g.p);
    const __m256d w = _mm256_and_pd(keep, g.w);
    sp = _mm256_add_pd(sp, _mm256_and_pd(keep, g.softplus));
    pr = _mm256_add_pd(pr, p);
    pu = _mm256_fmadd_pd(p, ui, pu);
    wt = _mm256_add_pd(wt, w);
    const __m256d wui = _mm256_mul_pd(w, ui);
    wu = _mm256_add_pd(wu, wui);
    wuu = _mm256_fmadd_pd(wui, ui, wuu);
  };
  const __m256d all = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  for (; i + kLanes <= n; i += kLanes) accumulate(_mm256_loadu_pd(u.data() + i), all);
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    accumulate(_mm256_maskload_pd(u.data() + i, mask), _mm256_castsi256_pd(mask));
  }
  LogisticSums s;
  s.softplus = hsum(sp);
  s.prob = hsum(pr);
  s.prob_u = hsum(pu);
  s.weight = hsum(wt);
  s.weight_u = hsum(wu);
  s.weight_uu = hsum(wuu);
  return s;
}

double logistic_terms(std::span<const double> z, std::span<double> prob, std::span<double> weight) {
  __m256d sp = _mm256_setzero_pd();
  const std::size_t n = z.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const SigmoidPd g = sigmoid_pd(_mm256_loadu_pd(z.data() + i));
    _mm256_storeu_pd(prob.data() + i, g.p);
    _mm256_storeu_pd(weight.data() + i, g.w);
    sp = _mm256_add_pd(sp, g.softplus);
  }
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    const SigmoidPd g = sigmoid_pd(_mm256_maskload_pd(z.data() + i, mask));
    _mm256_maskstore_pd(prob.data() + i, mask, g.p);
    _mm256_maskstore_pd(weight.data() + i, mask, g.w);
    sp = _mm256_add_pd(sp, _mm256_and_pd(_mm256_castsi256_pd(mask), g.softplus));
  }
  return hsum(sp);
}

TiltSums tilt_sums_1d(std::span<const double> x, double rate) {
  const __m256d vr = _mm256_set1_pd(rate);
  const __m256d neg_inf = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd(), s2 = _mm256_setzero_pd();
  __m256d mx = neg_inf;
  const std::size_t n = x.size();
  std::size_t i = 0;
  auto accumulate = [&](__m256d xi, __m256d keep) {
    const __m256d exponent = _mm256_mul_pd(vr, xi);
    mx = _mm256_max_pd(mx, _mm256_blendv_pd(neg_inf, exponent, keep));
    const __m256d e = _mm256_and_pd(keep, exp_pd(exponent));
    s0 = _mm256_add_pd(s0, e);
    const __m256d ex = _mm256_mul_pd(e, xi);
    s1 = _mm256_add_pd(s1, ex);
    s2 = _mm256_fmadd_pd(ex, xi, s2);
  };
  const __m256d all = _mm256_castsi256_pd(_mm256_set1_epi64x(-1));
  for (; i + kLanes <= n; i += kLanes) accumulate(_mm256_loadu_pd(x.data() + i), all);
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    accumulate(_mm256_maskload_pd(x.data() + i, mask), _mm256_castsi256_pd(mask));
  }
  TiltSums s;
  s.s0 = hsum(s0);
  s.s1 = hsum(s1);
  s.s2 = hsum(s2);
  s.max_exponent = hmax(mx);
  return s;
}

void exp_inplace(std::span<double> values) {
  const std::size_t n = values.size();
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    _mm256_storeu_pd(values.data() + i, exp_pd(_mm256_loadu_pd(values.data() + i)));
  }
  if (i < n) {
    const __m256i mask = tail_mask(n - i);
    _mm256_maskstore_pd(values.data() + i, mask, exp_pd(_mm256_maskload_pd(values.data() + i, mask)));
  }
}

}  // namespace imblr::kernels::avx2
