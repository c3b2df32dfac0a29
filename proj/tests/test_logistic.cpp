#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "imblr/error.hpp"
#include "imblr/kernels/kernels.hpp"
#include "imblr/logistic.hpp"
#include "oracles.hpp"

using namespace imblr;

namespace {

Matrix column(const std::vector<double>& v) { return Matrix::from_rows(v.size(), 1, v); }

LogisticData make_data(Rng& rng, std::size_t N, std::size_t d, std::size_t n, double shift) {
  Matrix maj(N, d), mino(n, d);
  for (double& x : maj.values()) x = rng.normal();
  for (double& x : mino.values()) x = shift + 0.5 * rng.normal();
  return LogisticData(maj, MinoritySample(mino));
}

}  // namespace

TEST(LogLoss, MatchesTermByTermOracle) {
  const std::vector<double> maj{-1.2, 0.3, 0.8, 2.1, -0.4};
  const std::vector<double> mino{0.5, 1.5};
  const LogisticData data(column(maj), MinoritySample(column(mino)));
  for (double a : {-2.0, 0.0, 1.0}) {
    for (double b : {-1.0, 0.0, 2.5}) {
      EXPECT_NEAR(log_loss(data, a, std::vector<double>{b}), oracle::loglik_1d(maj, mino, a, b), 1e-12);
    }
  }
}

TEST(Derivatives, MatchFiniteDifferences) {
  Rng rng(17);
  for (std::size_t d : {1u, 2u, 3u}) {
    for (int trial = 0; trial < 5; ++trial) {
      const LogisticData data = make_data(rng, 40, d, 3, 0.5);
      const double alpha = -2.0 + rng.normal() * 0.3;
      Vector beta(d);
      for (double& b : beta) b = 0.5 * rng.normal();
      const Vector g = gradient(data, alpha, beta);
      const Matrix h = hessian(data, alpha, beta);
      const double step = 1e-5;
      auto point = [&](std::size_t k, double delta) {
        double a = alpha;
        Vector b = beta;
        if (k == 0) a += delta; else b[k - 1] += delta;
        return std::pair{a, b};
      };
      for (std::size_t k = 0; k <= d; ++k) {
        const auto [ap, bp] = point(k, step);
        const auto [am, bm] = point(k, -step);
        const double fd = (log_loss(data, ap, bp) - log_loss(data, am, bm)) / (2 * step);
        EXPECT_NEAR(g[k], fd, 1e-6 * (1 + std::abs(fd)));
        const Vector gp = gradient(data, ap, bp);
        const Vector gm = gradient(data, am, bm);
        for (std::size_t j = 0; j <= d; ++j) {
          const double fdh = (gp[j] - gm[j]) / (2 * step);
          EXPECT_NEAR(h(j, k), fdh, 1e-6 * (1 + std::abs(fdh)));
        }
      }
    }
  }
}

TEST(Hessian, NegativeDefiniteEverywhere) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const LogisticData data = make_data(rng, 30, 2, 2, 1.0);
    const Vector beta{rng.normal(), rng.normal()};
    Matrix neg = hessian(data, rng.normal(), beta);
    for (double& v : neg.values()) v = -v;
    EXPECT_NO_THROW(cholesky(SpdMatrix(neg)));
  }
}

TEST(Fit, MatchesDenseGridSearch) {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t N = 15 + rng.index(20);
    std::vector<double> maj(N), mino(1);
    do {
      mino[0] = 0.7 + 0.5 * rng.normal();
      for (double& x : maj) x = rng.normal();
    } while (mino[0] >= *std::max_element(maj.begin(), maj.end()) ||
             mino[0] <= *std::min_element(maj.begin(), maj.end()));
    const LogisticData data(column(maj), MinoritySample(column(mino)));
    const FitResult r = fit(data);
    ASSERT_TRUE(r.converged);
    // Coarse-to-fine grid search on the oracle log-likelihood.
    double ba = 0, bb = 0, best = -INFINITY;
    double ca = 0, cb = 0, span_a = 12, span_b = 12;
    for (int level = 0; level < 6; ++level) {
      for (int i = -40; i <= 40; ++i)
        for (int j = -40; j <= 40; ++j) {
          const double a = ca + span_a * i / 40.0, b = cb + span_b * j / 40.0;
          const double l = oracle::loglik_1d(maj, mino, a, b);
          if (l > best) best = l, ba = a, bb = b;
        }
      ca = ba, cb = bb;
      span_a /= 8, span_b /= 8;
    }
    const double resolution = 12.0 / 40.0 / std::pow(8.0, 5);
    EXPECT_NEAR(r.alpha, ba, 2 * resolution) << trial;
    EXPECT_NEAR(r.beta[0], bb, 2 * resolution) << trial;
    EXPECT_GE(log_loss(data, r.alpha, r.beta), best - 1e-12);
  }
}

TEST(Fit, NewtonAscentIsMonotone) {
  Rng rng(9);
  const LogisticData data = make_data(rng, 500, 2, 4, 1.0);
  std::vector<double> losses;
  FitOptions opts;
  opts.observer = [&](const FitIterate& it) { losses.push_back(it.loss); };
  const FitResult r = fit(data, opts);
  EXPECT_TRUE(r.converged);
  ASSERT_GE(losses.size(), 2u);
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_GE(losses[i], losses[i - 1] - 1e-9);
  EXPECT_LT(r.grad_norm, 1e-8);
}

TEST(Fit, StartsAtLogRatioAndZeroSlope) {
  Rng rng(1);
  const LogisticData data = make_data(rng, 200, 1, 2, 0.5);
  bool first = true;
  FitOptions opts;
  opts.observer = [&](const FitIterate& it) {
    if (!first) return;
    first = false;
    EXPECT_EQ(it.iteration, 0);
    EXPECT_DOUBLE_EQ(it.alpha, std::log(2.0 / 200.0));
    EXPECT_EQ(it.beta, (Vector{0.0}));
  };
  fit(data, opts);
  EXPECT_FALSE(first);
}

TEST(Fit, TranslationInvariant) {
  Rng rng(13);
  Matrix maj(300, 2), mino(3, 2);
  for (double& x : maj.values()) x = rng.normal();
  for (double& x : mino.values()) x = 0.8 + 0.3 * rng.normal();
  const FitResult a = fit(LogisticData(maj, MinoritySample(mino)));
  for (std::size_t i = 0; i < maj.rows(); ++i) maj(i, 0) += 7.5, maj(i, 1) -= 3.0;
  for (std::size_t i = 0; i < mino.rows(); ++i) mino(i, 0) += 7.5, mino(i, 1) -= 3.0;
  const FitResult b = fit(LogisticData(maj, MinoritySample(mino)));
  EXPECT_NEAR(a.alpha, b.alpha, 1e-9);
  EXPECT_NEAR(a.beta[0], b.beta[0], 1e-9);
  EXPECT_NEAR(a.beta[1], b.beta[1], 1e-9);
}

TEST(Fit, SymmetricDataGivesZeroSlope) {
  const std::vector<double> maj{-2, -1, -0.5, 0.5, 1, 2};
  const LogisticData data(column(maj), MinoritySample(column({0.0})));
  const FitResult r = fit(data);
  EXPECT_NEAR(r.beta[0], 0.0, 1e-12);
  EXPECT_NEAR(r.alpha, std::log(1.0 / 6.0), 1e-10);
}

TEST(Fit, SeparableDataIsFlagged) {
  const std::vector<double> maj{-3, -2, -1, -0.5};
  const LogisticData data(column(maj), MinoritySample(column({1.0})));
  try {
    fit(data);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SeparationSuspected);
  }
}

TEST(Fit, IterationCapRaisesMaxIterations) {
  Rng rng(4);
  const LogisticData data = make_data(rng, 100, 1, 1, 1.0);
  FitOptions opts;
  opts.max_iter = 1;
  try {
    fit(data, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MaxIterations);
  }
}

TEST(Fit, KernelIsaDoesNotChangeEstimate) {
  if (!kernels::supported(kernels::Isa::avx2)) GTEST_SKIP();
  Rng rng(31);
  for (std::size_t d : {1u, 3u}) {
    const LogisticData data = make_data(rng, 2000, d, 2, 1.0);
    FitResult a, b;
    {
      kernels::ScopedIsa s(kernels::Isa::scalar);
      a = fit(data);
    }
    {
      kernels::ScopedIsa s(kernels::Isa::avx2);
      b = fit(data);
    }
    EXPECT_NEAR(a.alpha, b.alpha, 1e-10);
    for (std::size_t k = 0; k < d; ++k) EXPECT_NEAR(a.beta[k], b.beta[k], 1e-10);
  }
}
