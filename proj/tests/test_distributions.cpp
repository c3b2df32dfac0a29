#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "imblr/distributions.hpp"
#include "imblr/error.hpp"
#include "imblr/kernels/kernels.hpp"
#include "imblr/numerics/normal.hpp"
#include "oracles.hpp"

using namespace imblr;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no imblr::Error thrown";
  return ErrorCode::InvalidArgument;
}

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); }

}  // namespace

TEST(MajorityModel, ConstructionAndValidation) {
  const auto g = MajorityModel::gaussian_1d(0.5, 2.0);
  EXPECT_EQ(g.kind(), ModelKind::gaussian);
  EXPECT_EQ(g.dim(), 1u);
  EXPECT_DOUBLE_EQ(g.gaussian_part()->cov(0, 0), 4.0);
  EXPECT_EQ(code_of([] { MajorityModel::gaussian({0, 0}, SpdMatrix{{1, 2}, {2, 1}}); }),
            ErrorCode::NotPositiveDefinite);
  EXPECT_EQ(code_of([] { MajorityModel::gaussian({0}, SpdMatrix{{1, 0}, {0, 1}}); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { MajorityModel::empirical(Matrix(0, 1)); }), ErrorCode::EmptyInput);
  const std::vector<double> one{5.0};
  EXPECT_NO_THROW(MajorityModel::empirical_1d(one));
  EXPECT_EQ(code_of([&] { MajorityModel::empirical_1d(one).require_nondegenerate(); }),
            ErrorCode::InvalidModel);
  EXPECT_EQ(code_of([] { MajorityModel::density([](double) { return 2.0; }, {0.0, 1.0}); }),
            ErrorCode::InvalidModel);
}

TEST(MinoritySample, MeanAndBound) {
  const MinoritySample m(Matrix{{1, 2}, {3, -4}});
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.mean(), (Vector{2, -1}));
  EXPECT_DOUBLE_EQ(m.bound(), 5.0);
  const auto at = MinoritySample::at({1.5});
  EXPECT_EQ(at.size(), 1u);
  EXPECT_EQ(at.mean(), (Vector{1.5}));
}

// E_{N(mu, s2)}[e^{tx} f(x)] = e^{t mu + t^2 s2 / 2} E_{N(mu + t s2, s2)}[f] for f in {1, x, x^2}.
TEST(GaussianTilt, ShiftIdentityAgainstIndependentQuadrature) {
  for (double mu : {-1.0, 0.0, 0.7}) {
    for (double sd : {0.5, 1.0, 2.0}) {
      for (double t = -3.0; t <= 3.0; t += 0.5) {
        const auto model = MajorityModel::gaussian_1d(mu, sd);
        const TiltedMoments m = tilted_moments(model, std::vector<double>{t}, 1);
        const double s2 = sd * sd;
        const double mgf = std::exp(t * mu + 0.5 * t * t * s2);
        const double shifted = mu + t * s2;
        EXPECT_NEAR(m.m0 / mgf, 1.0, 1e-12);
        EXPECT_NEAR(m.m1[0] / mgf, shifted, 1e-10 * (1 + std::abs(shifted)));
        EXPECT_NEAR(m.m2(0, 0) / mgf, s2 + shifted * shifted, 1e-10 * (1 + shifted * shifted));
        EXPECT_NEAR(gaussian_tilted_mean(mu, s2, t), shifted, 1e-14 * (1 + std::abs(shifted)));
        // Independent fixed-panel Simpson of the raw integrals.
        const double a = shifted - 12 * sd, b = shifted + 12 * sd;
        auto dens = [&](double x) { return std_normal_pdf((x - mu) / sd) / sd * std::exp(t * x); };
        const double i0 = oracle::simpson(dens, a, b);
        const double i1 = oracle::simpson([&](double x) { return dens(x) * x; }, a, b);
        EXPECT_NEAR(m.m0 / i0, 1.0, 1e-8);
        EXPECT_NEAR(m.m1[0], i1, 1e-8 * (std::abs(i1) + i0));
      }
    }
  }
}

TEST(GaussianTilt, QuadraturePathMatchesClosedForm) {
  const SpdMatrix cov{{1.5, 0.4, 0.1}, {0.4, 1.0, -0.2}, {0.1, -0.2, 0.8}};
  const auto model = MajorityModel::gaussian({0.3, -0.5, 1.0}, cov);
  for (int k : {1, 2}) {
    const Vector beta{0.4, -0.3, 0.6};
    const auto a = tilted_moments(model, beta, k, MomentPath::automatic);
    const auto q = tilted_moments(model, beta, k, MomentPath::quadrature);
    EXPECT_NEAR(q.m0 / a.m0, 1.0, 1e-10);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_NEAR(q.m1[i], a.m1[i], 1e-10 * a.m0);
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(q.m2(i, j), a.m2(i, j), 1e-9 * a.m0);
    }
  }
}

TEST(EmpiricalTilt, MatchesDirectSums) {
  const std::vector<double> xs{-2.0, -0.5, 0.1, 0.9, 1.7, 3.2, -1.1};
  const auto model = MajorityModel::empirical_1d(xs);
  for (double t : {-1.5, -0.2, 0.0, 0.8, 2.0}) {
    for (int k : {1, 2}) {
      const double rate = k * t;
      const auto m = tilted_moments(model, std::vector<double>{t}, k);
      EXPECT_NEAR(m.m0, oracle::tilted_sum(xs, rate, 0), 1e-13 * m.m0);
      EXPECT_NEAR(m.m1[0], oracle::tilted_sum(xs, rate, 1), 1e-13 * (m.m0 + m.m2(0, 0)));
      EXPECT_NEAR(m.m2(0, 0), oracle::tilted_sum(xs, rate, 2), 1e-13 * m.m2(0, 0));
    }
  }
}

TEST(EmpiricalTilt, MultivariateMatchesDirectSums) {
  const Matrix pts{{0, 1}, {1, -1}, {-1, 0.5}, {2, 2}};
  const auto model = MajorityModel::empirical(pts);
  const Vector beta{0.3, -0.7};
  const auto m = tilted_moments(model, beta, 2);
  double m0 = 0;
  Vector m1(2, 0.0);
  Matrix m2(2, 2);
  for (std::size_t r = 0; r < 4; ++r) {
    const double w = std::exp(2 * (beta[0] * pts(r, 0) + beta[1] * pts(r, 1))) / 4;
    m0 += w;
    for (int i = 0; i < 2; ++i) {
      m1[i] += w * pts(r, i);
      for (int j = 0; j < 2; ++j) m2(i, j) += w * pts(r, i) * pts(r, j);
    }
  }
  EXPECT_NEAR(m.m0, m0, 1e-14 * m0);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(m.m1[i], m1[i], 1e-13 * m0);
    for (int j = 0; j < 2; ++j) EXPECT_NEAR(m.m2(i, j), m2(i, j), 1e-13 * m0);
  }
}

TEST(EmpiricalTilt, KernelIsaDoesNotChangeMoments) {
  if (!kernels::supported(kernels::Isa::avx2)) GTEST_SKIP();
  std::vector<double> xs(1001);
  Rng rng(8);
  for (double& x : xs) x = rng.normal();
  const auto model = MajorityModel::empirical_1d(xs);
  TiltedMoments a, b;
  {
    kernels::ScopedIsa s(kernels::Isa::scalar);
    a = tilted_moments(model, std::vector<double>{1.3}, 2);
  }
  {
    kernels::ScopedIsa s(kernels::Isa::avx2);
    b = tilted_moments(model, std::vector<double>{1.3}, 2);
  }
  EXPECT_NEAR(a.m0, b.m0, 1e-13 * a.m0);
  EXPECT_NEAR(a.m1[0], b.m1[0], 1e-13 * a.m2(0, 0));
  EXPECT_NEAR(a.m2(0, 0), b.m2(0, 0), 1e-13 * a.m2(0, 0));
}

TEST(DensityTilt, StandardNormalDensityMatchesGaussianModel) {
  const auto dens = MajorityModel::density(std_normal_pdf, {});
  const auto gauss = MajorityModel::gaussian_1d(0.0, 1.0);
  for (double t : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
    const auto a = tilted_moments(dens, std::vector<double>{t}, 1);
    const auto b = tilted_moments(gauss, std::vector<double>{t}, 1);
    EXPECT_NEAR(a.m0 / b.m0, 1.0, 1e-9);
    EXPECT_NEAR(a.m1[0] / b.m0, b.m1[0] / b.m0, 1e-9);
    EXPECT_NEAR(a.m2(0, 0) / b.m2(0, 0), 1.0, 1e-9);
  }
}

TEST(TiltedMoments, OverflowIsReported) {
  const auto g = MajorityModel::gaussian_1d(0.0, 1.0);
  EXPECT_EQ(code_of([&] { tilted_moments(g, std::vector<double>{40.0}, 1); }), ErrorCode::MomentOverflow);
  const std::vector<double> xs{0.0, 800.0};
  const auto e = MajorityModel::empirical_1d(xs);
  EXPECT_EQ(code_of([&] { tilted_moments(e, std::vector<double>{1.0}, 1); }), ErrorCode::MomentOverflow);
}

TEST(TiltedMoments, MeanAndCovarianceHelpers) {
  const auto g = MajorityModel::gaussian_1d(1.0, 2.0);
  const auto m = tilted_moments(g, std::vector<double>{0.5}, 1);
  EXPECT_NEAR(m.tilted_mean()[0], 1.0 + 0.5 * 4.0, 1e-12);
  EXPECT_NEAR(m.tilted_covariance()(0, 0), 4.0, 1e-12);
}

TEST(Sampling, DeterministicAndMomentsMatch) {
  const auto g = MajorityModel::gaussian({1.0, -1.0}, SpdMatrix{{1.0, 0.3}, {0.3, 0.5}});
  Rng r1(3, 1), r2(3, 1);
  const Matrix a = sample_majority(g, 50000, r1);
  EXPECT_EQ(a, sample_majority(g, 50000, r2));
  double m0 = 0, m1 = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    m0 += a(i, 0);
    m1 += a(i, 1);
  }
  EXPECT_NEAR(m0 / 50000, 1.0, 0.02);
  EXPECT_NEAR(m1 / 50000, -1.0, 0.02);

  const std::vector<double> atoms{5.0};
  Rng r3(1);
  const Matrix e = sample_majority(MajorityModel::empirical_1d(atoms), 5, r3);
  for (double v : e.values()) EXPECT_EQ(v, 5.0);

  const auto d = MajorityModel::density([](double x) { return x >= 0 && x <= 2 ? 0.5 : 0.0; }, {0.0, 2.0});
  Rng r4(2);
  const Matrix u = sample_majority(d, 20000, r4);
  double mean = 0;
  for (double v : u.values()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 2.0);
    mean += v;
  }
  EXPECT_NEAR(mean / 20000, 1.0, 0.02);
}

TEST(Surrounds, GaussianMassIsNormalTail) {
  const auto g = MajorityModel::gaussian_1d(0.0, 1.0);
  const auto r = surrounds_check(g, std::vector<double>{1.0}, 0.1);
  EXPECT_TRUE(r.satisfied);
  EXPECT_NEAR(r.worst_mass, 1.0 - normal_cdf(1.1), 1e-15);
  EXPECT_EQ(r.worst_direction, (Vector{1.0}));
  EXPECT_EQ(r.directions_checked, 2u);
}

TEST(Surrounds, EmpiricalFailsOutsideHull) {
  const std::vector<double> xs{-1.0, 0.0, 1.0, 2.0};
  const auto e = MajorityModel::empirical_1d(xs);
  const auto in = surrounds_check(e, std::vector<double>{0.5}, 0.1);
  EXPECT_TRUE(in.satisfied);
  EXPECT_DOUBLE_EQ(in.worst_mass, 0.5);
  EXPECT_FALSE(surrounds_check(e, std::vector<double>{2.5}, 0.1).satisfied);
}

TEST(Surrounds, MultivariateGaussianUsesWorstDirection) {
  const auto g = MajorityModel::gaussian({0.0, 0.0}, SpdMatrix{{1.0, 0.0}, {0.0, 1.0}});
  const auto r = surrounds_check(g, std::vector<double>{1.0, 0.0}, 0.1, 512);
  EXPECT_TRUE(r.satisfied);
  // Worst direction is +e1 which is one of the axes checked.
  EXPECT_NEAR(r.worst_mass, 1.0 - normal_cdf(1.1), 1e-12);
}

TEST(SphereDirections, UnitVectorsIncludingAxes) {
  const auto dirs = sphere_directions(3, 100);
  EXPECT_EQ(dirs.size(), 106u);
  for (const Vector& w : dirs) EXPECT_NEAR(norm2(w), 1.0, 1e-14);
  EXPECT_EQ(sphere_directions(1, 10).size(), 2u);
}
