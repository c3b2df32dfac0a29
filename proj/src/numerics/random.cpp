#include "imblr/numerics/random.hpp"

#include <vector>

#include "imblr/error.hpp"

namespace imblr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(stream ^ 0xd1b54a32d192ed03ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), engine_(seeded_engine(seed, stream)) {}

std::size_t Rng::index(std::size_t count) {
  std::uniform_int_distribution<std::size_t> dist(0, count - 1);
  return dist(engine_);
}

Vector mvn_sample(std::span<const double> mean, const SpdMatrix& cov, Rng& rng) {
  if (mean.size() != cov.dim()) {
    throw Error(ErrorCode::InvalidArgument, "mean and covariance dimensions differ");
  }
  const Matrix chol = cholesky(cov);
  Vector out(mean.size());
  mvn_sample(mean, chol, rng, out);
  return out;
}

void mvn_sample(std::span<const double> mean, const Matrix& chol, Rng& rng, std::span<double> out) {
  const std::size_t d = mean.size();
  double zbuf[16];
  std::vector<double> zheap;
  double* z = zbuf;
  if (d > 16) {
    zheap.resize(d);
    z = zheap.data();
  }
  for (std::size_t i = 0; i < d; ++i) z[i] = rng.normal();
  for (std::size_t i = 0; i < d; ++i) {
    double s = mean[i];
    for (std::size_t k = 0; k <= i; ++k) s += chol(i, k) * z[k];
    out[i] = s;
  }
}

}  // namespace imblr
