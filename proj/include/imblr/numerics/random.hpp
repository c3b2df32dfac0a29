#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "imblr/numerics/matrix.hpp"

namespace imblr {

// Seeded generator for one replicate. (seed, stream) pairs map to
// independent engine states via splitmix64, so replicate r of an experiment
// always sees the same sequence no matter which thread runs it.
// Not thread-safe: each task owns its own Rng.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::size_t index(std::size_t count);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

/// mean + L z with L = cholesky(cov) and z i.i.d. standard normal.
Vector mvn_sample(std::span<const double> mean, const SpdMatrix& cov, Rng& rng);

/// Same draw given a precomputed Cholesky factor; fills `out`.
void mvn_sample(std::span<const double> mean, const Matrix& chol, Rng& rng, std::span<double> out);

}  // namespace imblr
