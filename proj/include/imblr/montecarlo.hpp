#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "imblr/asymptotics.hpp"
#include "imblr/distributions.hpp"
#include "imblr/error.hpp"
#include "imblr/logistic.hpp"

namespace imblr {

// Right-continuous empirical distribution function.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> values);

  /// Fraction of values <= x.
  double operator()(double x) const;
  /// Fraction of values < x.
  double left_limit(double x) const;

  const std::vector<double>& sorted_values() const noexcept { return sorted_; }
  std::size_t size() const noexcept { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

/// Throws EmptyInput for an empty range.
Ecdf ecdf(std::span<const double> values);

/// sup over sample points x of max(|F(x) - cdf(x)|, |F(x-) - cdf(x)|).
double ks_distance(const Ecdf& empirical, const std::function<double(double)>& cdf);

struct MCConfig {
  MajorityModel model;
  MinoritySample minority;
  std::vector<std::size_t> N_grid;
  std::size_t replicates = 100;
  std::uint64_t seed = 0;
  double theta = 0.05;
  unsigned threads = 1;
  FitOptions fit_options;
};

struct FitFailure {
  std::size_t replicate;
  ErrorCode code;
};

struct MCRecord {
  std::size_t N = 0;
  // Converged replicates only, ordered by replicate index.
  std::vector<std::size_t> replicate_index;
  std::vector<Vector> beta_draws;
  std::vector<double> alpha_draws;
  std::vector<Vector> standardized;  // sqrt(N) (beta_N - beta*)
  Vector ks_per_coordinate;
  double ks = 0.0;
  double coverage = 0.0;
  double mean_alpha_decay = 0.0;  // average of N e^{alpha_N}
  ConfidenceInterval interval;
  std::vector<FitFailure> failures;
};

struct MCReport {
  LimitInference limit;
  double theta = 0.05;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  std::vector<MCRecord> records;
};

/// For every N and replicate r: draw N majority points from the RNG stream
/// (per-N seed, r), fit the logistic regression and compare sqrt(N)(beta_N
/// - beta*) with N(0, Sigma). Fits that fail are counted, not fatal. The
/// report is identical for any thread count. Throws LimitSolveFailed when
/// the limit itself cannot be computed.
MCReport run_experiment(const MCConfig& config);

struct AlphaDecayRow {
  std::size_t N;
  double mean_alpha_decay;
  std::size_t converged;
};

std::vector<AlphaDecayRow> alpha_decay_scan(const MCConfig& config);

/// Seed used for the N-th grid entry; replicate r then uses stream r.
std::uint64_t grid_seed(std::uint64_t master, std::size_t N);

}  // namespace imblr
