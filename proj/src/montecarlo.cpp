#include "imblr/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "imblr/numerics/normal.hpp"

namespace imblr {

Ecdf::Ecdf(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw Error(ErrorCode::EmptyInput, "ECDF needs at least one value");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double Ecdf::left_limit(double x) const {
  const auto it = std::lower_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

Ecdf ecdf(std::span<const double> values) { return Ecdf({values.begin(), values.end()}); }

double ks_distance(const Ecdf& empirical, const std::function<double(double)>& cdf) {
  const auto& v = empirical.sorted_values();
  const double n = static_cast<double>(v.size());
  double sup = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double f = cdf(v[i]);
    const double below = static_cast<double>(i) / n;
    const double at = static_cast<double>(j) / n;
    sup = std::max({sup, std::abs(at - f), std::abs(below - f)});
    i = j;
  }
  return sup;
}

std::uint64_t grid_seed(std::uint64_t master, std::size_t N) {
  return splitmix64(master ^ splitmix64(0x5eed0000ULL + N));
}

namespace {

struct Outcome {
  bool ok = false;
  FitResult fit;
  ErrorCode code = ErrorCode::MaxIterations;
};

void validate(const MCConfig& config) {
  if (config.replicates < 2) throw Error(ErrorCode::InvalidArgument, "need at least 2 replicates");
  if (config.N_grid.empty()) throw Error(ErrorCode::InvalidArgument, "N grid is empty");
  for (std::size_t N : config.N_grid) {
    if (N < config.minority.size()) {
      std::ostringstream os;
      os << "N = " << N << " is smaller than the minority size " << config.minority.size();
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
  }
  if (!(config.theta > 0.0 && config.theta < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "theta must lie in (0, 1)");
  }
  if (config.minority.dim() != config.model.dim()) {
    throw Error(ErrorCode::InvalidArgument, "minority and model dimensions differ");
  }
}

Outcome run_replicate(const MCConfig& config, std::size_t N, std::size_t r) {
  Rng rng(grid_seed(config.seed, N), r);
  Outcome out;
  try {
    const Matrix majority = sample_majority(config.model, N, rng);
    const LogisticData data(majority, config.minority);
    out.fit = fit(data, config.fit_options);
    out.ok = true;
  } catch (const Error& e) {
    out.code = e.code();
  }
  return out;
}

std::vector<Outcome> run_grid_point(const MCConfig& config, std::size_t N) {
  std::vector<Outcome> outcomes(config.replicates);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(config.replicates)));
  if (workers == 1) {
    for (std::size_t r = 0; r < config.replicates; ++r) outcomes[r] = run_replicate(config, N, r);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t r = next.fetch_add(1); r < config.replicates; r = next.fetch_add(1)) {
        outcomes[r] = run_replicate(config, N, r);
      }
    });
  }
  for (auto& t : pool) t.join();
  return outcomes;
}

}  // namespace

MCReport run_experiment(const MCConfig& config) {
  validate(config);
  MCReport report;
  report.theta = config.theta;
  report.replicates = config.replicates;
  report.seed = config.seed;
  try {
    report.limit = limit_inference(config.model, config.minority.mean());
  } catch (const Error& e) {
    throw Error(ErrorCode::LimitSolveFailed,
                std::string("limit computation failed: ") + std::string(to_string(e.code())) + ": " +
                    e.what());
  }
  const LimitInference& limit = report.limit;
  const std::size_t d = config.model.dim();

  for (std::size_t N : config.N_grid) {
    const std::vector<Outcome> outcomes = run_grid_point(config, N);
    MCRecord rec;
    rec.N = N;
    rec.interval = confidence_interval(limit, N, config.theta);
    const double root_n = std::sqrt(static_cast<double>(N));
    std::size_t covered = 0;
    double decay = 0.0;
    for (std::size_t r = 0; r < outcomes.size(); ++r) {
      const Outcome& o = outcomes[r];
      if (!o.ok) {
        rec.failures.push_back({r, o.code});
        continue;
      }
      rec.replicate_index.push_back(r);
      rec.beta_draws.push_back(o.fit.beta);
      rec.alpha_draws.push_back(o.fit.alpha);
      Vector z(d);
      for (std::size_t k = 0; k < d; ++k) z[k] = root_n * (o.fit.beta[k] - limit.beta_star[k]);
      rec.standardized.push_back(std::move(z));
      if (rec.interval.contains(o.fit.beta)) ++covered;
      decay += static_cast<double>(N) * std::exp(o.fit.alpha);
    }
    const std::size_t ok = rec.beta_draws.size();
    rec.ks_per_coordinate.assign(d, 1.0);
    if (ok > 0) {
      rec.coverage = static_cast<double>(covered) / static_cast<double>(ok);
      rec.mean_alpha_decay = decay / static_cast<double>(ok);
      std::vector<double> column(ok);
      for (std::size_t k = 0; k < d; ++k) {
        for (std::size_t i = 0; i < ok; ++i) column[i] = rec.standardized[i][k];
        const double sd = std::sqrt(limit.Sigma(k, k));
        rec.ks_per_coordinate[k] =
            ks_distance(ecdf(column), [sd](double x) { return normal_cdf(x / sd); });
      }
      rec.ks = *std::max_element(rec.ks_per_coordinate.begin(), rec.ks_per_coordinate.end());
    } else {
      rec.ks = 1.0;
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

std::vector<AlphaDecayRow> alpha_decay_scan(const MCConfig& config) {
  const MCReport report = run_experiment(config);
  std::vector<AlphaDecayRow> rows;
  rows.reserve(report.records.size());
  for (const MCRecord& rec : report.records) {
    rows.push_back({rec.N, rec.mean_alpha_decay, rec.beta_draws.size()});
  }
  return rows;
}

}  // namespace imblr
