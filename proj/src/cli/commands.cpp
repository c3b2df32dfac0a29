#include "imblr/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "imblr/asymptotics.hpp"
#include "imblr/cli/dataset.hpp"
#include "imblr/logistic.hpp"
#include "imblr/montecarlo.hpp"
#include "imblr/numerics/normal.hpp"

namespace imblr::cli {

namespace {

constexpr double kSurroundsEpsilon = 0.1;

const std::vector<std::size_t> kDefaultGrid = {100, 200, 500, 1000, 5000};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

bool report_to_stdout(const RunConfig& c) { return c.out == "-"; }

void emit(const RunConfig& c, const Json& report, std::ostream& out) {
  if (c.out.empty()) return;
  const std::string text = render(report, c.format);
  if (report_to_stdout(c)) {
    out << text;
  } else {
    write_text_file(c.out, text);
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string hint_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SeparationSuspected:
      return "; hint: add majority points on every side of the minority points or check the labels";
    case ErrorCode::NoInteriorSolution:
      return "; hint: xbar must lie inside the convex hull of the majority support";
    default:
      return "";
  }
}

std::size_t minority_dim_hint(const RunConfig& c) {
  if (c.xbar) return c.xbar->size();
  if (c.minority) return c.minority->cols();
  return 0;
}

Json surrounds_json(const SurroundsReport& s, double epsilon, std::size_t n) {
  Json j;
  j["epsilon"] = epsilon;
  j["satisfied"] = s.satisfied;
  j["worst_mass"] = s.worst_mass;
  if (s.worst_mass > 0.0) j["decay_bound"] = 2.0 * static_cast<double>(n) / s.worst_mass;
  return j;
}

MCReport run_mc(const RunConfig& c, const MajorityModel& model, const MinoritySample& minority) {
  MCConfig mc{model, minority, c.n_grid.empty() ? kDefaultGrid : c.n_grid, c.replicates, c.seed,
              c.theta, c.threads, {}};
  return run_experiment(mc);
}

Json experiment_json(const RunConfig& c, const MCReport& report, const SurroundsReport& s,
                     std::size_t n, const char* command) {
  Json j;
  j["command"] = command;
  j["seed"] = report.seed;
  j["replicates"] = report.replicates;
  j["theta"] = report.theta;
  j["model"] = c.model;
  j["limit"] = to_json(report.limit);
  j["surrounds"] = surrounds_json(s, kSurroundsEpsilon, n);
  Json records = Json::array();
  for (const MCRecord& r : report.records) records.push_back(to_json(r));
  j["records"] = std::move(records);
  return j;
}

void print_experiment(std::ostream& h, const MCReport& report) {
  h << "beta* = " << human(report.limit.beta_star) << "\n";
  h << "N        converged  ks        coverage  mean N*exp(alpha)\n";
  for (const MCRecord& r : report.records) {
    std::ostringstream row;
    row << r.N;
    std::string line = row.str();
    line.resize(9, ' ');
    h << line;
    auto col = [&](const std::string& s, std::size_t w) {
      std::string t = s;
      if (t.size() < w) t.resize(w, ' ');
      h << t << ' ';
    };
    col(std::to_string(r.beta_draws.size()) + "/" + std::to_string(report.replicates), 10);
    col(human(r.ks), 9);
    col(human(r.coverage), 9);
    h << human(r.mean_alpha_decay) << "\n";
  }
}

}  // namespace

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::DomainError:
    case ErrorCode::UnsupportedDimension:
    case ErrorCode::InvalidModel:
    case ErrorCode::EmptyInput:
    case ErrorCode::ParseError:
    case ErrorCode::ConfigError:
    case ErrorCode::IoError:
      return 2;
    case ErrorCode::NotPositiveDefinite:
    case ErrorCode::SeparationSuspected:
    case ErrorCode::MaxIterations:
    case ErrorCode::NoInteriorSolution:
    case ErrorCode::DegenerateHessian:
    case ErrorCode::LimitSolveFailed:
      return 3;
    case ErrorCode::MomentOverflow:
    case ErrorCode::Overflow:
      return 4;
  }
  return 3;
}

MajorityModel build_model(const RunConfig& c) {
  if (c.model == "gaussian") {
    if (c.cov && c.sigma) config_error("give either --sigma or --cov, not both");
    std::size_t d = 0;
    if (c.cov) {
      d = c.cov->rows();
    } else if (c.mu) {
      d = c.mu->size();
    } else {
      d = std::max<std::size_t>(1, minority_dim_hint(c));
    }
    Vector mu = c.mu.value_or(Vector(d, 0.0));
    if (mu.size() != d) config_error("--mu has " + std::to_string(mu.size()) + " entries, expected " + std::to_string(d));
    Matrix cov = c.cov.value_or(Matrix());
    if (!c.cov) {
      const double s = c.sigma.value_or(1.0);
      cov = Matrix(d, d, 0.0);
      for (std::size_t i = 0; i < d; ++i) cov(i, i) = s * s;
    }
    try {
      return MajorityModel::gaussian(std::move(mu), SpdMatrix(cov));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotPositiveDefinite || e.code() == ErrorCode::InvalidArgument) {
        config_error(std::string("--cov is not a valid covariance: ") + e.what());
      }
      throw;
    }
  }
  if (c.mu || c.sigma || c.cov) config_error("--mu, --sigma and --cov only apply to --model gaussian");
  if (c.data.empty()) config_error("--model " + c.model + " needs --data");
  if (c.model == "empirical") return MajorityModel::empirical(read_points(c.data, 0));
  auto table = std::make_shared<const DensityTable>(read_density_table(c.data));
  return MajorityModel::density([table](double x) { return interpolate(*table, x); },
                                Interval{table->x.front(), table->x.back()});
}

MinoritySample build_minority(const RunConfig& c) {
  const int given = (c.xbar ? 1 : 0) + (c.minority ? 1 : 0) + (c.minority_file.empty() ? 0 : 1);
  if (given == 0) config_error("no minority specified: give --xbar, --minority or --minority-file");
  if (given > 1) config_error("give only one of --xbar, --minority and --minority-file");
  if (c.xbar) return MinoritySample::at(*c.xbar);
  if (c.minority) return MinoritySample(*c.minority);
  return MinoritySample(read_points(c.minority_file, 1));
}

Json cmd_fit(const RunConfig& c, std::ostream& out) {
  if (c.data.empty()) config_error("fit needs --data <dataset.csv>");
  const Dataset data = read_dataset(c.data);
  const Matrix majority = data.rows_with_label(0);
  const Matrix minority = data.rows_with_label(1);
  if (majority.rows() == 0) throw Error(ErrorCode::EmptyInput, c.data + ": no rows with y = 0");
  if (minority.rows() == 0) throw Error(ErrorCode::EmptyInput, c.data + ": no rows with y = 1");
  const FitResult result = fit(LogisticData(majority, MinoritySample(minority)));

  Json j;
  j["command"] = "fit";
  j["data"] = c.data;
  j.update(to_json(result));
  if (!report_to_stdout(c)) {
    out << "N = " << result.N << ", n = " << result.n << "\n"
        << "alpha_N = " << human(result.alpha) << "\n"
        << "beta_N = " << human(result.beta) << "\n"
        << "grad_norm = " << human(result.grad_norm) << "\n"
        << "iterations = " << result.iterations << "\n";
  }
  emit(c, j, out);
  return j;
}

Json cmd_limit(const RunConfig& c, std::ostream& out) {
  const MajorityModel model = build_model(c);
  const MinoritySample minority = build_minority(c);
  if (minority.dim() != model.dim()) config_error("minority and model dimensions differ");
  const LimitInference limit = limit_inference(model, minority.mean());
  const double eps = c.epsilon.value_or(kSurroundsEpsilon);
  const SurroundsReport s = surrounds_check(model, minority.mean(), eps);

  Json j;
  j["command"] = "limit";
  j["model"] = c.model;
  j["theta"] = c.theta;
  j.update(to_json(limit));
  j["surrounds"] = surrounds_json(s, eps, minority.size());
  Json intervals = Json::array();
  for (std::size_t N : c.n_grid) intervals.push_back(to_json(confidence_interval(limit, N, c.theta)));
  j["intervals"] = std::move(intervals);

  if (!report_to_stdout(c)) {
    out << "beta* = " << human(limit.beta_star) << "\n";
    const Matrix& sigma = limit.Sigma.matrix();
    for (std::size_t i = 0; i < sigma.rows(); ++i) {
      out << (i == 0 ? "Sigma = " : "        ") << human(sigma.row(i)) << "\n";
    }
    if (!s.satisfied) {
      out << "warning: the model does not surround xbar at epsilon = " << human(eps)
          << " (worst mass " << human(s.worst_mass) << ")\n";
    }
    for (std::size_t N : c.n_grid) {
      const ConfidenceInterval ci = confidence_interval(limit, N, c.theta);
      Vector half(ci.lower.size());
      for (std::size_t k = 0; k < half.size(); ++k) half[k] = 0.5 * (ci.upper[k] - ci.lower[k]);
      out << "N = " << N << ": " << human(ci.level * 100.0) << "% half-width " << human(half) << "\n";
    }
  }
  emit(c, j, out);
  return j;
}

Json cmd_simulate(const RunConfig& c, std::ostream& out) {
  if (c.out.empty() || c.out == "-") config_error("simulate needs --out <directory>");
  const MajorityModel model = build_model(c);
  const MinoritySample minority = build_minority(c);
  const MCReport report = run_mc(c, model, minority);
  const SurroundsReport s = surrounds_check(model, minority.mean(), kSurroundsEpsilon);

  namespace fs = std::filesystem;
  const fs::path dir(c.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + c.out + ": " + ec.message());

  const std::size_t d = model.dim();
  for (const MCRecord& r : report.records) {
    if (r.standardized.empty()) continue;
    std::vector<double> column(r.standardized.size());
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < column.size(); ++i) column[i] = r.standardized[i][k];
      std::string name = "ecdf_N" + std::to_string(r.N);
      if (d > 1) name += "_x" + std::to_string(k + 1);
      write_text_file((dir / (name + ".csv")).string(),
                      render_ecdf(column, report.limit.Sigma(k, k)));
    }
  }
  const Json j = experiment_json(c, report, s, minority.size(), "simulate");
  const char* ext = c.format == OutputFormat::json ? "summary.json" : "summary.csv";
  write_text_file((dir / ext).string(), render(j, c.format));
  print_experiment(out, report);
  return j;
}

Json cmd_coverage(const RunConfig& c, std::ostream& out) {
  const MajorityModel model = build_model(c);
  const MinoritySample minority = build_minority(c);
  const MCReport report = run_mc(c, model, minority);
  const SurroundsReport s = surrounds_check(model, minority.mean(), kSurroundsEpsilon);
  const Json j = experiment_json(c, report, s, minority.size(), "coverage");
  if (!report_to_stdout(c)) {
    out << "nominal level " << human(1.0 - c.theta) << "\n";
    print_experiment(out, report);
  }
  emit(c, j, out);
  return j;
}

Json cmd_plan(const RunConfig& c, std::ostream& out) {
  if (c.model != "gaussian") config_error("plan needs --model gaussian");
  if (c.cov) config_error("plan is one-dimensional; use --sigma instead of --cov");
  if (!c.xbar || c.xbar->size() != 1) config_error("plan needs a scalar --xbar");
  if (c.mu && c.mu->size() != 1) config_error("plan needs a scalar --mu");
  if (!c.epsilon) config_error("plan needs --epsilon");
  const double xbar = (*c.xbar)[0];
  const double mu = c.mu ? (*c.mu)[0] : 0.0;
  const double sigma = c.sigma.value_or(1.0);
  const double eps = *c.epsilon;
  const SampleSizePlan plan = plan_sample_size(xbar, mu, sigma, eps);
  const double z = (xbar - mu) / sigma;
  const double variance = sigma_1d_gaussian(xbar, mu, sigma);
  const double zq = normal_quantile(1.0 - 0.5 * c.theta);

  Json j;
  j["command"] = "plan";
  j["xbar"] = xbar;
  j["mu"] = mu;
  j["sigma"] = sigma;
  j["epsilon"] = eps;
  j["z"] = z;
  j["N"] = plan.n;
  j["exact"] = plan.exact;
  j["overflow"] = plan.overflow;
  j["variance"] = variance;
  j["theta"] = c.theta;
  if (!plan.overflow) {
    j["half_width"] = zq * std::sqrt(variance / static_cast<double>(plan.n));
  }

  if (!report_to_stdout(c)) {
    out << "z = " << human(z) << ", epsilon = " << human(eps) << "\n";
    if (plan.overflow) {
      out << "N overflows a 64-bit count (exp(2 z^2) / epsilon^2 = " << human(plan.exact) << ")\n";
    } else {
      out << "N = " << plan.n << "\n"
          << human((1.0 - c.theta) * 100.0) << "% half-width at that N: "
          << human(j["half_width"].get<double>()) << "\n";
    }
    if (!plan.overflow && plan.exact > 1e8) {
      out << "note: this exceeds 1e8, the order of magnitude often quoted for a minority mean"
             " three standard deviations out; exp(2 z^2) / epsilon^2 itself gives "
          << human(plan.exact) << "\n";
    }
  }
  emit(c, j, out);
  if (plan.overflow) {
    throw Error(ErrorCode::Overflow, "required sample size exceeds 2^63 (z = " + human(z) + ")");
  }
  return j;
}

Json cmd_sample(const RunConfig& c, std::ostream& out) {
  const MajorityModel model = build_model(c);
  Dataset data;
  std::optional<MinoritySample> minority;
  if (c.xbar || c.minority || !c.minority_file.empty()) minority = build_minority(c);
  if (minority && minority->dim() != model.dim()) config_error("minority and model dimensions differ");
  Rng rng(c.seed, 0);
  const Matrix majority = sample_majority(model, c.count, rng);
  const std::size_t n = minority ? minority->size() : 0;
  std::vector<double> values;
  values.reserve((n + majority.rows()) * model.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = minority->points().row(i);
    values.insert(values.end(), row.begin(), row.end());
    data.labels.push_back(1);
  }
  values.insert(values.end(), majority.values().begin(), majority.values().end());
  data.labels.insert(data.labels.end(), majority.rows(), 0);
  data.features = Matrix::from_rows(data.labels.size(), model.dim(), std::move(values));

  std::ostringstream csv;
  write_dataset(csv, data);
  if (c.out.empty() || c.out == "-") {
    out << csv.str();
  } else {
    write_text_file(c.out, csv.str());
    out << "wrote " << data.size() << " rows to " << c.out << "\n";
  }
  Json j;
  j["command"] = "sample";
  j["rows"] = data.size();
  j["seed"] = c.seed;
  return j;
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Infinitely imbalanced logistic regression: limits, fits and simulations", "imblr"};
  app.require_subcommand(1);
  app.fallthrough();

  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;
  auto opt = [&](const std::string& key, const std::string& help) {
    options[key] = app.add_option("--" + key, raw[key], help);
  };
  opt("model", "majority model: gaussian, empirical or density");
  opt("mu", "Gaussian mean, comma separated");
  opt("sigma", "Gaussian standard deviation (isotropic)");
  opt("cov", "Gaussian covariance, rows separated by ';'");
  opt("xbar", "minority mean (a single minority point)");
  opt("minority", "inline minority points, e.g. \"1,0;2,1\"");
  opt("minority-file", "CSV of minority points (rows with y = 1 if a y column exists)");
  opt("data", "dataset CSV (fit), majority points (empirical) or x,density table (density)");
  opt("n-grid", "comma separated majority sizes");
  opt("replicates", "Monte Carlo replicates per N");
  opt("seed", "master seed");
  opt("theta", "1 - confidence level");
  opt("epsilon", "target accuracy (plan) or surrounds margin (limit)");
  opt("out", "output file, directory (simulate) or - for stdout");
  opt("format", "csv or json");
  opt("threads", "worker threads for simulations");
  opt("count", "majority rows to draw (sample)");
  std::string config_path;
  app.add_option("--config", config_path, "key = value file; flags override it");

  const std::map<std::string, Command> names = {
      {"fit", Command::fit},           {"limit", Command::limit}, {"simulate", Command::simulate},
      {"coverage", Command::coverage}, {"plan", Command::plan},   {"sample", Command::sample}};
  const std::map<std::string, std::string> blurbs = {
      {"fit", "fit the logistic regression to a labelled dataset"},
      {"limit", "limiting slope, covariance and interval half-widths"},
      {"simulate", "Monte Carlo study with ECDF tables per N"},
      {"coverage", "Monte Carlo interval coverage per N"},
      {"plan", "majority sample size for a target accuracy"},
      {"sample", "export a simulated dataset"}};
  for (const auto& [name, cmd] : names) app.add_subcommand(name, blurbs.at(name));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << to_string(ErrorCode::ConfigError) << ": " << one_line(e.what()) << "\n";
    return exit_code(ErrorCode::ConfigError);
  }

  try {
    Settings settings;
    if (!config_path.empty()) settings = read_config_file(config_path);
    for (const auto& [key, option] : options) {
      if (option->count() > 0) settings[key] = raw[key];
    }
    Command command = Command::limit;
    for (const auto& [name, cmd] : names) {
      if (app.got_subcommand(name)) command = cmd;
    }
    const RunConfig config = build_config(command, settings);
    switch (command) {
      case Command::fit: cmd_fit(config, out); break;
      case Command::limit: cmd_limit(config, out); break;
      case Command::simulate: cmd_simulate(config, out); break;
      case Command::coverage: cmd_coverage(config, out); break;
      case Command::plan: cmd_plan(config, out); break;
      case Command::sample: cmd_sample(config, out); break;
    }
    out.flush();
    return 0;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << hint_for(e.code()) << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    err << "error: Internal: " << one_line(e.what()) << "\n";
    return 1;
  }
}

}  // namespace imblr::cli
