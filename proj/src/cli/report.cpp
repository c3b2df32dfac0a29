#include "imblr/cli/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "imblr/error.hpp"
#include "imblr/numerics/normal.hpp"

namespace imblr::cli {

namespace {

std::string format(double value, int digits) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, value);
  return buf;
}

Json vector_json(std::span<const double> v) { return Json(std::vector<double>(v.begin(), v.end())); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string scalar_text(const Json& v) {
  if (v.is_number_float()) return machine(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

std::string machine(double value) { return format(value, 17); }
std::string human(double value) { return format(value, 6); }

std::string human(std::span<const double> values) {
  std::string s = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ", ";
    s += human(values[i]);
  }
  return s + "]";
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i)));
  return rows;
}

Json to_json(const FitResult& fit) {
  Json j;
  j["alpha"] = fit.alpha;
  j["beta"] = vector_json(fit.beta);
  j["grad_norm"] = fit.grad_norm;
  j["iterations"] = fit.iterations;
  j["converged"] = fit.converged;
  j["N"] = fit.N;
  j["n"] = fit.n;
  return j;
}

Json to_json(const LimitInference& limit) {
  Json j;
  j["xbar"] = vector_json(limit.xbar);
  j["beta_star"] = vector_json(limit.beta_star);
  j["sigma"] = matrix_json(limit.Sigma.matrix());
  j["H"] = matrix_json(limit.H.matrix());
  j["V"] = matrix_json(limit.V.matrix());
  return j;
}

Json to_json(const ConfidenceInterval& ci) {
  Json j;
  j["N"] = ci.N;
  j["level"] = ci.level;
  Vector half(ci.lower.size());
  for (std::size_t k = 0; k < half.size(); ++k) half[k] = 0.5 * (ci.upper[k] - ci.lower[k]);
  j["half_width"] = vector_json(half);
  j["lower"] = vector_json(ci.lower);
  j["upper"] = vector_json(ci.upper);
  return j;
}

Json to_json(const MCRecord& record) {
  Json j;
  j["N"] = record.N;
  j["converged"] = record.beta_draws.size();
  j["failures"] = record.failures.size();
  j["ks"] = record.ks;
  j["ks_per_coordinate"] = vector_json(record.ks_per_coordinate);
  j["coverage"] = record.coverage;
  j["mean_alpha_decay"] = record.mean_alpha_decay;
  j["interval"] = to_json(record.interval);
  Json failed = Json::array();
  for (const FitFailure& f : record.failures) {
    failed.push_back({{"replicate", f.replicate}, {"code", std::string(to_string(f.code))}});
  }
  j["failed_replicates"] = std::move(failed);
  return j;
}

std::string render(const Json& report, OutputFormat format) {
  if (format == OutputFormat::json) return report.dump(2) + "\n";
  // flatten() goes through the unordered json type; keep the report's own
  // key order by walking it instead.
  std::ostringstream os;
  os << "key,value\n";
  auto walk = [&](auto&& self, const Json& node, const std::string& path) -> void {
    if (node.is_object()) {
      for (const auto& [k, v] : node.items()) self(self, v, path + "/" + k);
    } else if (node.is_array()) {
      for (std::size_t i = 0; i < node.size(); ++i) self(self, node[i], path + "/" + std::to_string(i));
    } else {
      os << csv_field(path) << ',' << csv_field(scalar_text(node)) << '\n';
    }
  };
  walk(walk, report, "");
  return os.str();
}

std::string render_ecdf(std::span<const double> standardized, double variance) {
  const Ecdf f = ecdf(standardized);
  const double sd = std::sqrt(variance);
  std::ostringstream os;
  os << "value,ecdf,theoretical_cdf\n";
  for (double v : f.sorted_values()) {
    os << machine(v) << ',' << machine(f(v)) << ',' << machine(normal_cdf(v / sd)) << '\n';
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write to " + path + " failed");
}

}  // namespace imblr::cli
