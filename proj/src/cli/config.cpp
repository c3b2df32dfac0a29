#include "imblr/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "imblr/error.hpp"

namespace imblr::cli {

namespace {

const std::set<std::string> kKnownKeys = {
    "model", "mu",     "sigma",  "cov",     "xbar", "minority", "minority-file", "data",
    "n-grid", "replicates", "seed", "theta", "epsilon", "out", "format", "threads", "count"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::ConfigError, "invalid value '" + value + "' for " + key + ": " + why);
}

double parse_double(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v)) {
    bad_value(key, text, "expected a finite number");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    bad_value(key, text, "expected a non-negative integer");
  }
  return v;
}

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::fit: return "fit";
    case Command::limit: return "limit";
    case Command::simulate: return "simulate";
    case Command::coverage: return "coverage";
    case Command::plan: return "plan";
    case Command::sample: return "sample";
  }
  return "unknown";
}

Settings read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  Settings settings;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError,
                  path + ":" + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    if (!kKnownKeys.contains(key)) {
      throw Error(ErrorCode::ConfigError,
                  path + ":" + std::to_string(number) + ": unknown key '" + key + "'");
    }
    settings[key] = trim(t.substr(eq + 1));
  }
  return settings;
}

Vector parse_vector(const std::string& text, const std::string& key) {
  Vector v;
  for (const std::string& part : split(text, ',')) v.push_back(parse_double(part, key));
  if (v.empty()) bad_value(key, text, "expected a comma-separated list of numbers");
  return v;
}

Matrix parse_matrix(const std::string& text, const std::string& key) {
  if (text.find(';') != std::string::npos) {
    const auto rows = split(text, ';');
    std::vector<double> data;
    std::size_t cols = 0;
    for (const auto& r : rows) {
      const Vector row = parse_vector(r, key);
      if (cols == 0) cols = row.size();
      if (row.size() != cols) bad_value(key, text, "rows have different lengths");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Matrix::from_rows(rows.size(), cols, std::move(data));
  }
  Vector flat = parse_vector(text, key);
  const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
  if (d * d != flat.size()) bad_value(key, text, "expected d*d entries or ';'-separated rows");
  return Matrix::from_rows(d, d, std::move(flat));
}

Matrix parse_points(const std::string& text, const std::string& key) {
  const auto groups = split(text, ';');
  std::vector<double> data;
  std::size_t cols = 0;
  for (const auto& g : groups) {
    const Vector p = parse_vector(g, key);
    if (cols == 0) cols = p.size();
    if (p.size() != cols) bad_value(key, text, "points have different dimensions");
    data.insert(data.end(), p.begin(), p.end());
  }
  return Matrix::from_rows(groups.size(), cols, std::move(data));
}

RunConfig build_config(Command command, const Settings& settings) {
  RunConfig c;
  c.command = command;
  for (const auto& [key, value] : settings) {
    if (!kKnownKeys.contains(key)) throw Error(ErrorCode::ConfigError, "unknown setting '" + key + "'");
    if (key == "model") {
      if (value != "gaussian" && value != "empirical" && value != "density") {
        bad_value(key, value, "expected gaussian, empirical or density");
      }
      c.model = value;
    } else if (key == "mu") {
      c.mu = parse_vector(value, key);
    } else if (key == "sigma") {
      c.sigma = parse_double(value, key);
      if (!(*c.sigma > 0.0)) bad_value(key, value, "sigma must be positive");
    } else if (key == "cov") {
      c.cov = parse_matrix(value, key);
    } else if (key == "xbar") {
      c.xbar = parse_vector(value, key);
    } else if (key == "minority") {
      c.minority = parse_points(value, key);
    } else if (key == "minority-file") {
      c.minority_file = value;
    } else if (key == "data") {
      c.data = value;
    } else if (key == "n-grid") {
      for (const auto& part : split(value, ',')) {
        const std::uint64_t n = parse_unsigned(part, key);
        if (n == 0) bad_value(key, value, "grid entries must be positive");
        c.n_grid.push_back(static_cast<std::size_t>(n));
      }
    } else if (key == "replicates") {
      c.replicates = static_cast<std::size_t>(parse_unsigned(value, key));
    } else if (key == "seed") {
      c.seed = parse_unsigned(value, key);
    } else if (key == "theta") {
      c.theta = parse_double(value, key);
      if (!(c.theta > 0.0 && c.theta < 1.0)) bad_value(key, value, "theta must lie in (0, 1)");
    } else if (key == "epsilon") {
      c.epsilon = parse_double(value, key);
      if (!(*c.epsilon > 0.0)) bad_value(key, value, "epsilon must be positive");
    } else if (key == "out") {
      c.out = value;
    } else if (key == "format") {
      if (value == "csv") {
        c.format = OutputFormat::csv;
      } else if (value == "json") {
        c.format = OutputFormat::json;
      } else {
        bad_value(key, value, "expected csv or json");
      }
    } else if (key == "threads") {
      const std::uint64_t t = parse_unsigned(value, key);
      if (t == 0 || t > 1024) bad_value(key, value, "threads must be between 1 and 1024");
      c.threads = static_cast<unsigned>(t);
    } else if (key == "count") {
      c.count = static_cast<std::size_t>(parse_unsigned(value, key));
      if (c.count == 0) bad_value(key, value, "count must be positive");
    }
  }
  return c;
}

}  // namespace imblr::cli
