#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imblr/numerics/matrix.hpp"

namespace imblr::cli {

enum class Command { fit, limit, simulate, coverage, plan, sample };
enum class OutputFormat { csv, json };

std::string to_string(Command command);

// Fully typed settings for one invocation. Built from a flat key/value map
// in which command-line flags override entries from --config.
struct RunConfig {
  Command command = Command::limit;
  std::string model = "gaussian";  // gaussian | empirical | density
  std::optional<Vector> mu;
  std::optional<double> sigma;
  std::optional<Matrix> cov;
  std::optional<Vector> xbar;
  std::optional<Matrix> minority;  // inline --minority points
  std::string minority_file;
  std::string data;
  std::vector<std::size_t> n_grid;
  std::size_t replicates = 100;
  std::uint64_t seed = 1;
  double theta = 0.05;
  std::optional<double> epsilon;
  std::string out;
  OutputFormat format = OutputFormat::csv;
  unsigned threads = 1;
  std::size_t count = 1000;
};

using Settings = std::map<std::string, std::string>;

/// Reads `key = value` lines; blank lines and lines starting with '#' are
/// ignored. Throws ConfigError with the offending line number.
Settings read_config_file(const std::string& path);

/// Converts settings into a RunConfig. Unknown keys and malformed values
/// raise ConfigError.
RunConfig build_config(Command command, const Settings& settings);

Vector parse_vector(const std::string& text, const std::string& key);
/// "a,b;c,d" (rows separated by ';') or a flat list of d*d values.
Matrix parse_matrix(const std::string& text, const std::string& key);
/// "x1,y1;x2,y2" -> one point per ';'-separated group.
Matrix parse_points(const std::string& text, const std::string& key);

}  // namespace imblr::cli
