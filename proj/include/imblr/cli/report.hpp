#pragma once

#include <json.hpp>
#include <ostream>
#include <span>
#include <string>

#include "imblr/asymptotics.hpp"
#include "imblr/cli/config.hpp"
#include "imblr/logistic.hpp"
#include "imblr/montecarlo.hpp"

namespace imblr::cli {

using Json = nlohmann::ordered_json;

/// 17 significant digits; round-trips every double.
std::string machine(double value);
/// 6 significant digits for summaries.
std::string human(double value);
std::string human(std::span<const double> values);

Json to_json(const FitResult& fit);
Json to_json(const LimitInference& limit);
Json to_json(const ConfidenceInterval& ci);
Json to_json(const MCRecord& record);
Json matrix_json(const Matrix& m);

/// JSON is pretty-printed. CSV is a `key,value` table keyed by JSON pointer,
/// so both formats carry the same numbers.
std::string render(const Json& report, OutputFormat format);

/// ECDF table for one coordinate: value, ecdf, theoretical_cdf with the
/// limiting N(0, variance) as reference.
std::string render_ecdf(std::span<const double> standardized, double variance);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace imblr::cli
