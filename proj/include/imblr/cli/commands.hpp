#pragma once

#include <ostream>
#include <span>
#include <string>

#include "imblr/cli/config.hpp"
#include "imblr/cli/report.hpp"
#include "imblr/distributions.hpp"
#include "imblr/error.hpp"

namespace imblr::cli {

/// 0 success, 2 parse/config error, 3 numerical failure, 4 overflow.
int exit_code(ErrorCode code);

/// Parses `args` (without the program name), runs the command and returns
/// the exit status. Errors are reported on `err` as one line:
///   error: <Code>: <message>
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

MajorityModel build_model(const RunConfig& config);
MinoritySample build_minority(const RunConfig& config);

// Each command prints a human summary to `out` (unless the report itself
// goes to stdout via --out -) and returns the structured report.
Json cmd_fit(const RunConfig& config, std::ostream& out);
Json cmd_limit(const RunConfig& config, std::ostream& out);
Json cmd_simulate(const RunConfig& config, std::ostream& out);
Json cmd_coverage(const RunConfig& config, std::ostream& out);
Json cmd_plan(const RunConfig& config, std::ostream& out);
Json cmd_sample(const RunConfig& config, std::ostream& out);

}  // namespace imblr::cli
