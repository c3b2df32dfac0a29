#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "imblr/asymptotics.hpp"
#include "imblr/cli/commands.hpp"
#include "imblr/cli/dataset.hpp"
#include "imblr/numerics/normal.hpp"
#include "oracles.hpp"

using namespace imblr;
using namespace imblr::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_args(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("imblr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

 private:
  fs::path path_;
};

// Every numeric leaf of a JSON document keyed by JSON pointer.
void collect(const Json& j, const std::string& path, std::map<std::string, double>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) collect(v, path + "/" + k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) collect(j[i], path + "/" + std::to_string(i), out);
  } else if (j.is_number()) {
    out[path] = j.get<double>();
  }
}

std::map<std::string, double> csv_numbers(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "key,value");
  while (std::getline(in, line)) {
    const auto comma = line.rfind(',');
    const std::string value = line.substr(comma + 1);
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() && *end == '\0') out[line.substr(0, comma)] = v;
  }
  return out;
}

bool single_error_line(const std::string& err, const std::string& code) {
  return err.rfind("error: " + code + ": ", 0) == 0 && err.find('\n') == err.size() - 1;
}

std::string slurp(const std::string& path) { return read_file(path); }

}  // namespace

TEST(Config, ParsesValuesAndRejectsBadOnes) {
  const RunConfig c = build_config(Command::limit, {{"mu", "1,2"}, {"cov", "1,0.5;0.5,2"}, {"n-grid", "10,20"},
                                                    {"format", "json"}, {"threads", "3"}});
  EXPECT_EQ(*c.mu, (Vector{1, 2}));
  EXPECT_EQ(*c.cov, (Matrix{{1, 0.5}, {0.5, 2}}));
  EXPECT_EQ(c.n_grid, (std::vector<std::size_t>{10, 20}));
  EXPECT_EQ(c.format, OutputFormat::json);
  EXPECT_EQ(c.threads, 3u);
  EXPECT_EQ(*build_config(Command::limit, {{"cov", "1,0,0,1"}}).cov, Matrix::identity(2));
  for (const auto& [k, v] : std::vector<std::pair<std::string, std::string>>{
           {"theta", "1.5"}, {"sigma", "0"}, {"format", "xml"}, {"n-grid", "10,x"}, {"model", "t"},
           {"cov", "1,2,3"}, {"mu", "1e999"}, {"bogus", "1"}}) {
    try {
      build_config(Command::limit, {{k, v}});
      ADD_FAILURE() << k;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << k;
    }
  }
}

TEST(Config, FileIsOverriddenByFlags) {
  TempDir dir;
  const std::string cfg = dir.write("run.cfg", "# limits\nxbar = 2\nsigma = 1\n\nn-grid = 100\n");
  const Outcome from_file = run_args({"limit", "--config", cfg, "--out", "-", "--format", "json"});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_NEAR(Json::parse(from_file.out)["beta_star"][0].get<double>(), 2.0, 1e-10);
  const Outcome flags = run_args({"limit", "--config", cfg, "--xbar", "1", "--out", "-", "--format", "json"});
  ASSERT_EQ(flags.code, 0) << flags.err;
  EXPECT_NEAR(Json::parse(flags.out)["beta_star"][0].get<double>(), 1.0, 1e-10);
  const std::string bad = dir.write("bad.cfg", "xbar 2\n");
  const Outcome r = run_args({"limit", "--config", bad});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(single_error_line(r.err, "ConfigError")) << r.err;
  EXPECT_NE(r.err.find(":1:"), std::string::npos);
}

TEST(Dataset, RoundTripThroughSampleExport) {
  TempDir dir;
  const std::string path = dir.file("data.csv");
  const Outcome r = run_args({"sample", "--mu", "0.5,-1", "--cov", "1,0.2;0.2,0.7", "--minority", "1,0;2,1",
                          "--count", "250", "--seed", "8", "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset d = read_dataset(path);
  EXPECT_EQ(d.size(), 252u);
  EXPECT_EQ(d.dim(), 2u);
  EXPECT_EQ(d.rows_with_label(1), (Matrix{{1, 0}, {2, 1}}));
  std::ostringstream again;
  write_dataset(again, d);
  EXPECT_EQ(again.str(), slurp(path));
  const Dataset twice = parse_dataset(again.str(), "copy");
  EXPECT_EQ(twice.features, d.features);
  EXPECT_EQ(twice.labels, d.labels);
  // Same draws as the library sampler.
  Rng rng(8, 0);
  const Matrix maj = sample_majority(
      MajorityModel::gaussian({0.5, -1}, SpdMatrix{{1, 0.2}, {0.2, 0.7}}), 250, rng);
  EXPECT_EQ(d.rows_with_label(0), maj);
}

TEST(Dataset, ParseErrorsNameColumnOrLine) {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_dataset(text, "in.csv");
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError);
      return e.what();
    }
    return "";
  };
  EXPECT_NE(message("x1,x2\n1,2\n").find("missing label column 'y'"), std::string::npos);
  EXPECT_NE(message("y,x2\n1,2\n").find("'x1'"), std::string::npos);
  EXPECT_NE(message("y,x1\n1,2\n0,abc\n").find("in.csv:3"), std::string::npos);
  EXPECT_NE(message("y,x1\n1,2\n0\n").find("in.csv:3"), std::string::npos);
  EXPECT_NE(message("y,x1\n2,2\n").find("in.csv:2"), std::string::npos);
  EXPECT_NE(message("y,x1\n1,1,000\n").find("in.csv:2"), std::string::npos);
  const Dataset bom = parse_dataset("\xEF\xBB\xBFy,x1\n1,0.5\n0,-1e-3\n", "bom.csv");
  EXPECT_EQ(bom.size(), 2u);
}

TEST(Fit, SymmetricDataGivesZeroSlope) {
  TempDir dir;
  const std::string path = dir.write("sym.csv", "y,x1\n1,0\n0,-2\n0,-1\n0,1\n0,2\n0,-0.5\n0,0.5\n");
  const Outcome r = run_args({"fit", "--data", path, "--out", dir.file("fit.json"), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(slurp(dir.file("fit.json")));
  EXPECT_NEAR(j["beta"][0].get<double>(), 0.0, 1e-10);
  EXPECT_EQ(j["N"].get<int>(), 6);
  EXPECT_NE(r.out.find("alpha_N"), std::string::npos);
  EXPECT_NE(r.out.find("iterations"), std::string::npos);
}

TEST(Fit, MissingLabelColumnExitsTwo) {
  TempDir dir;
  const std::string path = dir.write("nolabel.csv", "x1\n0\n1\n");
  const Outcome r = run_args({"fit", "--data", path});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(single_error_line(r.err, "ParseError")) << r.err;
  EXPECT_NE(r.err.find("'y'"), std::string::npos);
}

TEST(Fit, SeparationExitsThreeWithHint) {
  TempDir dir;
  const std::string path = dir.write("sep.csv", "y,x1\n1,1\n0,-1\n0,-2\n0,-3\n");
  const Outcome r = run_args({"fit", "--data", path});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(single_error_line(r.err, "SeparationSuspected")) << r.err;
  EXPECT_NE(r.err.find("hint:"), std::string::npos);
}

TEST(Fit, ProtocolInstanceLandsInLimitInterval) {
  // N = 1000 Gaussian draws with one minority point at 1: beta_N should be
  // inside the 95% interval around beta* = 1 for most seeds.
  TempDir dir;
  const auto limit = limit_inference(MajorityModel::gaussian_1d(0, 1), std::vector<double>{1.0});
  const auto ci = confidence_interval(limit, 1000, 0.05);
  int inside = 0;
  const int seeds = 40;
  for (int seed = 1; seed <= seeds; ++seed) {
    const std::string path = dir.file("p" + std::to_string(seed) + ".csv");
    ASSERT_EQ(run_args({"sample", "--xbar", "1", "--count", "1000", "--seed", std::to_string(seed),
                        "--out", path}).code, 0);
    const Outcome r = run_args({"fit", "--data", path, "--out", "-", "--format", "json"});
    if (r.code != 0) continue;
    inside += ci.contains(Json::parse(r.out)["beta"].get<std::vector<double>>());
  }
  EXPECT_GE(inside, static_cast<int>(std::ceil(0.9 * seeds)));
}

TEST(Limit, GaussianUnitCase) {
  const Outcome r = run_args({"limit", "--mu", "0", "--sigma", "1", "--xbar", "1", "--n-grid", "100", "--out", "-",
                          "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j["beta_star"][0].get<double>(), 1.0, 1e-10);
  EXPECT_NEAR(j["sigma"][0][0].get<double>(), 5.43656, 5e-6);
  EXPECT_NEAR(j["intervals"][0]["half_width"][0].get<double>(), 1.959963984540054 * std::sqrt(2 * std::exp(1.0) / 100),
              1e-10);
  const Outcome human = run_args({"limit", "--xbar", "1"});
  EXPECT_NE(human.out.find("5.43656"), std::string::npos);
}

TEST(Limit, MinorityAtMeanGivesInverseVariance) {
  const Outcome r = run_args({"limit", "--mu", "0.5", "--sigma", "2", "--xbar", "0.5", "--out", "-", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j["beta_star"][0].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(j["sigma"][0][0].get<double>(), 0.25, 1e-12);
}

TEST(Limit, EmpiricalFileMatchesDirectSumOracle) {
  TempDir dir;
  const std::vector<double> xs{-2.1, -1.0, -0.3, 0.2, 0.4, 1.1, 1.9, 2.6};
  std::string text = "x1\n";
  for (double x : xs) text += machine(x) + "\n";
  const std::string path = dir.write("maj.csv", text);
  const Outcome r = run_args({"limit", "--model", "empirical", "--data", path, "--xbar", "0.3", "--out", "-",
                          "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  const double b = oracle::empirical_beta_star(xs, 0.3);
  EXPECT_NEAR(j["beta_star"][0].get<double>(), b, 1e-8);
  EXPECT_NEAR(j["sigma"][0][0].get<double>() / oracle::empirical_sigma(xs, 0.3, b), 1.0, 1e-8);
}

TEST(Limit, DensityTableModel) {
  TempDir dir;
  // Triangular density on [0, 2] peaking at 1.
  const std::string path = dir.write("tri.csv", "x,density\n0,0\n1,1\n2,0\n");
  const Outcome r = run_args({"limit", "--model", "density", "--data", path, "--xbar", "1", "--out", "-",
                          "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_NEAR(j["beta_star"][0].get<double>(), 0.0, 1e-8);
  // Symmetric about xbar: Sigma = 1 / Var = 6.
  EXPECT_NEAR(j["sigma"][0][0].get<double>(), 6.0, 1e-6);
}

TEST(Limit, OutsideSupportExitsThree) {
  TempDir dir;
  const std::string path = dir.write("maj.csv", "x1\n0\n1\n2\n");
  const Outcome r = run_args({"limit", "--model", "empirical", "--data", path, "--xbar", "3"});
  EXPECT_EQ(r.code, 3);
  EXPECT_TRUE(single_error_line(r.err, "NoInteriorSolution")) << r.err;
}

TEST(Plan, FormulaValuesAndNote) {
  auto n_of = [](const std::string& xbar) {
    const Outcome r = run_args({"plan", "--xbar", xbar, "--epsilon", "0.1", "--out", "-", "--format", "json"});
    EXPECT_EQ(r.code, 0) << r.err;
    return Json::parse(r.out)["N"].get<std::int64_t>();
  };
  EXPECT_EQ(n_of("0"), 100);
  EXPECT_EQ(n_of("1"), 739);
  EXPECT_EQ(n_of("3"), 6565996914);
  const Outcome human = run_args({"plan", "--xbar", "3", "--epsilon", "0.1"});
  EXPECT_NE(human.out.find("N = 6565996914"), std::string::npos);
  EXPECT_NE(human.out.find("1e8"), std::string::npos);
  const Outcome low = run_args({"plan", "--xbar", "1", "--epsilon", "0.1"});
  EXPECT_EQ(low.out.find("note:"), std::string::npos);
}

TEST(Plan, OverflowExitsFour) {
  const Outcome r = run_args({"plan", "--xbar", "6", "--epsilon", "0.1"});
  EXPECT_EQ(r.code, 4);
  EXPECT_TRUE(single_error_line(r.err, "Overflow")) << r.err;
}

TEST(Errors, EveryPathIsOneLineWithCode) {
  TempDir dir;
  const std::vector<std::pair<std::vector<std::string>, int>> cases = {
      {{}, 2},
      {{"limit", "--nope", "1"}, 2},
      {{"limit"}, 2},
      {{"limit", "--xbar", "1", "--theta", "2"}, 2},
      {{"limit", "--xbar", "1", "--cov", "1,2;2,1"}, 2},
      {{"limit", "--xbar", "1", "--sigma", "1", "--cov", "1"}, 2},
      {{"limit", "--model", "empirical", "--xbar", "1"}, 2},
      {{"limit", "--model", "empirical", "--data", dir.file("missing.csv"), "--xbar", "1"}, 2},
      {{"fit"}, 2},
      {{"plan", "--xbar", "1"}, 2},
      {{"simulate", "--xbar", "1"}, 2},
      {{"limit", "--xbar", "40"}, 3},
  };
  for (const auto& [args, code] : cases) {
    const Outcome r = run_args(args);
    EXPECT_EQ(r.code, code) << (args.empty() ? "<none>" : args[0]) << ": " << r.err;
    ASSERT_FALSE(r.err.empty());
    EXPECT_EQ(r.err.rfind("error: ", 0), 0u) << r.err;
    EXPECT_EQ(r.err.find('\n'), r.err.size() - 1) << r.err;
    // error: <Code>: message
    const auto colon = r.err.find(':', 7);
    ASSERT_NE(colon, std::string::npos);
    const std::string token = r.err.substr(7, colon - 7);
    EXPECT_TRUE(std::all_of(token.begin(), token.end(), [](char c) { return std::isalpha(c); })) << token;
  }
}

TEST(Help, ExitsZero) {
  const Outcome r = run_args({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Formats, JsonAndCsvCarryTheSameNumbers) {
  TempDir dir;
  const std::vector<std::vector<std::string>> commands = {
      {"limit", "--cov", "1,0.3;0.3,0.8", "--xbar", "0.4,0.2", "--n-grid", "100,1000"},
      {"plan", "--xbar", "1.3", "--mu", "0.1", "--sigma", "0.9", "--epsilon", "0.05"},
      {"coverage", "--xbar", "1", "--n-grid", "200", "--replicates", "10", "--seed", "3"},
  };
  for (auto args : commands) {
    auto as_json = args, as_csv = args;
    as_json.insert(as_json.end(), {"--out", dir.file("r.json"), "--format", "json"});
    as_csv.insert(as_csv.end(), {"--out", dir.file("r.csv"), "--format", "csv"});
    ASSERT_EQ(run_args(as_json).code, 0) << args[0];
    ASSERT_EQ(run_args(as_csv).code, 0) << args[0];
    std::map<std::string, double> from_json;
    collect(Json::parse(slurp(dir.file("r.json"))), "", from_json);
    const auto from_csv = csv_numbers(slurp(dir.file("r.csv")));
    ASSERT_EQ(from_json.size(), from_csv.size()) << args[0];
    for (const auto& [key, v] : from_json) {
      ASSERT_TRUE(from_csv.contains(key)) << key;
      EXPECT_LE(std::abs(v - from_csv.at(key)), 1e-12 * std::max(1.0, std::abs(v))) << key;
    }
  }
}

TEST(Simulate, SmokeRunWritesEcdfFiles) {
  TempDir dir;
  const auto start = std::chrono::steady_clock::now();
  const Outcome r = run_args({"simulate", "--xbar", "1", "--replicates", "2", "--n-grid", "100,200,500,1000,5000",
                          "--seed", "11", "--out", dir.file("sim")});
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(seconds, 5.0);
  for (int N : {100, 200, 500, 1000, 5000}) {
    const std::string path = dir.file("sim/ecdf_N" + std::to_string(N) + ".csv");
    ASSERT_TRUE(fs::exists(path)) << path;
    std::istringstream in(slurp(path));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "value,ecdf,theoretical_cdf");
    int rows = 0;
    double last_ecdf = 0;
    while (std::getline(in, line)) {
      ++rows;
      std::istringstream fields(line);
      std::string v, e, t;
      std::getline(fields, v, ',');
      std::getline(fields, e, ',');
      std::getline(fields, t, ',');
      EXPECT_NEAR(std::stod(t), normal_cdf(std::stod(v) / std::sqrt(2 * std::exp(1.0))), 1e-15);
      EXPECT_GE(std::stod(e), last_ecdf);
      last_ecdf = std::stod(e);
    }
    EXPECT_EQ(rows, 2);
    EXPECT_DOUBLE_EQ(last_ecdf, 1.0);
  }
  const auto summary = csv_numbers(slurp(dir.file("sim/summary.csv")));
  EXPECT_TRUE(summary.contains("/records/4/ks"));
  EXPECT_TRUE(summary.contains("/records/0/coverage"));
  EXPECT_TRUE(summary.contains("/records/2/mean_alpha_decay"));
}

TEST(Simulate, ByteIdenticalAcrossRunsAndThreads) {
  TempDir dir;
  auto sim = [&](const std::string& name, const std::string& threads) {
    const Outcome r = run_args({"simulate", "--xbar", "1.5", "--replicates", "12", "--n-grid", "100,400", "--seed",
                            "5", "--threads", threads, "--format", "json", "--out", dir.file(name)});
    EXPECT_EQ(r.code, 0) << r.err;
  };
  sim("a", "1");
  sim("b", "1");
  sim("c", "4");
  for (const std::string f : {"ecdf_N100.csv", "ecdf_N400.csv", "summary.json"}) {
    const std::string a = slurp(dir.file("a/" + f));
    EXPECT_EQ(a, slurp(dir.file("b/" + f))) << f;
    EXPECT_EQ(a, slurp(dir.file("c/" + f))) << f;
  }
}

TEST(Binary, RunsAsProcess) {
  const std::string cmd = std::string(IMBLR_CLI_BINARY) + " plan --xbar 1 --epsilon 0.1 > /dev/null 2>&1";
  EXPECT_EQ(std::system(cmd.c_str()), 0);
  const std::string bad = std::string(IMBLR_CLI_BINARY) + " plan --xbar 9 --epsilon 0.1 > /dev/null 2>&1";
  const int status = std::system(bad.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 4);
}
