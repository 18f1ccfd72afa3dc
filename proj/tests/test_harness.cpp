#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "maxcrps/harness.hpp"

#ifndef MAXCRPS_CLI_PATH
#error "MAXCRPS_CLI_PATH must name the command-line executable"
#endif

using namespace maxcrps;
namespace fs = std::filesystem;

namespace {

Json make_logistic(std::size_t replications) {
  Json j = Json::parse(R"({"schema_version": 1,
    "model": {"family": "logistic", "dimension": 3, "theta": [2.0, 0.6]},
    "n": 60, "directions": 80, "meat_samples": 1000, "seed": 5})");
  j["replications"] = replications;
  return j;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("maxcrps_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string command = std::string(MAXCRPS_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

TEST(Config, ErrorsNameTheField) {
  Json j = make_logistic(2);
  j["model"]["theta"] = Json::array({2.0, 1.5});
  try {
    (void)parse_experiment(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("config.model.theta"), std::string::npos) << e.what();
  }
  j = make_logistic(2);
  j["n"] = 0;
  EXPECT_THROW((void)parse_experiment(j), ConfigError);
  j = make_logistic(2);
  j["model"].erase("dimension");
  try {
    (void)parse_experiment(j);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("config.model.dimension"), std::string::npos) << e.what();
  }
  j = make_logistic(2);
  j["schema_version"] = 2;
  EXPECT_THROW((void)parse_experiment(j), ConfigError);
  j = make_logistic(2);
  j["model"]["family"] = "brown_resnick";
  EXPECT_THROW((void)parse_experiment(j), ConfigError);
  j = make_logistic(2);
  j["meat_samples"] = 10;
  EXPECT_THROW((void)parse_experiment(j), ConfigError);
}

TEST(Config, ModelFamilies) {
  const auto ml = parse_model(Json::parse(R"({"family": "max_linear", "theta": 1})"));
  EXPECT_EQ(model_dimension(ml), 3u);
  const auto sc = parse_model(Json::parse(
      R"({"family": "schlather", "correlation": "stable", "sites": [[0,0],[10,0],[0,10]],
          "theta": [20, 1], "monte_carlo_size": 100})"));
  EXPECT_EQ(model_dimension(sc), 3u);
  const auto rs = parse_model(Json::parse(
      R"({"family": "schlather", "random_sites": {"count": 6, "extent": 100, "seed": 3},
          "theta": [100, 1], "monte_carlo_size": 50})"));
  EXPECT_EQ(model_dimension(rs), 6u);
  EXPECT_THROW((void)parse_model(Json::parse(R"({"family": "schlather", "theta": [1, 1]})")), ConfigError);
  EXPECT_THROW((void)parse_model(Json::parse(R"({"family": "max_linear", "theta": 4})")), ConfigError);
  EXPECT_THROW((void)parse_model(Json::parse(
                   R"({"family": "schlather", "sites": [[0,0],[0,0]], "theta": [1, 1]})")),
               ConfigError);
}

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, RoundTripIsExact) {
  RngStream s(1, 0);
  const auto data = sample_logistic(s, {5.0, 0.7}, 5, 100);
  std::ostringstream out;
  write_observations_csv(out, data);
  std::istringstream in(out.str());
  const auto back = read_observations_csv(in);
  EXPECT_EQ(back.values(), data.values());
  EXPECT_EQ(back.labels(), data.labels());
  EXPECT_EQ(out.str().substr(0, 31), "site_1,site_2,site_3,site_4,sit");
}

TEST(Csv, ErrorsNameRowAndColumn) {
  std::istringstream bad("a,b\r\n1,2\r\n3,-4\r\n");
  try {
    (void)read_observations_csv(bad);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2, column 2"), std::string::npos) << e.what();
  }
  std::istringstream ragged("a,b\n1\n");
  EXPECT_THROW((void)read_observations_csv(ragged), DataError);
  std::istringstream text("a,b\n1,x\n");
  EXPECT_THROW((void)read_observations_csv(text), DataError);
  std::istringstream quoted("\"a,1\",b\n1,2\n");
  EXPECT_EQ(read_observations_csv(quoted).labels().front(), "a,1");
}

// ---------------------------------------------------------------------------
// Experiments

TEST(Experiment, IndependentOfWorkerCount) {
  Json j = make_logistic(6);
  const auto serial = parse_experiment(j);
  j["jobs"] = 4;
  const auto parallel = parse_experiment(j);
  EXPECT_EQ(summary_json(serial, run_experiment(serial)).dump(2), summary_json(parallel, run_experiment(parallel)).dump(2));
}

TEST(Experiment, AggregatesMatchReplicateRows) {
  const auto spec = parse_experiment(make_logistic(6));
  const auto report = run_experiment(spec);
  ASSERT_EQ(report.outcomes.size(), 6u);
  std::ostringstream csv;
  write_replicates_csv(csv, spec, report);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  std::vector<double> sigma;
  std::size_t covered = 0;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto f = detail::split_csv_record(line);
    ++rows;
    if (f[1] != "ok" || f[2] != "1") continue;
    sigma.push_back(std::stod(f[4]));
    if (!f[5].empty()) covered += std::stod(f[5]) <= 2.0 && 2.0 <= std::stod(f[6]);
  }
  EXPECT_EQ(rows, 6u);
  double mean = 0.0;
  for (const double x : sigma) mean += x;
  mean /= static_cast<double>(sigma.size());
  double ss = 0.0;
  for (const double x : sigma) ss += (x - mean) * (x - mean);
  const auto& p = report.parameters[0];
  EXPECT_NEAR(p.mean, mean, 1e-12);
  EXPECT_NEAR(p.sd * p.sd, ss / static_cast<double>(sigma.size() - 1), 1e-12);
  EXPECT_EQ(p.covered, covered);
  EXPECT_GE(p.coverage(), 0.0);
  EXPECT_LE(p.coverage(), 1.0);
}

TEST(Experiment, MaxLinearErrorRate) {
  Json j = Json::parse(R"({"model": {"family": "max_linear", "theta": 1},
    "n": 100, "replications": 10, "directions": 100, "seed": 2})");
  const auto spec = parse_experiment(j);
  const auto report = run_experiment(spec);
  ASSERT_TRUE(report.error_rate.has_value());
  EXPECT_GE(*report.error_rate, 0.0);
  EXPECT_LE(*report.error_rate, 1.0);
  EXPECT_EQ(report.successes, 10u);
}

TEST(Experiment, SummaryHasNoWallTime) {
  const auto spec = parse_experiment(make_logistic(1));
  const Json s = summary_json(spec, run_experiment(spec));
  EXPECT_FALSE(s.contains("wall_time_seconds"));
  EXPECT_FALSE(s["spec"].contains("jobs"));
  EXPECT_EQ(s["schema_version"], kSchemaVersion);
  EXPECT_TRUE(s["failures"].contains("count"));
}

// ---------------------------------------------------------------------------
// Dependence summaries

TEST(DepSummary, LogisticCoefficient) {
  const Json s = dependence_summary(parse_model(Json::parse(R"({"family": "logistic", "dimension": 5, "theta": [1, 0.7]})")));
  EXPECT_NEAR(s["extremal_coefficient"].get<double>(), std::pow(5.0, 0.7), 1e-12);
  EXPECT_EQ(s["covariation"].size(), 10u);
}

TEST(DepSummary, SchlatherNearCompleteDependence) {
  const Json s = dependence_summary(parse_model(Json::parse(
      R"({"family": "schlather", "sites": [[0,0],[1,0]], "theta": [1e12, 1], "monte_carlo_size": 5000})")));
  // Both fields coincide, so the estimate is the mean of sqrt(2 pi) W+ over
  // 5000 draws: mean 1, variance pi - 1.
  EXPECT_NEAR(s["extremal_coefficient"].get<double>(), 1.0, 4.0 * std::sqrt((std::numbers::pi - 1.0) / 5000.0));
}

TEST(DepSummary, IndependenceHasZeroCovariation) {
  const Json s = dependence_summary(parse_model(Json::parse(
      R"({"family": "max_linear", "candidates": [[[1,0],[0,1]]], "theta": 0})")));
  EXPECT_EQ(s["covariation"][0]["covariation"].get<double>(), 0.0);
}

TEST(DepSummary, NonStandardMarginsHaveNoCovariation) {
  const Json s = dependence_summary(parse_model(Json::parse(R"({"family": "max_linear", "theta": 1})")));
  EXPECT_TRUE(s["covariation"].is_null());
  EXPECT_DOUBLE_EQ(s["extremal_coefficient"].get<double>(), 3.0);
}

// ---------------------------------------------------------------------------
// Command line

TEST(Cli, SimulateIsDeterministicAndPositive) {
  const fs::path dir = scratch("simulate");
  write(dir / "c.json", R"({"schema_version": 1, "model": {"family": "logistic", "dimension": 5, "theta": [5, 0.7]},
                            "n": 100, "seed": 42})");
  ASSERT_EQ(run_cli("simulate --config " + (dir / "c.json").string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli("simulate --config " + (dir / "c.json").string() + " --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a" / "data.csv"), slurp(dir / "b" / "data.csv"));
  const auto data = read_observations_csv((dir / "a" / "data.csv").string());
  EXPECT_EQ(data.rows(), 100);
  EXPECT_EQ(data.dimension(), 5);
  const Json meta = Json::parse(slurp(dir / "a" / "data.meta.json"));
  EXPECT_EQ(meta["seed"], 42);
  const RngStream expected = replicate_stream(42, 0, DataStream::data);
  EXPECT_EQ(meta["provenance"]["seed"].get<std::uint64_t>(), expected.seed());
  EXPECT_EQ(meta["provenance"]["stream_id"].get<std::uint64_t>(), expected.stream_id());
}

TEST(Cli, SimulateMaxLinearDominance) {
  const fs::path dir = scratch("simulate_ml");
  write(dir / "c.json", R"({"model": {"family": "max_linear", "theta": 1}, "n": 500, "seed": 3})");
  ASSERT_EQ(run_cli("simulate --config " + (dir / "c.json").string() + " --out " + dir.string()), 0);
  const auto data = read_observations_csv((dir / "data.csv").string());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    EXPECT_LE(data.values()(i, 2), std::max(data.values()(i, 0), data.values()(i, 1)));
  }
}

TEST(Cli, FitExitCodes) {
  const fs::path dir = scratch("fit");
  write(dir / "c.json", R"({"model": {"family": "logistic", "dimension": 3, "theta": [2, 0.5]},
                            "n": 80, "directions": 100, "meat_samples": 1000, "seed": 9})");
  ASSERT_EQ(run_cli("simulate --config " + (dir / "c.json").string() + " --out " + dir.string()), 0);
  EXPECT_EQ(run_cli("fit --config " + (dir / "c.json").string() + " --data " + (dir / "data.csv").string() +
                    " --out " + (dir / "f1").string()),
            0);
  EXPECT_EQ(run_cli("fit --config " + (dir / "c.json").string() + " --data " + (dir / "data.csv").string() +
                    " --out " + (dir / "f2").string()),
            0);
  EXPECT_EQ(slurp(dir / "f1" / "fit.json"), slurp(dir / "f2" / "fit.json"));
  const Json fit = Json::parse(slurp(dir / "f1" / "fit.json"));
  EXPECT_TRUE(fit["converged"].get<bool>());
  EXPECT_EQ(fit["intervals"].size(), 2u);

  write(dir / "wide.json", R"({"model": {"family": "logistic", "dimension": 4, "theta": [2, 0.5]}, "seed": 9})");
  EXPECT_EQ(run_cli("fit --config " + (dir / "wide.json").string() + " --data " + (dir / "data.csv").string()), 3);

  write(dir / "slow.json", R"({"model": {"family": "logistic", "dimension": 3, "theta": [2, 0.5]},
                               "directions": 50, "fit": {"max_evaluations": 4}, "seed": 9})");
  EXPECT_EQ(run_cli("fit --config " + (dir / "slow.json").string() + " --data " + (dir / "data.csv").string() +
                    " --out " + (dir / "f3").string()),
            5);

  write(dir / "bad.csv", "site_1,site_2,site_3\n1,2,3\n1,0,3\n");
  EXPECT_EQ(run_cli("fit --config " + (dir / "c.json").string() + " --data " + (dir / "bad.csv").string()), 3);
  write(dir / "broken.json", R"({"model": {"family": "logistic"}})");
  EXPECT_EQ(run_cli("fit --config " + (dir / "broken.json").string() + " --data " + (dir / "data.csv").string()), 2);
  write(dir / "garbage.json", "{not json");
  EXPECT_EQ(run_cli("simulate --config " + (dir / "garbage.json").string()), 2);
}

TEST(Cli, ExperimentOutputsAndSeedOverride) {
  const fs::path dir = scratch("experiment");
  write(dir / "c.json", make_logistic(3).dump());
  ASSERT_EQ(run_cli("experiment --config " + (dir / "c.json").string() + " --jobs 1 --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli("experiment --config " + (dir / "c.json").string() + " --jobs 3 --out " + (dir / "b").string()), 0);
  EXPECT_EQ(slurp(dir / "a" / "summary.json"), slurp(dir / "b" / "summary.json"));
  EXPECT_EQ(slurp(dir / "a" / "replicates.csv"), slurp(dir / "b" / "replicates.csv"));
  EXPECT_TRUE(Json::parse(slurp(dir / "a" / "timing.json")).contains("wall_time_seconds"));
  ASSERT_EQ(run_cli("experiment --config " + (dir / "c.json").string() + " --seed 77 --out " + (dir / "c").string()), 0);
  const Json s = Json::parse(slurp(dir / "c" / "summary.json"));
  EXPECT_EQ(s["spec"]["seed"], 77);
}

TEST(Cli, DepSummaryRuns) {
  const fs::path dir = scratch("dep");
  write(dir / "c.json", R"({"model": {"family": "logistic", "dimension": 5, "theta": [1, 0.7]}})");
  EXPECT_EQ(run_cli("depsummary --config " + (dir / "c.json").string() + " --out " + dir.string()), 0);
  const Json s = Json::parse(slurp(dir / "depsummary.json"));
  EXPECT_NEAR(s["extremal_coefficient"].get<double>(), 3.0851693, 1e-7);
  EXPECT_EQ(run_cli("depsummary"), 2);
}
