// maxcrps: simulate, fit, experiment and depsummary front end.
//
// Exit status: 0 success, 2 configuration error, 3 data error,
// 4 numerical error, 5 fit did not converge.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "maxcrps/maxcrps.hpp"

namespace fs = std::filesystem;
using namespace maxcrps;

namespace {

constexpr int kExitNonConvergence = 5;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::string out = ".";
};

Json load_config(const CommonFlags& flags) {
  Json doc = read_json_file(flags.config);
  if (!doc.is_object()) throw ConfigError(flags.config + ": top level must be an object");
  if (flags.seed) doc["seed"] = *flags.seed;
  if (flags.jobs) doc["jobs"] = *flags.jobs;
  return doc;
}

fs::path prepare_out(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error("cannot create output directory " + out + ": " + ec.message());
  return fs::path(out);
}

std::uint64_t config_seed(const Json& doc) {
  return detail::ConfigReader(doc, "config").count("seed", 0);
}

int cmd_simulate(const CommonFlags& flags) {
  const Json doc = load_config(flags);
  const detail::ConfigReader root(doc, "config");
  const std::uint64_t seed = config_seed(doc);
  const ModelConfig model = parse_model(root.at("model"), seed, "config.model");
  const auto n = root.count("n", 100);
  if (n < 1) throw ConfigError("config.n: must be >= 1");
  RngStream stream = replicate_stream(seed, 0, DataStream::data);
  const ObservationSet data = simulate(model, stream, n);

  const fs::path dir = prepare_out(flags.out);
  std::ostringstream csv;
  write_observations_csv(csv, data);
  write_text_file((dir / "data.csv").string(), csv.str());
  // provenance names the derived data stream; seed is what to pass back in.
  Json meta{{"schema_version", kSchemaVersion},
            {"seed", seed},
            {"provenance", to_json(data.provenance())},
            {"model", root.at("model")},
            {"n", n},
            {"dimension", data.dimension()}};
  write_text_file((dir / "data.meta.json").string(), meta.dump(2) + "\n");
  std::cout << "wrote " << (dir / "data.csv").string() << " (" << n << " x " << data.dimension() << ")\n";
  return 0;
}

int cmd_fit(const CommonFlags& flags, const std::string& data_path) {
  const Json doc = load_config(flags);
  const detail::ConfigReader root(doc, "config");
  const std::uint64_t seed = config_seed(doc);
  const ModelConfig model = parse_model(root.at("model"), seed, "config.model");
  const FitSettings settings = parse_fit_settings(root);
  const ObservationSet data = read_observations_csv(data_path);

  const auto started = std::chrono::steady_clock::now();
  const FitResult fit = fit_model(model, data, settings, replicate_stream(seed, 0, DataStream::directions),
                                  replicate_stream(seed, 0, DataStream::meat));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const fs::path dir = prepare_out(flags.out);
  Json out = to_json(fit, parameter_names(model));
  out["sample_size"] = data.rows();
  out["directions"] = settings.directions;
  out["seed"] = seed;
  write_text_file((dir / "fit.json").string(), out.dump(2) + "\n");
  write_text_file((dir / "fit.timing.json").string(), Json{{"wall_time_seconds", seconds}}.dump(2) + "\n");
  std::cout << out.dump(2) << "\n";
  if (!fit.converged) {
    std::cerr << "fit did not converge\n";
    return kExitNonConvergence;
  }
  return 0;
}

int cmd_experiment(const CommonFlags& flags) {
  const ExperimentSpec spec = parse_experiment(load_config(flags));
  const ExperimentReport report = run_experiment(spec);
  const fs::path dir = prepare_out(flags.out);

  std::ostringstream csv;
  write_replicates_csv(csv, spec, report);
  write_text_file((dir / "replicates.csv").string(), csv.str());
  const Json summary = summary_json(spec, report);
  write_text_file((dir / "summary.json").string(), summary.dump(2) + "\n");
  write_text_file((dir / "timing.json").string(),
                  Json{{"wall_time_seconds", report.wall_time_seconds}, {"jobs", spec.jobs}}.dump(2) + "\n");
  std::cout << summary["aggregates"].dump(2) << "\n";
  return 0;
}

int cmd_depsummary(const CommonFlags& flags) {
  const Json doc = load_config(flags);
  const detail::ConfigReader root(doc, "config");
  const ModelConfig model = parse_model(root.at("model"), config_seed(doc), "config.model");
  const Json summary = dependence_summary(model);
  std::cout << summary.dump(2) << "\n";
  if (flags.out != ".") {
    const fs::path dir = prepare_out(flags.out);
    write_text_file((dir / "depsummary.json").string(), summary.dump(2) + "\n");
  }
  return 0;
}

void add_common(CLI::App* sub, CommonFlags& flags, bool with_jobs) {
  sub->add_option("--config", flags.config, "JSON configuration file")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", flags.seed, "override the configured seed");
  sub->add_option("--out", flags.out, "output directory");
  if (with_jobs) sub->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CRPS estimation for max-stable models"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string data_path;

  auto* simulate_cmd = app.add_subcommand("simulate", "draw observations from a configured model");
  add_common(simulate_cmd, flags, false);
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a CSV of observations");
  add_common(fit_cmd, flags, false);
  fit_cmd->add_option("--data", data_path, "observation CSV")->required();
  auto* experiment_cmd = app.add_subcommand("experiment", "run a replication study");
  add_common(experiment_cmd, flags, true);
  auto* dep_cmd = app.add_subcommand("depsummary", "extremal coefficient and pairwise co-variations");
  add_common(dep_cmd, flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(flags);
    if (fit_cmd->parsed()) return cmd_fit(flags, data_path);
    if (experiment_cmd->parsed()) return cmd_experiment(flags);
    return cmd_depsummary(flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
