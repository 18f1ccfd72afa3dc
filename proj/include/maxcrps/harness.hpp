#pragma once

// Replication-study engine and JSON configuration for the command-line tool.
//
// A configuration document looks like
//
//   { "schema_version": 1,
//     "model": { "family": "logistic", "dimension": 5, "theta": [5, 0.7] },
//     "n": 100, "replications": 100, "directions": 1000,
//     "meat_samples": 10000, "seed": 42, "jobs": 1,
//     "fit": { "multistarts": 5, "tolerance": 1e-8, "intervals": true } }
//
// Replicate r runs on RngStream(seed, r); data, directions and the meat
// simulation use its derived streams 1, 2 and 3.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "maxcrps/correlation.hpp"
#include "maxcrps/data.hpp"
#include "maxcrps/error.hpp"
#include "maxcrps/estimator.hpp"
#include "maxcrps/io.hpp"
#include "maxcrps/models.hpp"
#include "maxcrps/rng.hpp"
#include "maxcrps/sampling.hpp"

namespace maxcrps {

inline constexpr int kSchemaVersion = 1;

enum class DataStream : std::uint64_t { data = 1, directions = 2, meat = 3 };

[[nodiscard]] inline RngStream replicate_stream(std::uint64_t seed, std::uint64_t replicate, DataStream which) {
  return RngStream(seed, replicate).derive(static_cast<std::uint64_t>(which));
}

// ---------------------------------------------------------------------------
// Model configuration

struct LogisticConfig {
  LogisticModel model;
  std::vector<double> theta;
};

struct MaxLinearConfig {
  MaxLinearModel model;
  std::size_t theta;
};

struct SchlatherConfig {
  std::shared_ptr<const SchlatherModel> model;
  std::vector<double> theta;
};

using ModelConfig = std::variant<LogisticConfig, MaxLinearConfig, SchlatherConfig>;

namespace detail {

/// Typed access to a JSON member with a field path in every error.
class ConfigReader {
 public:
  ConfigReader(const Json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  [[nodiscard]] bool has(const char* key) const { return node_.contains(key); }

  [[nodiscard]] const Json& at(const char* key) const {
    if (!node_.contains(key)) throw ConfigError(field(key) + ": missing required field");
    return node_.at(key);
  }

  [[nodiscard]] ConfigReader object(const char* key) const { return {at(key), field(key)}; }

  [[nodiscard]] std::string string(const char* key) const {
    const Json& v = at(key);
    if (!v.is_string()) throw ConfigError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  [[nodiscard]] double number(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number()) throw ConfigError(field(key) + ": expected a number");
    return v.get<double>();
  }

  [[nodiscard]] double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

  [[nodiscard]] std::uint64_t count(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(field(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  [[nodiscard]] std::uint64_t count(const char* key, std::uint64_t fallback) const {
    return has(key) ? count(key) : fallback;
  }

  [[nodiscard]] bool flag(const char* key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(field(key) + ": expected true or false");
    return v.get<bool>();
  }

  [[nodiscard]] std::vector<double> numbers(const char* key) const {
    const Json& v = at(key);
    if (!v.is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  [[nodiscard]] std::string field(const char* key) const { return path_ + "." + key; }
  [[nodiscard]] const std::string& path() const noexcept { return path_; }

 private:
  const Json& node_;
  std::string path_;
};

[[nodiscard]] inline Matrix parse_matrix(const Json& node, const std::string& path) {
  if (!node.is_array() || node.empty() || !node[0].is_array() || node[0].empty()) {
    throw ConfigError(path + ": expected a non-empty array of rows");
  }
  const auto rows = static_cast<Eigen::Index>(node.size());
  const auto cols = static_cast<Eigen::Index>(node[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = node[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ConfigError(path + "[" + std::to_string(i) + "]: rows must all have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!row[static_cast<std::size_t>(j)].is_number()) {
        throw ConfigError(path + "[" + std::to_string(i) + "][" + std::to_string(j) + "]: expected a number");
      }
      m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return m;
}

[[nodiscard]] inline SiteSet parse_sites(const ConfigReader& model, std::uint64_t default_seed) {
  std::vector<SiteSet::Point> points;
  if (model.has("sites")) {
    const Json& node = model.at("sites");
    if (!node.is_array() || node.empty()) throw ConfigError(model.field("sites") + ": expected an array of [x, y]");
    for (std::size_t i = 0; i < node.size(); ++i) {
      if (!node[i].is_array() || node[i].size() != 2 || !node[i][0].is_number() || !node[i][1].is_number()) {
        throw ConfigError(model.field("sites") + "[" + std::to_string(i) + "]: expected [x, y]");
      }
      points.push_back({node[i][0].get<double>(), node[i][1].get<double>()});
    }
  } else if (model.has("random_sites")) {
    const ConfigReader random = model.object("random_sites");
    const auto count = random.count("count");
    const double extent = random.number("extent");
    if (count < 1 || !(extent > 0.0)) throw ConfigError(random.path() + ": need count >= 1 and extent > 0");
    RngStream stream(random.count("seed", default_seed), 0x517E5ULL);
    for (std::uint64_t i = 0; i < count; ++i) {
      const double x = extent * stream.uniform();
      const double y = extent * stream.uniform();
      points.push_back({x, y});
    }
  } else {
    throw ConfigError(model.path() + ": schlather model needs 'sites' or 'random_sites'");
  }
  try {
    return SiteSet(std::move(points));
  } catch (const Error& e) {
    throw ConfigError(model.path() + ": " + e.what());
  }
}

}  // namespace detail

/// Builds the model block. `default_seed` seeds random site layouts and the
/// Schlather common-random-number bank when the config leaves them open.
[[nodiscard]] inline ModelConfig parse_model(const Json& node, std::uint64_t default_seed = 0,
                                             const std::string& path = "model") {
  const detail::ConfigReader model(node, path);
  const std::string family = model.string("family");
  try {
    if (family == "logistic") {
      const auto d = model.count("dimension");
      LogisticModel m(d);
      std::vector<double> theta = model.has("theta") ? model.numbers("theta") : std::vector<double>{1.0, 0.5};
      m.param_space().require(theta, model.field("theta"));
      return LogisticConfig{m, std::move(theta)};
    }
    if (family == "max_linear") {
      MaxLinearSpec spec;
      if (model.has("candidates")) {
        const Json& list = model.at("candidates");
        if (!list.is_array() || list.empty()) throw ConfigError(model.field("candidates") + ": expected a list");
        for (std::size_t c = 0; c < list.size(); ++c) {
          spec.candidates.push_back(detail::parse_matrix(list[c], model.field("candidates") + "[" + std::to_string(c) + "]"));
        }
      } else {
        spec = bivariate_confounded_pair();
      }
      spec.theta = model.count("theta", 0);
      spec.validate();
      const std::size_t theta = spec.theta;
      return MaxLinearConfig{MaxLinearModel(std::move(spec)), theta};
    }
    if (family == "schlather") {
      const auto kind = parse_correlation_kind(model.has("correlation") ? model.string("correlation") : "stable");
      if (!kind) throw ConfigError(model.field("correlation") + ": expected stable, matern or cauchy");
      SiteSet sites = detail::parse_sites(model, default_seed);
      const auto k = model.count("monte_carlo_size", SchlatherModel::kDefaultMonteCarloSize);
      const auto seed = model.count("seed", default_seed);
      auto m = std::make_shared<const SchlatherModel>(std::move(sites), *kind, k, seed);
      std::vector<double> theta = model.numbers("theta");
      m->param_space().require(theta, model.field("theta"));
      return SchlatherConfig{std::move(m), std::move(theta)};
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(model.field("family") + ": unknown family '" + family + "'");
}

[[nodiscard]] inline std::size_t model_dimension(const ModelConfig& config) {
  return std::visit(
      [](const auto& c) -> std::size_t {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SchlatherConfig>) {
          return c.model->dimension();
        } else {
          return c.model.dimension();
        }
      },
      config);
}

[[nodiscard]] inline std::vector<std::string> parameter_names(const ModelConfig& config) {
  if (std::holds_alternative<LogisticConfig>(config)) return {"sigma", "alpha"};
  if (std::holds_alternative<SchlatherConfig>(config)) return {"range", "shape"};
  return {"candidate"};
}

[[nodiscard]] inline ObservationSet simulate(const ModelConfig& config, RngStream& stream, std::size_t n) {
  return std::visit(
      [&](const auto& c) -> ObservationSet {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SchlatherConfig>) {
          return sample(stream, *c.model, c.theta, n);
        } else {
          return sample(stream, c.model, c.theta, n);
        }
      },
      config);
}

// ---------------------------------------------------------------------------
// Fitting from configuration

struct FitSettings {
  std::size_t directions = kDefaultDirectionCount;
  FitOptions options;
};

[[nodiscard]] inline FitSettings parse_fit_settings(const detail::ConfigReader& root) {
  FitSettings settings;
  settings.directions = root.count("directions", kDefaultDirectionCount);
  if (settings.directions < 1) throw ConfigError(root.field("directions") + ": must be >= 1");
  settings.options.meat.samples = root.count("meat_samples", kDefaultMeatSamples);
  if (root.has("fit")) {
    const auto fit = root.object("fit");
    settings.options.multistarts = fit.count("multistarts", settings.options.multistarts);
    settings.options.tolerance = fit.number("tolerance", settings.options.tolerance);
    settings.options.max_evaluations = fit.count("max_evaluations", settings.options.max_evaluations);
    settings.options.initial_step = fit.number("initial_step", settings.options.initial_step);
    settings.options.intervals = fit.flag("intervals", settings.options.intervals);
    if (fit.has("start_region")) {
      const Matrix region = detail::parse_matrix(fit.at("start_region"), fit.field("start_region"));
      if (region.cols() != 2) throw ConfigError(fit.field("start_region") + ": expected [lo, hi] pairs");
      StartRegion r;
      for (Eigen::Index k = 0; k < region.rows(); ++k) r.emplace_back(region(k, 0), region(k, 1));
      settings.options.start_region = std::move(r);
    }
    if (fit.has("start")) settings.options.starts = {fit.numbers("start")};
  }
  if (settings.options.intervals && settings.options.meat.samples < kMinMeatSamples) {
    throw ConfigError(root.field("meat_samples") + ": must be >= " + std::to_string(kMinMeatSamples));
  }
  return settings;
}

/// Direction set, projection and fit (with intervals for continuous models)
/// on the given streams.
[[nodiscard]] inline FitResult fit_model(const ModelConfig& config, const ObservationSet& data,
                                         const FitSettings& settings, RngStream direction_stream,
                                         RngStream meat_stream) {
  const auto d = static_cast<Eigen::Index>(model_dimension(config));
  if (data.dimension() != d) {
    throw DataError("data have " + std::to_string(data.dimension()) + " columns but the model has dimension " +
                    std::to_string(d));
  }
  const DirectionSet dirs = build_direction_set(direction_stream, d, static_cast<Eigen::Index>(settings.directions));
  FitOptions options = settings.options;
  options.meat.stream = meat_stream;
  return std::visit(
      [&](const auto& c) -> FitResult {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MaxLinearConfig>) {
          return fit_finite(data, dirs, c.model);
        } else if constexpr (std::is_same_v<T, SchlatherConfig>) {
          return fit_continuous(data, dirs, *c.model, options);
        } else {
          return fit_continuous(data, dirs, c.model, options);
        }
      },
      config);
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentSpec {
  Json model_json;
  ModelConfig model;
  std::size_t n = 100;
  std::size_t replications = 100;
  FitSettings fit;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  Json echo;  // normalized spec without execution-only settings
};

[[nodiscard]] inline ExperimentSpec parse_experiment(const Json& document) {
  const detail::ConfigReader root(document, "config");
  if (root.has("schema_version") && root.count("schema_version") != kSchemaVersion) {
    throw ConfigError("config.schema_version: unsupported version " + std::to_string(root.count("schema_version")));
  }
  const std::uint64_t seed = root.count("seed", 0);
  ExperimentSpec spec{.model_json = root.at("model"),
                      .model = parse_model(root.at("model"), seed, "config.model"),
                      .fit = {},
                      .seed = seed,
                      .echo = {}};
  spec.n = root.count("n", 100);
  spec.replications = root.count("replications", 100);
  spec.jobs = root.count("jobs", 1);
  if (spec.n < 1) throw ConfigError("config.n: must be >= 1");
  if (spec.replications < 1) throw ConfigError("config.replications: must be >= 1");
  if (spec.jobs < 1) throw ConfigError("config.jobs: must be >= 1");
  spec.fit = parse_fit_settings(root);

  Json fit_echo{{"multistarts", spec.fit.options.multistarts},
                {"tolerance", spec.fit.options.tolerance},
                {"max_evaluations", spec.fit.options.max_evaluations},
                {"initial_step", spec.fit.options.initial_step},
                {"intervals", spec.fit.options.intervals}};
  spec.echo = Json{{"model", spec.model_json},
                   {"n", spec.n},
                   {"replications", spec.replications},
                   {"directions", spec.fit.directions},
                   {"meat_samples", spec.fit.options.meat.samples},
                   {"seed", spec.seed},
                   {"fit", fit_echo}};
  return spec;
}

[[nodiscard]] inline Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct ReplicateOutcome {
  std::size_t replicate = 0;
  bool failed = false;
  std::string message;
  FitResult fit;
};

struct ParameterSummary {
  std::string name;
  double truth = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t interval_count = 0;
  std::size_t covered = 0;
  [[nodiscard]] double coverage() const noexcept {
    return interval_count ? static_cast<double>(covered) / static_cast<double>(interval_count) : 0.0;
  }
};

struct ExperimentReport {
  std::vector<ReplicateOutcome> outcomes;
  std::vector<ParameterSummary> parameters;
  std::optional<double> error_rate;
  std::size_t successes = 0;
  std::size_t failures = 0;
  std::size_t nonconverged = 0;
  double wall_time_seconds = 0.0;
};

namespace detail {

[[nodiscard]] inline std::vector<double> true_theta(const ModelConfig& config) {
  return std::visit(
      [](const auto& c) -> std::vector<double> {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, MaxLinearConfig>) {
          return {static_cast<double>(c.theta)};
        } else {
          return c.theta;
        }
      },
      config);
}

[[nodiscard]] inline ReplicateOutcome run_replicate(const ExperimentSpec& spec, std::size_t r) {
  ReplicateOutcome outcome;
  outcome.replicate = r;
  try {
    RngStream data_stream = replicate_stream(spec.seed, r, DataStream::data);
    const ObservationSet data = simulate(spec.model, data_stream, spec.n);
    outcome.fit = fit_model(spec.model, data, spec.fit, replicate_stream(spec.seed, r, DataStream::directions),
                            replicate_stream(spec.seed, r, DataStream::meat));
  } catch (const std::exception& e) {
    outcome.failed = true;
    outcome.message = e.what();
  }
  return outcome;
}

}  // namespace detail

/// Runs every replicate on a pool of `spec.jobs` workers and aggregates in
/// replicate order. Failed and non-converged replicates are excluded from
/// the aggregates but counted.
[[nodiscard]] inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
  const auto started = std::chrono::steady_clock::now();
  ExperimentReport report;
  report.outcomes.resize(spec.replications);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t r = next++; r < spec.replications; r = next++) report.outcomes[r] = detail::run_replicate(spec, r);
  };
  const std::size_t width = std::min(spec.jobs, spec.replications);
  if (width <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < width; ++w) pool.emplace_back(worker);
  }

  const auto truth = detail::true_theta(spec.model);
  const auto names = parameter_names(spec.model);
  const bool finite = std::holds_alternative<MaxLinearConfig>(spec.model);
  std::vector<std::vector<double>> estimates(truth.size());
  std::size_t errors = 0;
  for (auto& p : names) report.parameters.push_back({p, 0, 0, 0, 0, 0});
  for (std::size_t k = 0; k < truth.size(); ++k) report.parameters[k].truth = truth[k];

  for (const auto& o : report.outcomes) {
    if (o.failed) {
      ++report.failures;
      continue;
    }
    if (!o.fit.converged) {
      ++report.nonconverged;
      continue;
    }
    ++report.successes;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      estimates[k].push_back(o.fit.theta_hat[k]);
      if (k < o.fit.intervals.size()) {
        ++report.parameters[k].interval_count;
        if (o.fit.intervals[k].contains(truth[k])) ++report.parameters[k].covered;
      }
    }
    if (finite && o.fit.candidate_index != static_cast<std::size_t>(truth[0])) ++errors;
  }
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const auto& xs = estimates[k];
    if (xs.empty()) continue;
    CompensatedSum s;
    for (const double x : xs) s.add(x);
    const double mean = s.value() / static_cast<double>(xs.size());
    CompensatedSum ss;
    for (const double x : xs) ss.add((x - mean) * (x - mean));
    report.parameters[k].mean = mean;
    report.parameters[k].sd = xs.size() > 1 ? std::sqrt(ss.value() / static_cast<double>(xs.size() - 1)) : 0.0;
  }
  if (finite && report.successes > 0) {
    report.error_rate = static_cast<double>(errors) / static_cast<double>(report.successes);
  }
  report.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

/// Summary document. Deterministic given the spec: wall time is not included.
[[nodiscard]] inline Json summary_json(const ExperimentSpec& spec, const ExperimentReport& report) {
  Json params = Json::array();
  for (const auto& p : report.parameters) {
    Json entry{{"name", p.name}, {"true", p.truth}, {"mean", p.mean}, {"sd", p.sd}};
    if (p.interval_count > 0) {
      entry["coverage"] = p.coverage();
      entry["covered"] = p.covered;
      entry["intervals"] = p.interval_count;
    }
    params.push_back(std::move(entry));
  }
  Json aggregates{{"replications", spec.replications},
                  {"successes", report.successes},
                  {"nonconverged", report.nonconverged},
                  {"parameters", params}};
  if (report.error_rate) aggregates["error_rate"] = *report.error_rate;
  Json failures = Json::array();
  for (const auto& o : report.outcomes) {
    if (o.failed) failures.push_back(Json{{"replicate", o.replicate}, {"message", o.message}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"spec", spec.echo},
              {"aggregates", aggregates},
              {"failures", Json{{"count", report.failures}, {"replicates", failures}}}};
}

inline void write_replicates_csv(std::ostream& out, const ExperimentSpec& spec, const ExperimentReport& report) {
  const auto names = parameter_names(spec.model);
  const auto truth = detail::true_theta(spec.model);
  const bool finite = std::holds_alternative<MaxLinearConfig>(spec.model);
  out << "replicate,status,converged,objective";
  if (finite) {
    out << ",selected,error,tie";
  } else {
    for (const auto& n : names) out << ',' << n << "_hat," << n << "_lower," << n << "_upper," << n << "_covered";
  }
  out << "\r\n";
  for (const auto& o : report.outcomes) {
    out << o.replicate << ',' << (o.failed ? "failed" : "ok");
    if (o.failed) {
      out << ",0,";
      if (finite) {
        out << ",,,";
      } else {
        for (std::size_t k = 0; k < names.size(); ++k) out << ",,,,";
      }
      out << "\r\n";
      continue;
    }
    out << ',' << (o.fit.converged ? 1 : 0) << ',' << format_double(o.fit.objective);
    if (finite) {
      const std::size_t selected = o.fit.candidate_index.value_or(0);
      out << ',' << selected << ',' << (selected != static_cast<std::size_t>(truth[0]) ? 1 : 0) << ','
          << (o.fit.tie ? 1 : 0);
    } else {
      for (std::size_t k = 0; k < names.size(); ++k) {
        out << ',' << format_double(o.fit.theta_hat.at(k));
        if (k < o.fit.intervals.size()) {
          const auto& iv = o.fit.intervals[k];
          out << ',' << format_double(iv.lower) << ',' << format_double(iv.upper) << ','
              << (iv.contains(truth[k]) ? 1 : 0);
        } else {
          out << ",,,";
        }
      }
    }
    out << "\r\n";
  }
}

// ---------------------------------------------------------------------------
// Dependence summary

[[nodiscard]] inline Json dependence_summary(const ModelConfig& config) {
  return std::visit(
      [](const auto& c) -> Json {
        using T = std::decay_t<decltype(c)>;
        const auto& model = [&]() -> const auto& {
          if constexpr (std::is_same_v<T, SchlatherConfig>) {
            return *c.model;
          } else {
            return c.model;
          }
        }();
        Json out;
        out["family"] = std::string(to_string(std::decay_t<decltype(model)>::family));
        out["dimension"] = model.dimension();
        out["extremal_coefficient"] = extremal_coefficient(model, c.theta);
        if (model.standard_margins(c.theta)) {
          Json pairs = Json::array();
          for (std::size_t i = 0; i < model.dimension(); ++i) {
            for (std::size_t j = i + 1; j < model.dimension(); ++j) {
              pairs.push_back(Json{{"i", i + 1}, {"j", j + 1}, {"covariation", covariation(model, c.theta, i, j)}});
            }
          }
          out["covariation"] = pairs;
        } else {
          out["covariation"] = nullptr;
          out["note"] = "margins are not standard 1-Frechet; co-variation is undefined";
        }
        return out;
      },
      config);
}

}  // namespace maxcrps
