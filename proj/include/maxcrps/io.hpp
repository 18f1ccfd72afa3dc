#pragma once

// CSV and JSON serialization for observation sets and fit results.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "maxcrps/data.hpp"
#include "maxcrps/error.hpp"
#include "maxcrps/estimator.hpp"
#include "maxcrps/numerics.hpp"

namespace maxcrps {

using Json = nlohmann::ordered_json;

/// Shortest-round-trip is not needed here; the CSV contract is 17 significant digits.
[[nodiscard]] inline std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace detail {

[[nodiscard]] inline std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (const char ch : text) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
[[nodiscard]] inline std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  if (quoted) throw DataError("CSV: unterminated quoted field");
  fields.push_back(std::move(current));
  return fields;
}

}  // namespace detail

inline void write_observations_csv(std::ostream& out, const ObservationSet& data) {
  const auto& labels = data.labels();
  for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << detail::csv_field(labels[j]);
  out << "\r\n";
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto row = data.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << format_double(row[j]);
    out << "\r\n";
  }
}

[[nodiscard]] inline ObservationSet read_observations_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV: missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> labels = detail::split_csv_record(line);
  std::vector<double> values;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = detail::split_csv_record(line);
    if (fields.size() != labels.size()) {
      throw DataError("CSV: row " + std::to_string(rows + 1) + " has " + std::to_string(fields.size()) +
                      " fields, header has " + std::to_string(labels.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      double value = 0.0;
      const char* first = fields[j].data();
      const char* last = first + fields[j].size();
      const auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc{} || ptr != last) {
        throw DataError("CSV: cannot parse row " + std::to_string(rows + 1) + ", column " + std::to_string(j + 1) +
                        " ('" + fields[j] + "')");
      }
      if (!(value > 0.0) || !std::isfinite(value)) {
        throw DataError("CSV: non-positive value at row " + std::to_string(rows + 1) + ", column " +
                        std::to_string(j + 1) + " (" + fields[j] + ")");
      }
      values.push_back(value);
    }
    ++rows;
  }
  if (rows == 0) throw DataError("CSV: no data rows");
  const auto d = static_cast<Eigen::Index>(labels.size());
  RowMatrix data = Eigen::Map<RowMatrix>(values.data(), rows, d);
  return ObservationSet(std::move(data), labels);
}

[[nodiscard]] inline ObservationSet read_observations_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file " + path);
  return read_observations_csv(in);
}

[[nodiscard]] inline Json to_json(const Provenance& provenance) {
  return Json{{"family", provenance.family},
              {"theta", provenance.theta},
              {"seed", provenance.seed},
              {"stream_id", provenance.stream_id}};
}

[[nodiscard]] inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Deterministic part of a fit; wall time is reported separately.
[[nodiscard]] inline Json to_json(const FitResult& fit, const std::vector<std::string>& parameter_names = {}) {
  Json out;
  out["theta_hat"] = fit.theta_hat;
  if (!parameter_names.empty()) out["parameters"] = parameter_names;
  if (fit.candidate_index) {
    out["candidate_index"] = *fit.candidate_index;
    out["candidate_objectives"] = fit.candidate_objectives;
    out["tie"] = fit.tie;
  }
  out["objective"] = fit.objective;
  out["converged"] = fit.converged;
  out["diagnostics"] = Json{{"evaluations", fit.evaluations},
                            {"iterations", fit.iterations},
                            {"restarts", fit.restarts},
                            {"warnings", fit.warnings}};
  Json intervals = Json::array();
  for (const auto& interval : fit.intervals) intervals.push_back(Json::array({interval.lower, interval.upper}));
  out["intervals"] = intervals;
  if (fit.sandwich) {
    const auto& s = *fit.sandwich;
    out["bread"] = matrix_to_json(s.bread);
    out["meat"] = matrix_to_json(s.meat);
    out["asym_cov"] = matrix_to_json(s.asym_cov);
    out["sample_size"] = s.sample_size;
    out["meat_samples"] = s.mc_size;
    out["meat_seed"] = s.mc_seed;
    out["meat_stream"] = s.mc_stream;
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path);
}

}  // namespace maxcrps
