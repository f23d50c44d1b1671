// Copyright 2026 The hybsem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYBSEM_HARNESS_RESULTS_HPP
#define HYBSEM_HARNESS_RESULTS_HPP

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

/**
 * \file
 * \brief Result rows and their CSV / JSON forms.
 *
 * Columns are fixed:
 *  - metrics.csv:  trial,time_step,method,estimate,reference_value,squared_error,wall_ms,n_samples,sweep_value
 *  - summary.csv:  method,time_step,sweep_value,rmse,mean_wall_ms,rows,na_rows
 *  - planning.csv: trial,method,safe_verdict,reached_goal,dist_to_goal,traj_len,wall_ms
 *
 * Numbers are written with 17 significant digits; missing values as `NA`.
 */

namespace hybsem {

inline constexpr const char* kMetricsHeader =
    "trial,time_step,method,estimate,reference_value,squared_error,wall_ms,n_samples,sweep_value";
inline constexpr const char* kSummaryHeader = "method,time_step,sweep_value,rmse,mean_wall_ms,rows,na_rows";
inline constexpr const char* kPlanningHeader = "trial,method,safe_verdict,reached_goal,dist_to_goal,traj_len,wall_ms";

struct MetricRow {
  int trial{0};
  int time_step{0};
  std::string method;
  std::optional<double> estimate;
  std::optional<double> reference_value;
  double wall_ms{0.0};
  int n_samples{0};
  double sweep_value{0.0};

  /// (estimate - reference)^2, missing when either side is.
  [[nodiscard]] std::optional<double> squared_error() const {
    if (!estimate || !reference_value) {
      return std::nullopt;
    }
    const double d = *estimate - *reference_value;
    return d * d;
  }
};

struct SummaryRow {
  std::string method;
  int time_step{0};
  double sweep_value{0.0};
  std::optional<double> rmse;
  double mean_wall_ms{0.0};
  int rows{0};
  int na_rows{0};
};

struct PlanningRow {
  int trial{0};
  std::string method;
  std::optional<bool> safe_verdict;  ///< missing when the method could not run
  std::optional<bool> reached_goal;
  std::optional<double> dist_to_goal;
  std::optional<double> traj_len;
  double wall_ms{0.0};
};

namespace csv {

inline std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string number(const std::optional<double>& v) { return v ? number(*v) : "NA"; }

inline std::string flag(const std::optional<bool>& v) { return v ? (*v ? "1" : "0") : "NA"; }

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in{line};
  while (std::getline(in, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

inline std::optional<double> parse_number(const std::string& s) {
  if (s == "NA") {
    return std::nullopt;
  }
  return std::stod(s);
}

inline std::optional<bool> parse_flag(const std::string& s) {
  if (s == "NA") {
    return std::nullopt;
  }
  return s == "1";
}

inline std::vector<std::vector<std::string>> read(std::istream& in, const std::string& header) {
  std::string line;
  if (!std::getline(in, line) || line != header) {
    throw std::runtime_error("csv: unexpected header '" + line + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) {
      rows.push_back(split(line));
    }
  }
  return rows;
}

}  // namespace csv

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    out << r.trial << ',' << r.time_step << ',' << r.method << ',' << csv::number(r.estimate) << ','
        << csv::number(r.reference_value) << ',' << csv::number(r.squared_error()) << ',' << csv::number(r.wall_ms)
        << ',' << r.n_samples << ',' << csv::number(r.sweep_value) << '\n';
  }
}

inline std::vector<MetricRow> read_metrics_csv(std::istream& in) {
  std::vector<MetricRow> out;
  for (const auto& cells : csv::read(in, kMetricsHeader)) {
    if (cells.size() != 9) {
      throw std::runtime_error("metrics csv: expected 9 columns");
    }
    MetricRow r;
    r.trial = std::stoi(cells[0]);
    r.time_step = std::stoi(cells[1]);
    r.method = cells[2];
    r.estimate = csv::parse_number(cells[3]);
    r.reference_value = csv::parse_number(cells[4]);
    r.wall_ms = std::stod(cells[6]);
    r.n_samples = std::stoi(cells[7]);
    r.sweep_value = std::stod(cells[8]);
    out.push_back(std::move(r));
  }
  return out;
}

/// RMSE and mean wall time per (method, time_step, sweep_value), in first-seen order.
inline std::vector<SummaryRow> summarize(const std::vector<MetricRow>& rows) {
  std::vector<SummaryRow> out;
  std::vector<double> sum_sq;
  std::map<std::tuple<std::string, int, double>, std::size_t> slot;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.method, r.time_step, r.sweep_value);
    auto it = slot.find(key);
    if (it == slot.end()) {
      it = slot.emplace(key, out.size()).first;
      out.push_back({r.method, r.time_step, r.sweep_value, std::nullopt, 0.0, 0, 0});
      sum_sq.push_back(0.0);
    }
    auto& s = out[it->second];
    s.mean_wall_ms += r.wall_ms;
    ++s.rows;
    if (const auto se = r.squared_error()) {
      sum_sq[it->second] += *se;
    } else {
      ++s.na_rows;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& s = out[i];
    const int valid = s.rows - s.na_rows;
    if (valid > 0) {
      s.rmse = std::sqrt(sum_sq[i] / valid);
    }
    s.mean_wall_ms /= s.rows;
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryHeader << '\n';
  for (const auto& s : rows) {
    out << s.method << ',' << s.time_step << ',' << csv::number(s.sweep_value) << ',' << csv::number(s.rmse) << ','
        << csv::number(s.mean_wall_ms) << ',' << s.rows << ',' << s.na_rows << '\n';
  }
}

inline std::vector<SummaryRow> read_summary_csv(std::istream& in) {
  std::vector<SummaryRow> out;
  for (const auto& cells : csv::read(in, kSummaryHeader)) {
    if (cells.size() != 7) {
      throw std::runtime_error("summary csv: expected 7 columns");
    }
    out.push_back({cells[0], std::stoi(cells[1]), std::stod(cells[2]), csv::parse_number(cells[3]),
                   std::stod(cells[4]), std::stoi(cells[5]), std::stoi(cells[6])});
  }
  return out;
}

inline nlohmann::json summary_to_json(const std::vector<SummaryRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : rows) {
    out.push_back({{"method", s.method},
                   {"time_step", s.time_step},
                   {"sweep_value", s.sweep_value},
                   {"rmse", s.rmse ? nlohmann::json(*s.rmse) : nlohmann::json(nullptr)},
                   {"mean_wall_ms", s.mean_wall_ms},
                   {"rows", s.rows},
                   {"na_rows", s.na_rows}});
  }
  return out;
}

inline void write_planning_csv(std::ostream& out, const std::vector<PlanningRow>& rows) {
  out << kPlanningHeader << '\n';
  for (const auto& r : rows) {
    out << r.trial << ',' << r.method << ',' << csv::flag(r.safe_verdict) << ',' << csv::flag(r.reached_goal) << ','
        << csv::number(r.dist_to_goal) << ',' << csv::number(r.traj_len) << ',' << csv::number(r.wall_ms) << '\n';
  }
}

inline std::vector<PlanningRow> read_planning_csv(std::istream& in) {
  std::vector<PlanningRow> out;
  for (const auto& cells : csv::read(in, kPlanningHeader)) {
    if (cells.size() != 7) {
      throw std::runtime_error("planning csv: expected 7 columns");
    }
    out.push_back({std::stoi(cells[0]), cells[1], csv::parse_flag(cells[2]), csv::parse_flag(cells[3]),
                   csv::parse_number(cells[4]), csv::parse_number(cells[5]), std::stod(cells[6])});
  }
  return out;
}

/// Per-method counts over planning trials.
inline nlohmann::json planning_summary(const std::vector<PlanningRow>& rows) {
  std::map<std::string, nlohmann::json> by_method;
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!by_method.count(r.method)) {
      order.push_back(r.method);
      by_method[r.method] = {{"method", r.method}, {"trials", 0}, {"applicable", 0}, {"safe", 0}, {"reached_goal", 0},
                             {"mean_wall_ms", 0.0}};
    }
    auto& s = by_method[r.method];
    s["trials"] = s["trials"].get<int>() + 1;
    s["mean_wall_ms"] = s["mean_wall_ms"].get<double>() + r.wall_ms;
    if (r.safe_verdict) {
      s["applicable"] = s["applicable"].get<int>() + 1;
      s["safe"] = s["safe"].get<int>() + (*r.safe_verdict ? 1 : 0);
      s["reached_goal"] = s["reached_goal"].get<int>() + (r.reached_goal.value_or(false) ? 1 : 0);
    }
  }
  nlohmann::json out = nlohmann::json::array();
  for (const auto& m : order) {
    auto s = by_method[m];
    s["mean_wall_ms"] = s["mean_wall_ms"].get<double>() / s["trials"].get<int>();
    out.push_back(s);
  }
  return out;
}

}  // namespace hybsem

#endif  // HYBSEM_HARNESS_RESULTS_HPP
