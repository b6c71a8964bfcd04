#pragma once

/**
 * @file metrics.hpp
 * @brief Usage accounting and the parameter-count cost proxy.
 *
 * The cost of a run is the average number of parameters touched per token,
 * relative to running the large model alone:
 *
 *     ratio% = 100 * (alpha * P_small + beta * P_large) / P_large
 */

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ead/controller.hpp"
#include "ead/detail/format.hpp"
#include "ead/engine.hpp"
#include "ead/error.hpp"
#include "ead/usage.hpp"

namespace ead {

inline UsageStats usage_from_trace(const GenerationTrace& trace) {
  if (trace.events.empty()) throw Error(ErrorKind::InvalidInput, "usage of an empty trace");
  std::size_t large = 0;
  std::size_t switches = 0;
  for (const auto& e : trace.events) {
    large += (e.role == ModelRole::Large);
    switches += e.switched;
  }
  return make_usage(trace.events.size() - large, large, switches);
}

/// Percentage in (0, 100].
inline double parameter_ratio(double alpha, double beta, double p_small, double p_large) {
  if (!(p_small > 0.0) || !(p_small < p_large)) {
    throw Error(ErrorKind::MisconfiguredPair, "parameter_ratio needs 0 < P_small < P_large");
  }
  if (alpha < 0.0 || beta < 0.0 || std::abs(alpha + beta - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidInput, "alpha and beta must be non-negative and sum to 1");
  }
  return 100.0 * (alpha * p_small + beta * p_large) / p_large;
}

inline double parameter_ratio(const UsageStats& u, double p_small, double p_large) {
  return parameter_ratio(u.alpha, u.beta, p_small, p_large);
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRun {
  double tau = 0.0;
  UsageStats usage;
  double p_small = 0.0;
  double p_large = 0.0;
};

struct SweepRow {
  double tau = 0.0;
  double large_usage_percent = 0.0;
  double param_ratio_percent = 0.0;
  std::optional<double> score_percent;  // external annotation only, never computed here
  std::size_t runs = 0;

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Groups runs by tau and averages; rows come out with tau descending.
inline std::vector<SweepRow> sweep_aggregate(std::span<const SweepRun> runs) {
  std::map<double, SweepRow, std::greater<>> by_tau;
  for (const auto& r : runs) {
    auto& row = by_tau[r.tau];
    row.tau = r.tau;
    row.large_usage_percent += 100.0 * r.usage.beta;
    row.param_ratio_percent += parameter_ratio(r.usage, r.p_small, r.p_large);
    ++row.runs;
  }
  std::vector<SweepRow> out;
  out.reserve(by_tau.size());
  for (auto& [tau, row] : by_tau) {
    row.large_usage_percent /= static_cast<double>(row.runs);
    row.param_ratio_percent /= static_cast<double>(row.runs);
    out.push_back(row);
  }
  return out;
}

inline constexpr const char* kSweepCsvHeader = "tau,large_usage_percent,param_ratio_percent,score_percent,runs";

inline void write_sweep_csv(std::span<const SweepRow> rows, std::ostream& out) {
  out << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    out << format_tau(r.tau) << ',' << detail::shortest(r.large_usage_percent) << ','
        << detail::shortest(r.param_ratio_percent) << ','
        << (r.score_percent ? detail::shortest(*r.score_percent) : std::string()) << ',' << r.runs << '\n';
  }
}

/// The threshold grid used in the reference experiments; `inf` stands in for
/// their never-switch setting of 99.
inline std::vector<double> default_tau_grid() {
  return {0.0, 0.03125, 0.0625, 0.125, 0.25, 0.5, 1.0, kTauNever};
}

// ---------------------------------------------------------------------------
// Reference table: published (usage, cost) pairs for four model pairs.
// ---------------------------------------------------------------------------

struct ReferencePair {
  const char* name;
  double p_small;  // nominal billions
  double p_large;
};

struct ReferenceRow {
  int pair;  // index into reference_pairs()
  double tau;
  double large_usage_percent;
  double score_percent;  // MATH score; annotation only
  double param_ratio_percent;
};

inline std::span<const ReferencePair> reference_pairs() {
  static constexpr ReferencePair pairs[] = {
      {"Llama 3.2 3B vs 1B", 1.0, 3.0},
      {"Llama 3.2 11B vs 3B", 3.0, 11.0},
      {"Qwen 2.5 14B vs 0.5B", 0.5, 14.0},
      {"Qwen 2.5 14B vs 1.5B", 1.5, 14.0},
  };
  return pairs;
}

inline std::span<const ReferenceRow> reference_rows() {
  static constexpr ReferenceRow rows[] = {
      {0, 99, 0.0, 30.4, 33.3},    {0, 1, 16.0, 36.0, 44.0},      {0, 0.5, 23.3, 41.9, 48.9},
      {0, 0.25, 32.0, 41.0, 54.7}, {0, 0.125, 38.0, 41.7, 58.7},  {0, 0.0625, 45.0, 45.2, 63.5},
      {0, 0.03125, 57.0, 44.5, 71.3}, {0, 0, 100.0, 46.4, 100.0},

      {1, 99, 0.0, 48.0, 27.3},    {1, 1, 16.1, 48.4, 38.5},      {1, 0.5, 26.6, 49.0, 46.3},
      {1, 0.25, 33.3, 50.3, 51.4}, {1, 0.125, 43.2, 50.4, 58.5},  {1, 0.0625, 46.1, 51.1, 61.0},
      {1, 0.03125, 58.7, 51.4, 69.2}, {1, 0, 100.0, 52.0, 100.0},

      {2, 99, 0.0, 34.4, 3.6},     {2, 1, 8.3, 46.0, 11.6},       {2, 0.5, 14.9, 59.5, 17.9},
      {2, 0.25, 22.1, 63.2, 24.9}, {2, 0.125, 27.2, 64.1, 29.8},  {2, 0.0625, 35.3, 69.0, 37.6},
      {2, 0.03125, 43.2, 70.0, 45.2}, {2, 0, 100.0, 80.0, 100.0},

      {3, 99, 0.0, 34.4, 10.7},    {3, 1, 9.9, 67.5, 19.6},       {3, 0.5, 18.5, 71.7, 27.2},
      {3, 0.25, 25.6, 74.3, 33.6}, {3, 0.125, 31.0, 73.2, 38.4},  {3, 0.0625, 33.3, 74.9, 40.4},
      {3, 0.03125, 40.7, 75.5, 47.1}, {3, 0, 100.0, 80.1, 100.0},
  };
  return rows;
}

inline constexpr double kTableTolerancePoints = 0.5;

struct TableCheck {
  ReferenceRow row;
  double computed_ratio_percent;
  double deviation;  // |computed - published|
  bool ok;
};

struct TableReport {
  std::vector<TableCheck> checks;
  bool all_ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const TableCheck& c) { return c.ok; });
  }
};

/// Recomputes the cost column from the usage column with nominal parameter counts.
inline TableReport validate_reference_table(std::span<const ReferenceRow> rows = reference_rows(),
                                   double tolerance = kTableTolerancePoints) {
  TableReport report;
  const auto pairs = reference_pairs();
  for (const auto& row : rows) {
    const auto& pair = pairs[static_cast<std::size_t>(row.pair)];
    const double beta = row.large_usage_percent / 100.0;
    const double computed = parameter_ratio(1.0 - beta, beta, pair.p_small, pair.p_large);
    const double dev = std::abs(computed - row.param_ratio_percent);
    report.checks.push_back({row, computed, dev, dev <= tolerance});
  }
  return report;
}

}  // namespace ead
