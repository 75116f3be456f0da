#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vigil/executor.hpp"
#include "vigil/serialization.hpp"

namespace vigil {

/// One run: a task under one seed, monitored or not.
struct MetricsRow {
  std::string task;
  std::uint64_t seed = 0;
  bool monitored = true;
  /// Score against ground truth in [0, 1]; absent when no ground truth exists.
  std::optional<double> score;
  /// Critical-path latency in seconds; absent when not measured.
  std::optional<double> latency_s;
  std::uint32_t corrections = 0;
  std::uint64_t monitoring_debt = 0;
  bool degraded = false;
  /// Suite-specific extras (relative error, attempts, rounds).
  json extra = json::object();

  bool operator==(const MetricsRow&) const = default;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;

  bool operator==(const CheckResult&) const = default;
};

struct PairedRow {
  std::string task;
  std::uint64_t seed = 0;
  MetricsRow baseline;
  MetricsRow monitored;
  std::optional<double> overhead_pct;
  std::optional<double> improvement_pct;
};

struct Aggregates {
  std::size_t rows = 0;
  std::size_t pairs = 0;
  std::optional<double> mean_score;
  std::optional<double> mean_latency_s;
  /// Means over paired rows only.
  std::optional<double> overhead_pct;
  std::optional<double> improvement_pct;
};

struct MetricsReport {
  std::string suite;
  json params = json::object();
  std::vector<MetricsRow> rows;
  std::vector<CheckResult> checks;
  /// Suite-level measurements beyond the per-row aggregates.
  json summary = json::object();

  bool passed() const;
  Aggregates aggregate() const;
};

void to_json(json& j, const MetricsRow& row);
void from_json(const json& j, MetricsRow& row);
void to_json(json& j, const CheckResult& check);
void from_json(const json& j, CheckResult& check);

/// Monitored and unmonitored rows matched on (task, seed). Overhead is the
/// relative latency increase and improvement the score difference, both in
/// percent; each is absent when either side lacks the measurement.
std::vector<PairedRow> pair_rows(const std::vector<MetricsRow>& rows);

/// JSON lines: a header line with the timestamp, one line per row, and an
/// aggregate footer line holding checks and summary.
void write_metrics(const MetricsReport& report, std::ostream& out, const std::string& timestamp);
void write_metrics_file(const MetricsReport& report, const std::filesystem::path& path);
MetricsReport read_metrics(std::istream& in);
MetricsReport read_metrics_file(const std::filesystem::path& path);

/// Current UTC time in ISO 8601.
std::string utc_timestamp();

std::string render_markdown(const std::vector<MetricsReport>& reports);
std::string render_csv(const std::vector<MetricsReport>& reports);

/// Row for an executed workflow. The score is exact-match of the final
/// output's value against `expected` when given.
MetricsRow row_from_record(const std::string& task, std::uint64_t seed,
                           const ExecutionRecord& record, std::optional<double> expected);

}  // namespace vigil
