#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "vigil/types.hpp"

namespace vigil {

/// What a monitor sees besides the output under judgment.
struct AssessmentContext {
  SnapshotKey key;
  Payload input;
  std::vector<Payload> upstream;
};

struct JudgeResult {
  DimensionScores scores;
  std::string rationale;
};

/// In-process monitor plug-in contract.
class MonitorBackend {
 public:
  virtual ~MonitorBackend() = default;
  virtual JudgeResult judge(const Payload& output, const AssessmentContext& context,
                            std::uint64_t seed) = 0;
};

/// Shared counters; safe to bump from concurrent assessments.
struct MonitorMetrics {
  std::atomic<std::uint64_t> assessments{0};
  std::atomic<std::uint64_t> unavailable{0};
  std::atomic<std::uint64_t> dropped{0};
  std::atomic<std::uint64_t> stale_discarded{0};
  std::atomic<std::uint64_t> duplicate_discarded{0};

  /// Assessments skipped or failed open to keep the scheduler unblocked.
  std::uint64_t debt() const { return unavailable.load() + dropped.load(); }
};

struct AggregationRule {
  enum class Kind { Min, WeightedMean };
  Kind kind = Kind::Min;
  std::array<double, 3> weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  static AggregationRule min() { return {}; }
  static AggregationRule weighted(double logical, double format, double content) {
    return AggregationRule{Kind::WeightedMean, {logical, format, content}};
  }
};

/// Confidence scalar in [0, 1]. Throws on out-of-range scores or weights
/// that do not sum to one within 1e-9.
double aggregate(const DimensionScores& scores, const AggregationRule& rule = {});

struct ClassifyOptions {
  /// Per-dimension cutoffs: logical, format, content.
  std::array<double, 3> cutoffs{0.5, 0.5, 0.5};
};

/// Lowest failing dimension wins, ties ordered logic > format > content.
/// `repeated_signature` upgrades any failure to Systematic.
ErrorCategory classify(const DimensionScores& scores, bool repeated_signature,
                       const ClassifyOptions& options = {});

struct AssessOptions {
  AggregationRule rule;
  ClassifyOptions classify;
  bool repeated_signature = false;
  std::uint64_t seed = 0;
  MonitorMetrics* metrics = nullptr;
};

/// Exactly one verdict per call. A throwing backend yields a pass verdict
/// marked monitor-unavailable and counts as monitoring debt.
Verdict assess(const Snapshot& snapshot, const AssessmentContext& context,
               MonitorBackend& backend, const AssessOptions& options = {});

/// Builds a verdict from raw judge output.
Verdict make_verdict(const SnapshotKey& key, const JudgeResult& judged,
                     const AssessOptions& options);

/// First clause of a rationale (text before ':' or newline), trimmed and
/// lower-cased.
std::string rationale_stem(const std::string& rationale);
std::string error_signature(ErrorCategory category, const std::string& rationale);

/// Counts distinct (node, attempt) occurrences of each error signature.
class SignatureTracker {
 public:
  explicit SignatureTracker(std::size_t repetitions = 2) : repetitions_(repetitions) {}

  /// Records the occurrence and reports whether the signature has now been
  /// seen at least `repetitions` times.
  bool observe(const std::string& signature, const NodeId& node, std::uint32_t attempt);
  std::size_t count(const std::string& signature) const;

 private:
  std::size_t repetitions_;
  mutable std::mutex mutex_;
  std::map<std::string, std::set<std::pair<NodeId, std::uint32_t>>> seen_;
};

}  // namespace vigil
