#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "vigil/monitoring.hpp"
#include "vigil/types.hpp"

namespace vigil {

class BackendRegistry;

struct EnsembleMember {
  std::string backend;
  std::string architecture;

  bool operator==(const EnsembleMember&) const = default;
};

struct EnsembleConfig {
  std::vector<EnsembleMember> members;
  /// Architecture of the execution-side model. Members with this tag form the
  /// homogeneous subset checked by the systematic-bias rule.
  std::string execution_architecture;
  double disagreement_threshold = 0.5;
  /// Reported alongside the decision; not gating.
  double entropy_threshold = 1.0;

  std::size_t k() const { return members.size(); }
  bool heterogeneous() const;
  bool operator==(const EnsembleConfig&) const = default;
};

struct DisagreementReport {
  std::vector<Verdict> verdicts;
  std::vector<std::string> architectures;
  std::vector<std::string> excluded;
  std::size_t k_effective = 0;
  double pairwise_disagreement = 0.0;
  double normalized_entropy = 0.0;
  ErrorCategory majority = ErrorCategory::None;
  bool systematic_flag = false;
  bool inconclusive = false;

  bool majority_fails() const { return majority != ErrorCategory::None; }
};

/// Fraction of unordered verdict pairs whose pass flags differ.
double pairwise_disagreement(const std::vector<Verdict>& verdicts);

/// Shannon entropy of the category distribution divided by log(m), where m is
/// the number of distinct categories present. Zero when unanimous.
double normalized_entropy(const std::vector<Verdict>& verdicts);

/// Pass/fail majority with fail winning ties; a failing majority reports the
/// modal failure category (ties ordered logic, format, content, systematic).
ErrorCategory majority_category(const std::vector<Verdict>& verdicts);

/// Deterministic reduction over member verdicts. `architectures[i]` tags
/// `verdicts[i]`.
DisagreementReport summarize_verdicts(std::vector<Verdict> verdicts,
                                      std::vector<std::string> architectures,
                                      const std::string& execution_architecture);

struct CrossValidateOptions {
  AssessOptions assess;
  bool parallel = false;
};

/// Runs every ensemble member over the snapshot. Members whose backend is
/// missing or unavailable are excluded; fewer than two remaining members
/// marks the report inconclusive.
DisagreementReport cross_validate(const Snapshot& snapshot, const AssessmentContext& context,
                                  const EnsembleConfig& ensemble,
                                  const BackendRegistry& registry,
                                  const CrossValidateOptions& options = {});

enum class EscalationAction { Accept, Correct, FlagSystematic };

std::string_view to_string(EscalationAction action);

struct EscalationThresholds {
  double disagreement = 0.5;
  double entropy = 1.0;
};

/// Throws when the report is inconclusive.
EscalationAction escalate_decision(const DisagreementReport& report,
                                   const EscalationThresholds& thresholds = {});

/// Collapses a report into one verdict for routing.
Verdict verdict_from_report(const SnapshotKey& key, const DisagreementReport& report,
                            EscalationAction action);

}  // namespace vigil
