#include "vigil/monitoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>

namespace vigil {

double aggregate(const DimensionScores& scores, const AggregationRule& rule) {
  if (!scores.valid()) throw Error("dimension scores must lie in [0, 1]");
  const std::array<double, 3> s{scores.logical_consistency, scores.format_compliance,
                                scores.content_completeness};
  if (rule.kind == AggregationRule::Kind::Min) return *std::min_element(s.begin(), s.end());

  double total = 0.0;
  for (double w : rule.weights) {
    if (w < 0.0) throw Error("aggregation weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("aggregation weights must sum to 1");
  double value = 0.0;
  for (std::size_t i = 0; i < 3; ++i) value += rule.weights[i] * s[i];
  return std::clamp(value, 0.0, 1.0);
}

ErrorCategory classify(const DimensionScores& scores, bool repeated_signature,
                       const ClassifyOptions& options) {
  if (!scores.valid()) throw Error("dimension scores must lie in [0, 1]");
  const std::array<double, 3> s{scores.logical_consistency, scores.format_compliance,
                                scores.content_completeness};
  constexpr std::array<ErrorCategory, 3> categories{ErrorCategory::Logic, ErrorCategory::Format,
                                                    ErrorCategory::Content};
  int worst = -1;
  for (int i = 0; i < 3; ++i) {
    if (s[i] >= options.cutoffs[i]) continue;
    // Strict comparison keeps the earlier dimension on ties.
    if (worst < 0 || s[i] < s[worst]) worst = i;
  }
  if (worst < 0) return ErrorCategory::None;
  if (repeated_signature) return ErrorCategory::Systematic;
  return categories[worst];
}

Verdict make_verdict(const SnapshotKey& key, const JudgeResult& judged,
                     const AssessOptions& options) {
  Verdict verdict;
  verdict.key = key;
  verdict.scores = judged.scores;
  verdict.rationale = judged.rationale;
  verdict.quality = aggregate(judged.scores, options.rule);
  verdict.category = classify(judged.scores, options.repeated_signature, options.classify);
  verdict.pass = verdict.category == ErrorCategory::None;
  verdict.confidence = verdict.pass ? verdict.quality : 1.0 - verdict.quality;
  return verdict;
}

Verdict assess(const Snapshot& snapshot, const AssessmentContext& context,
               MonitorBackend& backend, const AssessOptions& options) {
  if (options.metrics) options.metrics->assessments.fetch_add(1);
  try {
    JudgeResult judged = backend.judge(snapshot.output, context, options.seed);
    return make_verdict(snapshot.key(), judged, options);
  } catch (const std::exception& e) {
    if (options.metrics) options.metrics->unavailable.fetch_add(1);
    Verdict verdict;
    verdict.key = snapshot.key();
    verdict.category = ErrorCategory::None;
    verdict.pass = true;
    verdict.monitor_unavailable = true;
    verdict.confidence = 0.0;
    verdict.quality = 1.0;
    verdict.rationale = std::string("monitor-unavailable: ") + e.what();
    return verdict;
  }
}

std::string rationale_stem(const std::string& rationale) {
  auto end = rationale.find_first_of(":\n");
  std::string stem = rationale.substr(0, end);
  auto first = stem.find_first_not_of(" \t");
  auto last = stem.find_last_not_of(" \t");
  if (first == std::string::npos) return {};
  stem = stem.substr(first, last - first + 1);
  std::transform(stem.begin(), stem.end(), stem.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return stem;
}

std::string error_signature(ErrorCategory category, const std::string& rationale) {
  return digest(std::string(to_string(category)) + "|" + rationale_stem(rationale));
}

bool SignatureTracker::observe(const std::string& signature, const NodeId& node,
                               std::uint32_t attempt) {
  std::lock_guard lock(mutex_);
  auto& occurrences = seen_[signature];
  occurrences.emplace(node, attempt);
  return occurrences.size() >= repetitions_;
}

std::size_t SignatureTracker::count(const std::string& signature) const {
  std::lock_guard lock(mutex_);
  auto it = seen_.find(signature);
  return it == seen_.end() ? 0 : it->second.size();
}

}  // namespace vigil
