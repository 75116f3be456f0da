#include "vigil/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <optional>
#include <set>

#include "vigil/backends.hpp"

namespace vigil {

bool EnsembleConfig::heterogeneous() const {
  std::set<std::string> tags;
  for (const auto& member : members) tags.insert(member.architecture);
  return tags.size() >= 2;
}

double pairwise_disagreement(const std::vector<Verdict>& verdicts) {
  const std::size_t k = verdicts.size();
  if (k < 2) return 0.0;
  std::size_t fails = 0;
  for (const auto& v : verdicts)
    if (!v.pass) ++fails;
  // Pairs with differing pass flags are exactly pass x fail pairs.
  const double differing = static_cast<double>(fails) * static_cast<double>(k - fails);
  return differing / (static_cast<double>(k) * static_cast<double>(k - 1) / 2.0);
}

double normalized_entropy(const std::vector<Verdict>& verdicts) {
  if (verdicts.empty()) return 0.0;
  std::map<ErrorCategory, std::size_t> counts;
  for (const auto& v : verdicts) ++counts[v.category];
  if (counts.size() < 2) return 0.0;
  const double total = static_cast<double>(verdicts.size());
  double entropy = 0.0;
  for (const auto& [_, count] : counts) {
    const double p = static_cast<double>(count) / total;
    entropy -= p * std::log(p);
  }
  return std::clamp(entropy / std::log(static_cast<double>(counts.size())), 0.0, 1.0);
}

ErrorCategory majority_category(const std::vector<Verdict>& verdicts) {
  std::size_t fails = 0;
  std::map<ErrorCategory, std::size_t> fail_counts;
  for (const auto& v : verdicts) {
    if (v.pass) continue;
    ++fails;
    ++fail_counts[v.category];
  }
  const std::size_t passes = verdicts.size() - fails;
  if (fails == 0 || fails < passes) return ErrorCategory::None;
  ErrorCategory best = ErrorCategory::None;
  std::size_t best_count = 0;
  // std::map iterates in enum order: logic, format, content, systematic.
  for (const auto& [category, count] : fail_counts) {
    if (count > best_count) {
      best = category;
      best_count = count;
    }
  }
  return best;
}

DisagreementReport summarize_verdicts(std::vector<Verdict> verdicts,
                                      std::vector<std::string> architectures,
                                      const std::string& execution_architecture) {
  if (verdicts.size() != architectures.size())
    throw Error("summarize_verdicts: one architecture tag per verdict is required");
  DisagreementReport report;
  report.k_effective = verdicts.size();
  report.inconclusive = verdicts.size() < 2;
  report.pairwise_disagreement = pairwise_disagreement(verdicts);
  report.normalized_entropy = normalized_entropy(verdicts);
  report.majority = majority_category(verdicts);

  std::vector<Verdict> execution_side, cross_side;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    (architectures[i] == execution_architecture ? execution_side : cross_side)
        .push_back(verdicts[i]);
  }
  const bool execution_unanimous_pass =
      !execution_side.empty() &&
      std::all_of(execution_side.begin(), execution_side.end(),
                  [](const Verdict& v) { return v.pass; });
  const bool cross_majority_fails =
      !cross_side.empty() && majority_category(cross_side) != ErrorCategory::None;
  report.systematic_flag = execution_unanimous_pass && cross_majority_fails;

  report.verdicts = std::move(verdicts);
  report.architectures = std::move(architectures);
  return report;
}

DisagreementReport cross_validate(const Snapshot& snapshot, const AssessmentContext& context,
                                  const EnsembleConfig& ensemble,
                                  const BackendRegistry& registry,
                                  const CrossValidateOptions& options) {
  const std::size_t k = ensemble.members.size();
  std::vector<std::optional<Verdict>> results(k);
  std::vector<std::string> excluded;

  auto run_member = [&](std::size_t i) -> std::optional<Verdict> {
    auto backend = registry.monitor(ensemble.members[i].backend);
    if (!backend) return std::nullopt;
    AssessOptions member_options = options.assess;
    member_options.seed = options.assess.seed + i;
    Verdict v = assess(snapshot, context, *backend, member_options);
    if (v.monitor_unavailable) return std::nullopt;
    return v;
  };

  if (options.parallel && k > 1) {
    std::vector<std::future<std::optional<Verdict>>> futures;
    futures.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
      futures.push_back(std::async(std::launch::async, run_member, i));
    for (std::size_t i = 0; i < k; ++i) results[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < k; ++i) results[i] = run_member(i);
  }

  std::vector<Verdict> verdicts;
  std::vector<std::string> architectures;
  for (std::size_t i = 0; i < k; ++i) {
    if (results[i]) {
      verdicts.push_back(*results[i]);
      architectures.push_back(ensemble.members[i].architecture);
    } else {
      excluded.push_back(ensemble.members[i].backend);
    }
  }
  auto report = summarize_verdicts(std::move(verdicts), std::move(architectures),
                                   ensemble.execution_architecture);
  report.excluded = std::move(excluded);
  return report;
}

std::string_view to_string(EscalationAction action) {
  switch (action) {
    case EscalationAction::Accept: return "accept";
    case EscalationAction::Correct: return "correct";
    case EscalationAction::FlagSystematic: return "flag-systematic";
  }
  return "accept";
}

EscalationAction escalate_decision(const DisagreementReport& report,
                                   const EscalationThresholds& thresholds) {
  if (report.inconclusive) throw Error("cannot escalate on an inconclusive report");
  if (report.systematic_flag) return EscalationAction::FlagSystematic;
  if (report.majority_fails() || report.pairwise_disagreement >= thresholds.disagreement)
    return EscalationAction::Correct;
  return EscalationAction::Accept;
}

Verdict verdict_from_report(const SnapshotKey& key, const DisagreementReport& report,
                            EscalationAction action) {
  Verdict v;
  v.key = key;
  double min_quality = 1.0;
  for (const auto& member : report.verdicts) min_quality = std::min(min_quality, member.quality);
  v.quality = report.verdicts.empty() ? 1.0 : min_quality;
  if (action == EscalationAction::Accept) {
    v.pass = true;
    v.category = ErrorCategory::None;
    v.confidence = 1.0;
    for (const auto& member : report.verdicts)
      if (member.pass) v.confidence = std::min(v.confidence, member.confidence);
    v.rationale = "ensemble accepted";
    return v;
  }
  v.pass = false;
  // A failing ensemble is as certain as its most certain failing member.
  v.confidence = 0.0;
  const Verdict* lead = nullptr;
  for (const auto& member : report.verdicts) {
    if (member.pass) continue;
    if (!lead || member.confidence > lead->confidence) lead = &member;
  }
  if (lead) {
    v.confidence = lead->confidence;
    v.scores = lead->scores;
  }
  if (action == EscalationAction::FlagSystematic) {
    v.category = ErrorCategory::Systematic;
    v.rationale = "systematic: execution-architecture monitors passed while the "
                  "cross-architecture majority failed";
  } else {
    v.category = report.majority_fails() ? report.majority : ErrorCategory::Content;
    v.rationale = lead ? lead->rationale : "ensemble disagreement";
  }
  if (lead && action == EscalationAction::FlagSystematic) v.rationale += "; " + lead->rationale;
  return v;
}

}  // namespace vigil
