#include <doctest.h>

#include <algorithm>

#include "vigil/backends.hpp"
#include "vigil/cross_validation.hpp"
#include "vigil/rng.hpp"
#include "vigil/sim.hpp"
#include "fixtures.hpp"

using namespace vigil;
using vigil::testing::make_test_verdict;

namespace {

const SnapshotKey kKey{"n1", {}, 0};

Verdict pass_v() { return make_test_verdict(kKey, true, 0.9); }
Verdict fail_v(ErrorCategory c = ErrorCategory::Content, double conf = 0.8) {
  return make_test_verdict(kKey, false, conf, c);
}

}  // namespace

TEST_CASE("unanimous pass has no disagreement") {
  std::vector<Verdict> v{pass_v(), pass_v(), pass_v()};
  CHECK(pairwise_disagreement(v) == 0.0);
  CHECK(normalized_entropy(v) == 0.0);
  CHECK(majority_category(v) == ErrorCategory::None);
  auto report = summarize_verdicts(v, {"x", "y", "z"}, "x");
  CHECK(escalate_decision(report) == EscalationAction::Accept);
}

TEST_CASE("pass pass fail gives two thirds disagreement and 0.9183 entropy") {
  std::vector<Verdict> v{pass_v(), pass_v(), fail_v()};
  CHECK(pairwise_disagreement(v) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(normalized_entropy(v) == doctest::Approx(0.9183).epsilon(1e-4));
  CHECK(majority_category(v) == ErrorCategory::None);
}

TEST_CASE("a failing majority ties toward fail and reports the modal category") {
  std::vector<Verdict> tie{pass_v(), fail_v(ErrorCategory::Format)};
  CHECK(majority_category(tie) == ErrorCategory::Format);
  std::vector<Verdict> modal{fail_v(ErrorCategory::Content), fail_v(ErrorCategory::Logic),
                             fail_v(ErrorCategory::Content), pass_v()};
  CHECK(majority_category(modal) == ErrorCategory::Content);
  std::vector<Verdict> modal_tie{fail_v(ErrorCategory::Content), fail_v(ErrorCategory::Logic)};
  CHECK(majority_category(modal_tie) == ErrorCategory::Logic);
  auto report = summarize_verdicts(modal, {"a", "b", "c", "d"}, "sim");
  CHECK(escalate_decision(report) == EscalationAction::Correct);
}

TEST_CASE("homogeneous passes overridden by cross-architecture fails flag systematic bias") {
  std::vector<Verdict> v{pass_v(), pass_v(), fail_v(), fail_v()};
  auto report = summarize_verdicts(v, {"sim", "sim", "rule", "sampled"}, "sim");
  CHECK(report.majority_fails());
  CHECK(report.systematic_flag);
  const auto action = escalate_decision(report);
  CHECK(action == EscalationAction::FlagSystematic);
  auto verdict = verdict_from_report(kKey, report, action);
  CHECK_FALSE(verdict.pass);
  CHECK(verdict.category == ErrorCategory::Systematic);
}

TEST_CASE("disagreement above threshold corrects even with a passing majority") {
  std::vector<Verdict> v{pass_v(), pass_v(), fail_v()};
  auto report = summarize_verdicts(v, {"a", "b", "c"}, "");
  CHECK(escalate_decision(report, {0.5, 1.0}) == EscalationAction::Correct);
  CHECK(escalate_decision(report, {0.7, 1.0}) == EscalationAction::Accept);
}

TEST_CASE("a failing ensemble takes the confidence of its most certain failing member") {
  std::vector<Verdict> v{fail_v(ErrorCategory::Content, 0.75), fail_v(ErrorCategory::Content, 0.95),
                         pass_v()};
  auto report = summarize_verdicts(v, {"a", "b", "c"}, "");
  auto verdict = verdict_from_report(kKey, report, EscalationAction::Correct);
  CHECK(verdict.confidence == doctest::Approx(0.95));
}

TEST_CASE("member failures are excluded and can leave the report inconclusive") {
  auto spec = testing::clean_chain(1, 1.0, 0.0);
  BackendRegistry registry;
  registry.add_monitor("oracle", std::make_shared<OracleMonitor>(spec));
  registry.add_monitor("broken", std::make_shared<testing::ThrowingMonitor>());
  EnsembleConfig ensemble;
  ensemble.members = {{"oracle", "rule"}, {"broken", "llm"}, {"missing", "other"}};
  Snapshot snap = testing::make_test_snapshot("n1", 0, 0, 1.0);
  AssessmentContext ctx{snap.key(), snap.input, {}};
  auto report = cross_validate(snap, ctx, ensemble, registry);
  CHECK(report.k_effective == 1);
  CHECK(report.excluded.size() == 2);
  CHECK(report.inconclusive);
  CHECK_THROWS_AS(escalate_decision(report), Error);

  ensemble.members.push_back({"oracle", "rule-2"});
  auto ok = cross_validate(snap, ctx, ensemble, registry);
  CHECK_FALSE(ok.inconclusive);
  CHECK(ok.k_effective == 2);
}

TEST_CASE("ensemble reduction is permutation invariant and bounded") {
  Rng rng(2024);
  const ErrorCategory cats[] = {ErrorCategory::None, ErrorCategory::Logic, ErrorCategory::Format,
                                ErrorCategory::Content, ErrorCategory::Systematic};
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t k = 1 + rng.below(8);
    std::vector<Verdict> v;
    std::vector<std::string> arch;
    for (std::size_t i = 0; i < k; ++i) {
      const auto c = cats[rng.below(5)];
      v.push_back(c == ErrorCategory::None ? pass_v() : fail_v(c, rng.uniform()));
      arch.push_back(rng.below(2) ? "sim" : "other" + std::to_string(rng.below(3)));
    }
    auto base = summarize_verdicts(v, arch, "sim");
    std::vector<std::size_t> perm(k);
    for (std::size_t i = 0; i < k; ++i) perm[i] = i;
    for (std::size_t i = k; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<Verdict> pv;
    std::vector<std::string> pa;
    for (auto i : perm) {
      pv.push_back(v[i]);
      pa.push_back(arch[i]);
    }
    auto shuffled = summarize_verdicts(pv, pa, "sim");
    CHECK(base.pairwise_disagreement == doctest::Approx(shuffled.pairwise_disagreement));
    CHECK(base.normalized_entropy == doctest::Approx(shuffled.normalized_entropy));
    CHECK(base.majority == shuffled.majority);
    CHECK(base.systematic_flag == shuffled.systematic_flag);
    CHECK(base.pairwise_disagreement >= 0.0);
    CHECK(base.pairwise_disagreement <= 1.0);
    CHECK(base.normalized_entropy >= 0.0);
    CHECK(base.normalized_entropy <= 1.0);
  }
}
