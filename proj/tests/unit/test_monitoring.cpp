#include <doctest.h>

#include "vigil/monitoring.hpp"
#include "vigil/sim.hpp"
#include "fixtures.hpp"

using namespace vigil;
using vigil::testing::clean_chain;

namespace {

Snapshot snapshot_with(const Payload& output, const NodeId& node = "n1") {
  Snapshot s = testing::make_test_snapshot(node, 0, 0);
  s.output = output;
  return s;
}

}  // namespace

TEST_CASE("aggregation follows the configured rule") {
  CHECK(aggregate({1, 1, 1}) == 1.0);
  CHECK(aggregate({0.9, 0.4, 0.8}) == 0.4);
  CHECK(aggregate({0.9, 0.4, 0.8}, AggregationRule::weighted(0.5, 0.25, 0.25)) ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK_THROWS_AS(aggregate({1.2, 1, 1}), Error);
  CHECK_THROWS_AS(aggregate({1, 1, 1}, AggregationRule::weighted(0.5, 0.5, 0.5)), Error);
}

TEST_CASE("classification picks the lowest failing dimension") {
  CHECK(classify({1, 1, 1}, false) == ErrorCategory::None);
  CHECK(classify({0.9, 0.2, 0.8}, false) == ErrorCategory::Format);
  CHECK(classify({0.3, 0.3, 0.3}, false) == ErrorCategory::Logic);
  CHECK(classify({1, 0.4, 0.4}, false) == ErrorCategory::Format);
  CHECK(classify({1, 1, 0.1}, true) == ErrorCategory::Systematic);
  CHECK(classify({1, 1, 1}, true) == ErrorCategory::None);
  ClassifyOptions strict;
  strict.cutoffs = {0.95, 0.95, 0.95};
  CHECK(classify({0.9, 1, 1}, false, strict) == ErrorCategory::Logic);
}

TEST_CASE("oracle assessment of sim outputs") {
  auto spec = clean_chain(1, 2.0, 1.0);
  OracleMonitor oracle(spec);
  AssessmentContext ctx;
  ctx.key = SnapshotKey{"n1", {}, 0};

  SUBCASE("exact output passes") {
    auto v = assess(snapshot_with(sim_payload(3.0)), ctx, oracle);
    CHECK(v.pass);
    CHECK(v.category == ErrorCategory::None);
    CHECK(v.scores == DimensionScores{1, 1, 1});
  }
  SUBCASE("perturbed value is a content error") {
    auto v = assess(snapshot_with(sim_payload(3.3)), ctx, oracle);
    CHECK_FALSE(v.pass);
    CHECK(v.category == ErrorCategory::Content);
    CHECK(v.scores.content_completeness == 0.0);
    CHECK(v.scores.logical_consistency == 1.0);
    CHECK(v.scores.format_compliance == 1.0);
  }
  SUBCASE("corrupted rendering is a format error") {
    Payload p = sim_payload(3.0);
    p.content = "value is three";
    auto v = assess(snapshot_with(p), ctx, oracle);
    CHECK(v.category == ErrorCategory::Format);
  }
  SUBCASE("missing structured field zeroes completeness") {
    Payload p = sim_payload(3.0);
    p.structured.clear();
    auto j = oracle_judge(*spec, "n1", p);
    CHECK(j.scores.content_completeness == 0.0);
  }
}

TEST_CASE("confidence is certainty in the judgment") {
  AssessOptions options;
  JudgeResult judged{{0.9, 0.4, 0.8}, "format: broken"};
  auto v = make_verdict(SnapshotKey{"x", {}, 0}, judged, options);
  CHECK_FALSE(v.pass);
  CHECK(v.quality == doctest::Approx(0.4));
  CHECK(v.confidence == doctest::Approx(0.6));
  auto ok = make_verdict(SnapshotKey{"x", {}, 0}, JudgeResult{{0.9, 0.95, 0.8}, "fine"}, options);
  CHECK(ok.pass);
  CHECK(ok.confidence == doctest::Approx(0.8));
}

TEST_CASE("an unavailable monitor fails open and counts debt") {
  testing::ThrowingMonitor broken;
  MonitorMetrics metrics;
  AssessOptions options;
  options.metrics = &metrics;
  AssessmentContext ctx;
  ctx.key = SnapshotKey{"n1", {}, 0};
  auto v = assess(snapshot_with(sim_payload(1.0)), ctx, broken, options);
  CHECK(v.pass);
  CHECK(v.monitor_unavailable);
  CHECK(metrics.debt() == 1);
  CHECK(metrics.unavailable == 1);
}

TEST_CASE("signatures repeat across distinct attempts only") {
  CHECK(rationale_stem("  Content: total is off\nmore") == "content");
  const auto sig = error_signature(ErrorCategory::Content, "content: value=3 expected 2");
  CHECK(sig == error_signature(ErrorCategory::Content, "Content: value=9 expected 2"));
  SignatureTracker tracker(2);
  CHECK_FALSE(tracker.observe(sig, "n1", 0));
  CHECK_FALSE(tracker.observe(sig, "n1", 0));
  CHECK(tracker.observe(sig, "n1", 1));
  CHECK(tracker.count(sig) == 2);
}
