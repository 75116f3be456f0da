#include <doctest.h>

#include "vigil/executor.hpp"
#include "vigil/monitoring.hpp"
#include "vigil/sim.hpp"
#include "fixtures.hpp"

using namespace vigil;

namespace {

SimTaskSpec single(SimOp op, double constant, SimErrorModel error) {
  return SimTaskSpec::chain(1, SimNodeSpec{op, constant, error, 0.0}, 0.0);
}

}  // namespace

TEST_CASE("error-free nodes compute the exact value") {
  auto spec = single(SimOp::Mul, 2.0, SimErrorModel{0.0});
  auto out = sim_generate(spec, "n1", {sim_payload(3.0)}, 1);
  CHECK_FALSE(out.injected);
  CHECK(out.output == sim_payload(6.0));
  CHECK(out.reasoning_trace.find("injected=none") != std::string::npos);
}

TEST_CASE("certain injection scales the value and marks the trace") {
  auto spec = single(SimOp::Add, 0.0, SimErrorModel{1.0, PerturbationKind::ValueScale, 0.1});
  auto out = sim_generate(spec, "n1", {sim_payload(100.0)}, 1);
  CHECK(out.injected);
  CHECK(payload_value(out.output) == doctest::Approx(110.0).epsilon(1e-12));
  CHECK(out.reasoning_trace.find("injected=value-scale") != std::string::npos);
}

TEST_CASE("a perturbation seed offset can move the draw across the threshold") {
  auto spec = single(SimOp::Add, 1.0, SimErrorModel{0.5, PerturbationKind::ValueScale, 0.1});
  bool exhibited = false;
  for (std::uint64_t seed = 0; seed < 100 && !exhibited; ++seed) {
    auto first = sim_generate(spec, "n1", {sim_payload(1.0)}, seed);
    PerturbationDirective retry;
    retry.seed_offset = 1;
    auto second = sim_generate(spec, "n1", {sim_payload(1.0)}, seed, retry);
    if (first.injected && !second.injected) {
      exhibited = true;
      CHECK(payload_value(second.output) == 2.0);
    }
  }
  CHECK(exhibited);
}

TEST_CASE("avoided digests force a different wrong output") {
  auto spec = single(SimOp::Add, 1.0, SimErrorModel{1.0, PerturbationKind::ValueScale, 0.1});
  auto first = sim_generate(spec, "n1", {sim_payload(1.0)}, 3);
  PerturbationDirective avoid;
  avoid.avoid_digests = {output_digest(first.output)};
  auto second = sim_generate(spec, "n1", {sim_payload(1.0)}, 3, avoid);
  CHECK(second.injected);
  CHECK(output_digest(second.output) != output_digest(first.output));
}

TEST_CASE("every perturbation kind is caught by the oracle") {
  for (auto kind : {PerturbationKind::ValueScale, PerturbationKind::DigitFlip,
                    PerturbationKind::FormatCorrupt, PerturbationKind::Omission}) {
    auto spec = single(SimOp::Add, 4.0, SimErrorModel{1.0, kind, 0.1});
    auto out = sim_generate(spec, "n1", {sim_payload(1.0)}, 9);
    auto judged = oracle_judge(spec, "n1", out.output);
    CHECK_FALSE(judged.scores == DimensionScores{1, 1, 1});
  }
  auto spec = single(SimOp::Add, 4.0, SimErrorModel{});
  CHECK(oracle_judge(spec, "n1", sim_payload(4.0)).scores == DimensionScores{1, 1, 1});
  auto off = oracle_judge(spec, "n1", sim_payload(4.5));
  CHECK(off.scores == DimensionScores{1, 1, 0});
  Payload bare;
  bare.content = sim_content(5.0);
  CHECK(oracle_judge(spec, "n1", bare).scores.content_completeness == 0.0);
}

TEST_CASE("ground truth follows the graph") {
  SimTaskSpec spec;
  spec.input_value = 2.0;
  spec.nodes["a"] = SimNodeSpec{SimOp::Add, 1.0, {}, 0};
  spec.nodes["b"] = SimNodeSpec{SimOp::Mul, 2.0, {}, 0};
  spec.nodes["c"] = SimNodeSpec{SimOp::Add, 0.0, {}, 0};
  spec.parents = {{"a", {}}, {"b", {"a"}}, {"c", {"a", "b"}}};
  CHECK(spec.ground_truth("a") == 3.0);
  CHECK(spec.ground_truth("b") == 6.0);
  CHECK(spec.ground_truth("c") == 9.0);
  CHECK_THROWS_AS(spec.ground_truth("zz"), Error);
  CHECK(GraphTopology(spec.graph("sim")).order() == std::vector<NodeId>{"a", "b", "c"});
}

TEST_CASE("imperfect monitors behave as configured") {
  auto spec = std::make_shared<const SimTaskSpec>(single(SimOp::Add, 1.0, {}));
  AssessmentContext ctx;
  ctx.key = SnapshotKey{"n1", {}, 0};
  const Payload wrong = sim_payload(7.0), right = sim_payload(1.0);
  StochasticMonitor perfect(spec, 1.0, 0.0);
  OracleMonitor oracle(spec);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CHECK(perfect.judge(wrong, ctx, seed).scores == oracle.judge(wrong, ctx, seed).scores);
    CHECK(perfect.judge(right, ctx, seed).scores == oracle.judge(right, ctx, seed).scores);
  }
  StochasticMonitor blind(spec, 0.0, 0.0);
  CHECK(blind.judge(wrong, ctx, 1).scores == DimensionScores{1, 1, 1});
  StochasticMonitor paranoid(spec, 1.0, 1.0);
  CHECK(paranoid.judge(right, ctx, 1).scores.content_completeness == 0.0);
  BiasedMonitor biased(spec);
  CHECK(biased.judge(wrong, ctx, 1).scores == DimensionScores{1, 1, 1});
  Payload corrupt = right;
  corrupt.content = "VALUE: 1";
  CHECK(biased.judge(corrupt, ctx, 1).scores.format_compliance == 0.0);
  CHECK_THROWS_AS(StochasticMonitor(spec, 1.5, 0.0), Error);
}

TEST_CASE("a blind monitor leaves the run identical to the baseline") {
  SimNodeSpec node{SimOp::Add, 1.0, SimErrorModel{0.3, PerturbationKind::ValueScale, 0.1}, 0.0};
  auto spec = std::make_shared<const SimTaskSpec>(SimTaskSpec::chain(6, node, 0.0));
  BackendRegistry backends;
  backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  backends.add_monitor("blind", std::make_shared<StochasticMonitor>(spec, 0.0, 0.0));
  auto graph = spec->graph("sim");
  for (auto& [id, n] : graph.nodes) n.monitor = MonitorConfig{"blind", 0.7, 3};
  Executor executor(backends);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunConfig config;
    config.seed = seed;
    auto monitored = executor.execute(graph, sim_payload(0.0), config);
    config.monitoring = false;
    auto baseline = executor.execute(graph, sim_payload(0.0), config);
    CHECK(monitored.outputs == baseline.outputs);
    CHECK(monitored.correction_count == 0);
  }
}

TEST_CASE("a monitor that always objects spends one correction per node at R=1") {
  auto spec = testing::clean_chain(4);
  BackendRegistry backends;
  backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  backends.add_monitor("paranoid", std::make_shared<StochasticMonitor>(spec, 1.0, 1.0));
  auto graph = spec->graph("sim");
  for (auto& [id, n] : graph.nodes) n.monitor = MonitorConfig{"paranoid", 0.7, 1};
  Executor executor(backends);
  RunConfig config;
  config.seed = 4;
  auto record = executor.execute(graph, sim_payload(0.0), config);
  CHECK(record.correction_count == 4);
  for (const auto& [id, count] : record.corrections_per_node) CHECK(count == 1);
  CHECK(record.degraded);
  CHECK(payload_value(record.final_output) == 4.0);
}
