#include <doctest.h>

#include "vigil/chaos.hpp"
#include "vigil/executor.hpp"
#include "vigil/sim.hpp"
#include "fixtures.hpp"

using namespace vigil;

TEST_CASE("no actions leaves the payload untouched") {
  ChaosSpec spec;
  auto r = inject_chaos(spec, {"a", "b"}, sim_payload(6.0), 1);
  REQUIRE(r.payload);
  CHECK(*r.payload == sim_payload(6.0));
  CHECK_FALSE(r.event);
}

TEST_CASE("tamper rewrites the field and the content") {
  ChaosSpec spec;
  ChaosAction tamper;
  tamper.kind = ChaosAction::Kind::Tamper;
  tamper.delta = 1.0;
  spec.edges[{"a", "b"}] = {tamper};
  auto r = inject_chaos(spec, {"a", "b"}, sim_payload(6.0), 1);
  REQUIRE(r.payload);
  CHECK(payload_value(*r.payload) == 7.0);
  CHECK(r.payload->content == sim_content(7.0));
  REQUIRE(r.event);
  CHECK(r.event->find("tamper") != std::string::npos);
  auto other = inject_chaos(spec, {"b", "c"}, sim_payload(6.0), 1);
  CHECK(*other.payload == sim_payload(6.0));
}

TEST_CASE("a certain drop leaves no payload and delays are reported") {
  ChaosSpec spec;
  ChaosAction drop;
  drop.kind = ChaosAction::Kind::Drop;
  spec.edges[{"a", "b"}] = {drop};
  auto r = inject_chaos(spec, {"a", "b"}, sim_payload(6.0), 1);
  CHECK_FALSE(r.payload);
  CHECK(r.event);

  ChaosSpec slow;
  ChaosAction delay;
  delay.kind = ChaosAction::Kind::Delay;
  delay.delay_ms = 5.0;
  slow.edges[{"a", "b"}] = {delay};
  auto d = inject_chaos(slow, {"a", "b"}, sim_payload(6.0), 1, false);
  CHECK(d.delayed_ms == 5.0);
  CHECK(*d.payload == sim_payload(6.0));
}

TEST_CASE("the consumer sees a missing input for a dropped edge") {
  auto spec = testing::clean_chain(3);
  BackendRegistry backends;
  backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  auto graph = spec->graph("sim");
  RunConfig config;
  ChaosAction drop;
  drop.kind = ChaosAction::Kind::Drop;
  config.chaos.edges[{"n1", "n2"}] = {drop};
  Executor executor(backends);
  auto record = executor.execute(graph, sim_payload(0.0), config);
  CHECK(payload_value(record.outputs.at("n2")) == 1.0);
  CHECK(record.chaos_events.size() == 1);
}

TEST_CASE("tampering on an edge is caught and corrected by the oracle") {
  auto spec = testing::clean_chain(3);
  BackendRegistry backends;
  backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  backends.add_monitor("oracle", std::make_shared<OracleMonitor>(spec));
  auto graph = spec->graph("sim");
  graph.nodes.at("n2").monitor = MonitorConfig{"oracle", 0.7, 3};
  RunConfig config;
  ChaosAction tamper;
  tamper.kind = ChaosAction::Kind::Tamper;
  tamper.delta = 1.0;
  tamper.probability = 0.5;
  config.chaos.edges[{"n1", "n2"}] = {tamper};
  Executor executor(backends);
  int tampered = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    config.seed = seed;
    auto record = executor.execute(graph, sim_payload(0.0), config);
    if (!record.chaos_events.empty()) ++tampered;
    if (!record.degraded) CHECK(payload_value(record.final_output) == 3.0);
  }
  CHECK(tampered > 0);
}
