#include <doctest.h>

#include <condition_variable>
#include <mutex>

#include "vigil/monitor_binding.hpp"
#include "fixtures.hpp"

using namespace vigil;
using vigil::testing::make_test_snapshot;
using vigil::testing::make_test_verdict;

namespace {

WorkflowGraph chain3() {
  WorkflowGraph g;
  for (auto id : {"a", "b", "c"}) g.add_node(NodeSpec{id, "sim", "{input}", std::nullopt, ""});
  g.add_edge("a", "b");
  g.add_edge("b", "c");
  return g;
}

WorkflowGraph diamond() {
  WorkflowGraph g;
  for (auto id : {"a", "b", "c", "d"}) g.add_node(NodeSpec{id, "sim", "{input}", std::nullopt, ""});
  g.add_edge("a", "b");
  g.add_edge("a", "c");
  g.add_edge("b", "d");
  g.add_edge("c", "d");
  return g;
}

MonitorConfig config(double threshold = 0.7, std::uint32_t budget = 3) {
  MonitorConfig m;
  m.backend = "oracle";
  m.threshold = threshold;
  m.max_corrections = budget;
  return m;
}

}  // namespace

TEST_CASE("bind changes only the target node's binding") {
  const auto g = chain3();
  auto result = bind(g, "b", config());
  CHECK_FALSE(result.warning);
  for (const auto& [id, spec] : result.graph.nodes) {
    if (id == "b") {
      REQUIRE(spec.monitor);
      CHECK(*spec.monitor == config());
    } else {
      CHECK(spec == g.nodes.at(id));
    }
  }
  CHECK(result.graph.edges == g.edges);
}

TEST_CASE("binding an unknown node or invalid config throws; re-binding warns") {
  CHECK_THROWS_AS(bind(chain3(), "zz", config()), GraphError);
  CHECK_THROWS_AS(bind(chain3(), "a", config(1.5)), Error);
  MonitorConfig hcv = config();
  hcv.mode = MonitorMode::Hcv;
  hcv.backend.clear();
  CHECK_THROWS_AS(check_monitor_config(hcv), Error);
  auto first = bind(chain3(), "b", config());
  MonitorConfig other = config(0.5);
  other.backend = "other";
  auto second = bind(first.graph, "b", other);
  REQUIRE(second.warning);
  CHECK(second.warning->find("oracle") != std::string::npos);
  CHECK(second.graph.nodes.at("b").monitor->backend == "other");
}

TEST_CASE("dispatch obeys binding and activation") {
  MonitorDispatcher dispatcher(1, 0);
  TaskRegistry registry("run");
  const auto snap = make_test_snapshot("b", 0, 0);
  std::mutex m;
  std::condition_variable cv;
  bool release = false;
  auto gate = [&](const CancelToken&) {
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return release; });
  };

  CHECK_FALSE(dispatcher.on_complete(std::nullopt, snap, registry, gate));
  CHECK(registry.size() == 0);

  auto handle = dispatcher.on_complete(config(), snap, registry, gate);
  REQUIRE(handle);
  CHECK(handle->key == snap.key());
  CHECK(registry.contains(snap.key(), TaskKind::Assessment));
  CHECK(registry.size() == 1);

  MonitorConfig lazy = config();
  lazy.activation = Activation::OnLowUpstreamConfidence;
  lazy.activation_cutoff = 0.9;
  CHECK_FALSE(dispatcher.on_complete(lazy, make_test_snapshot("c", 0, 0), registry, gate, 0.95));
  CHECK(dispatcher.on_complete(lazy, make_test_snapshot("c", 0, 0), registry, gate, 0.5));
  CHECK(should_activate(lazy, std::nullopt));

  {
    std::lock_guard lock(m);
    release = true;
  }
  cv.notify_all();
  dispatcher.wait_idle();
  CHECK(registry.size() == 0);
}

TEST_CASE("a saturated queue drops the assessment and records debt") {
  MonitorDispatcher dispatcher(1, 1);
  TaskRegistry registry;
  MonitorMetrics metrics;
  std::mutex m;
  std::condition_variable cv;
  bool started = false, release = false;
  auto gate = [&](const CancelToken&) {
    std::unique_lock lock(m);
    started = true;
    cv.notify_all();
    cv.wait(lock, [&] { return release; });
  };
  REQUIRE(dispatcher.on_complete(config(), make_test_snapshot("a", 0, 0), registry, gate, {}, &metrics));
  {
    std::unique_lock lock(m);
    cv.wait(lock, [&] { return started; });
  }
  REQUIRE(dispatcher.on_complete(config(), make_test_snapshot("a", 0, 1), registry, gate, {}, &metrics));
  CHECK_FALSE(dispatcher.on_complete(config(), make_test_snapshot("a", 0, 2), registry, gate, {}, &metrics));
  CHECK(metrics.dropped == 1);
  CHECK(metrics.debt() == 1);
  CHECK_FALSE(registry.contains(SnapshotKey{"a", {}, 2}, TaskKind::Assessment));
  {
    std::lock_guard lock(m);
    release = true;
  }
  cv.notify_all();
  dispatcher.wait_idle();
}

TEST_CASE("task registry rejects duplicates and reports cancellation") {
  TaskRegistry registry;
  SnapshotKey key{"a", {}, 0};
  auto token = registry.register_task(key, TaskKind::Node);
  CHECK_THROWS_AS(registry.register_task(key, TaskKind::Node), Error);
  CHECK_NOTHROW(registry.register_task(key, TaskKind::Assessment));
  CHECK(registry.cancel_where([](const SnapshotKey&, TaskKind k) { return k == TaskKind::Node; }) == 1);
  CHECK(token.cancelled());
  CHECK_FALSE(registry.complete(key, TaskKind::Node));
  CHECK(registry.complete(key, TaskKind::Assessment));
  CHECK(registry.clear() == 0);
}

TEST_CASE("routing follows the threshold rule") {
  const auto snap = make_test_snapshot("b", 0, 0);
  CHECK(route_verdict(make_test_verdict(snap.key(), true, 0.9), snap, config()).action ==
        RouteDecision::Action::Accept);
  auto correct = route_verdict(make_test_verdict(snap.key(), false, 0.8), snap, config());
  CHECK(correct.action == RouteDecision::Action::Correct);
  REQUIRE(correct.request);
  CHECK(correct.request->key == snap.key());
  auto low = route_verdict(make_test_verdict(snap.key(), false, 0.6), snap, config());
  CHECK(low.action == RouteDecision::Action::Accept);
  CHECK_FALSE(low.degraded);

  const auto last = make_test_snapshot("b", 0, 3);
  auto exhausted = route_verdict(make_test_verdict(last.key(), false, 0.8), last, config());
  CHECK(exhausted.action == RouteDecision::Action::Accept);
  CHECK(exhausted.degraded);
}

TEST_CASE("stale verdicts are discarded and counted") {
  EpochFence fence;
  MonitorMetrics metrics;
  fence.invalidate("b", Epoch{1});
  fence.invalidate("b", Epoch{0});
  CHECK(fence.valid_from("b") == Epoch{1});
  const auto old = make_test_snapshot("b", 0, 0);
  auto d = route_verdict(make_test_verdict(old.key(), false, 0.9), old, config(), &fence, &metrics);
  CHECK(d.action == RouteDecision::Action::Discard);
  CHECK(metrics.stale_discarded == 1);
  const auto fresh = make_test_snapshot("b", 1, 1);
  CHECK(route_verdict(make_test_verdict(fresh.key(), false, 0.9), fresh, config(), &fence).action ==
        RouteDecision::Action::Correct);
}

TEST_CASE("the router yields at most one request per snapshot") {
  VerdictRouter router;
  MonitorMetrics metrics;
  const auto snap = make_test_snapshot("b", 0, 0);
  auto v = make_test_verdict(snap.key(), false, 0.9);
  CHECK(router.route(v, snap, config(), nullptr, &metrics).action == RouteDecision::Action::Correct);
  CHECK(router.route(v, snap, config(), nullptr, &metrics).action == RouteDecision::Action::Discard);
  CHECK(metrics.duplicate_discarded == 1);
}

TEST_CASE("cancel_descendants follows reachability") {
  SUBCASE("chain with downstream in flight") {
    TaskRegistry registry;
    registry.register_task(SnapshotKey{"c", Epoch{0}, 0}, TaskKind::Node);
    registry.register_task(SnapshotKey{"a", Epoch{0}, 0}, TaskKind::Assessment);
    CHECK(cancel_descendants(chain3(), "b", Epoch{1}, registry) == 1);
    CHECK(cancel_descendants(chain3(), "b", Epoch{1}, registry) == 0);
    CHECK(registry.contains(SnapshotKey{"a", Epoch{0}, 0}, TaskKind::Assessment));
  }
  SUBCASE("nothing in flight") {
    TaskRegistry registry;
    CHECK(cancel_descendants(chain3(), "a", Epoch{1}, registry) == 0);
  }
  SUBCASE("diamond branch") {
    TaskRegistry registry;
    registry.register_task(SnapshotKey{"b", Epoch{0}, 0}, TaskKind::Node);
    registry.register_task(SnapshotKey{"c", Epoch{0}, 0}, TaskKind::Node);
    registry.register_task(SnapshotKey{"d", Epoch{0}, 0}, TaskKind::Node);
    registry.register_task(SnapshotKey{"d", Epoch{1}, 0}, TaskKind::Node);
    CHECK(cancel_descendants(diamond(), "b", Epoch{1}, registry) == 2);
    CHECK(registry.contains(SnapshotKey{"c", Epoch{0}, 0}, TaskKind::Node));
    CHECK(registry.contains(SnapshotKey{"d", Epoch{1}, 0}, TaskKind::Node));
  }
}
