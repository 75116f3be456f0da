#include <doctest.h>

#include <algorithm>

#include "vigil/backends.hpp"
#include "vigil/error_model.hpp"
#include "vigil/graph.hpp"
#include "vigil/rng.hpp"
#include "vigil/sim.hpp"
#include "fixtures.hpp"

using namespace vigil;

namespace {

WorkflowGraph graph_of(std::vector<NodeId> ids, std::vector<std::pair<NodeId, NodeId>> edges) {
  WorkflowGraph g;
  for (auto& id : ids) g.add_node(NodeSpec{id, "sim", "{input}", std::nullopt, ""});
  for (auto& [a, b] : edges) g.edges.emplace(a, b);
  return g;
}

BackendRegistry sim_registry() {
  BackendRegistry r;
  auto spec = testing::clean_chain(3);
  r.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  r.add_monitor("oracle", std::make_shared<OracleMonitor>(spec));
  return r;
}

bool has_kind(const std::vector<ValidationError>& errors, ValidationError::Kind kind) {
  return std::any_of(errors.begin(), errors.end(), [&](const auto& e) { return e.kind == kind; });
}

}  // namespace

TEST_CASE("a well-formed chain validates cleanly") {
  auto g = graph_of({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}});
  g.nodes["b"].prompt_template = "{a}";
  g.nodes["c"].prompt_template = "{b}";
  CHECK(validate_graph(g, sim_registry()).empty());
}

TEST_CASE("a self-loop is reported as a cycle naming the node") {
  auto g = graph_of({"a"}, {{"a", "a"}});
  auto errors = validate_structure(g);
  REQUIRE(has_kind(errors, ValidationError::Kind::Cycle));
  auto it = std::find_if(errors.begin(), errors.end(),
                         [](const auto& e) { return e.kind == ValidationError::Kind::Cycle; });
  CHECK(std::find(it->nodes.begin(), it->nodes.end(), "a") != it->nodes.end());
}

TEST_CASE("an edge to an unknown node is dangling") {
  auto g = graph_of({"a"}, {{"a", "z"}});
  CHECK(has_kind(validate_structure(g), ValidationError::Kind::DanglingEdge));
}

TEST_CASE("empty graphs and unresolved references are rejected") {
  CHECK(has_kind(validate_structure(WorkflowGraph{}), ValidationError::Kind::EmptyGraph));
  auto g = graph_of({"a", "b"}, {{"a", "b"}});
  g.nodes["a"].backend = "missing";
  g.nodes["b"].prompt_template = "{nowhere}";
  MonitorConfig m;
  m.backend = "ghost";
  g.nodes["b"].monitor = m;
  auto errors = validate_graph(g, sim_registry());
  CHECK(has_kind(errors, ValidationError::Kind::UnresolvedBackend));
  CHECK(has_kind(errors, ValidationError::Kind::UnresolvedMonitor));
  CHECK(has_kind(errors, ValidationError::Kind::UnknownPlaceholder));
}

TEST_CASE("schedule is the lexicographically smallest topological order") {
  CHECK(schedule(graph_of({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}})) ==
        std::vector<NodeId>{"a", "b", "c"});
  CHECK(schedule(graph_of({"n"}, {})) == std::vector<NodeId>{"n"});
  auto diamond = graph_of({"d", "c", "b", "a"}, {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}});
  CHECK(schedule(diamond) == std::vector<NodeId>{"a", "b", "c", "d"});
  CHECK_THROWS_AS(schedule(graph_of({"a", "b"}, {{"a", "b"}, {"b", "a"}})), GraphError);
}

TEST_CASE("schedule matches brute-force enumeration on random DAGs") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(6);
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back(std::string(1, static_cast<char>('a' + i)));
    // Random permutation fixes the hidden topological order.
    std::vector<NodeId> hidden = ids;
    for (std::size_t i = n; i > 1; --i) std::swap(hidden[i - 1], hidden[rng.below(i)]);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (rng.uniform() < 0.4) edges.emplace_back(hidden[i], hidden[j]);
    auto g = graph_of(ids, edges);
    std::vector<NodeId> perm = ids, best;
    std::sort(perm.begin(), perm.end());
    do {
      bool ok = true;
      for (auto& [a, b] : edges) {
        auto pa = std::find(perm.begin(), perm.end(), a), pb = std::find(perm.begin(), perm.end(), b);
        if (pa > pb) ok = false;
      }
      if (ok) {
        best = perm;
        break;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(schedule(g) == best);
  }
}

TEST_CASE("topology answers reachability") {
  auto diamond = graph_of({"a", "b", "c", "d"}, {{"a", "b"}, {"a", "c"}, {"b", "d"}, {"c", "d"}});
  GraphTopology t(diamond);
  CHECK(t.descends_from(t.index_of("d"), t.index_of("b")));
  CHECK_FALSE(t.descends_from(t.index_of("c"), t.index_of("b")));
  CHECK(t.descends_from(t.index_of("b"), t.index_of("b")));
  CHECK_FALSE(t.is_chain());
  CHECK(GraphTopology(graph_of({"a", "b"}, {{"a", "b"}})).is_chain());
}

TEST_CASE("templates render known placeholders and keep unknown ones") {
  CHECK(template_placeholders("x {a} y {b}{a}") == std::vector<std::string>{"a", "b"});
  CHECK(render_template("{a}+{z}", {{"a", "1"}}) == "1+{z}");
}

TEST_CASE("error bound is the product of one plus each magnitude") {
  CHECK(error_bound({}) == 1.0);
  CHECK(error_bound({0.1, 0.2}) == doctest::Approx(1.32).epsilon(1e-12));
  CHECK(error_bound(std::vector<double>(10, 0.05)) == doctest::Approx(1.62889).epsilon(1e-5));
  CHECK_THROWS_AS(error_bound({-0.1}), Error);
  CHECK_THROWS_AS(error_bound({std::nan("")}), Error);
}
