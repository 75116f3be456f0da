#include <doctest.h>

#include "vigil/graph.hpp"
#include "vigil/retention.hpp"
#include "vigil/rng.hpp"
#include "vigil/suites.hpp"

using namespace vigil;

namespace {

std::vector<RetentionNode> chain_of(const std::vector<double>& costs, const std::vector<double>& probs) {
  std::vector<RetentionNode> chain;
  for (std::size_t i = 0; i < costs.size(); ++i)
    chain.push_back(RetentionNode{"n" + std::to_string(i), costs[i], 1.0, probs[i]});
  return chain;
}

std::vector<bool> frontier_mask(const std::vector<RetentionNode>& chain, const std::set<NodeId>& frontier) {
  std::vector<bool> mask;
  for (const auto& n : chain) mask.push_back(frontier.count(n.id) != 0);
  return mask;
}

}  // namespace

TEST_CASE("an unconstrained budget costs only single-node retries") {
  auto chain = chain_of({2, 3, 4}, {0.5, 0.5, 0.5});
  auto plan = optimize_retention(chain, 3);
  CHECK(plan.retained.size() == 3);
  CHECK(plan.expected_cost == doctest::Approx(0.5 * (2 + 3 + 4)));
}

TEST_CASE("the four-node example matches exhaustive enumeration") {
  const std::vector<double> costs{5, 1, 1, 5}, probs(4, 0.25);
  auto chain = chain_of(costs, probs);
  auto plan = optimize_retention(chain, 2);
  const double brute = brute_force_retention_cost(costs, probs, 2, std::vector<bool>(4, false));
  CHECK(plan.expected_cost == doctest::Approx(brute).epsilon(1e-12));
  CHECK(chain_recovery_cost(chain, plan.retained) == doctest::Approx(brute).epsilon(1e-12));
  // By hand: {n1, n3} and {n1, n2} both replay 5 + 1 + 2 + 5 = 5 + 1 + 1 + 6.
  CHECK(brute == doctest::Approx(0.25 * 13));
  CHECK((plan.retained == std::set<NodeId>{"n1", "n3"} || plan.retained == std::set<NodeId>{"n1", "n2"}));
}

TEST_CASE("a single node is retained") {
  auto plan = optimize_retention(chain_of({1}, {1}), 1);
  CHECK(plan.retained == std::set<NodeId>{"n0"});
}

TEST_CASE("invalid inputs are rejected") {
  auto chain = chain_of({1, 1}, {1, 1});
  CHECK_THROWS_AS(optimize_retention(chain, 1, {"n0", "n1"}), Error);
  CHECK_THROWS_AS(optimize_retention(chain_of({0, 1}, {1, 1}), 1), Error);
  CHECK_THROWS_AS(optimize_retention(chain_of({1, 1}, {1.5, 1}), 1), Error);
}

TEST_CASE("the dynamic program equals exhaustive search on random chains") {
  Rng rng(31337);
  int mismatches = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> costs, probs;
    for (std::size_t i = 0; i < n; ++i) {
      costs.push_back(0.1 + 10.0 * rng.uniform());
      probs.push_back(rng.uniform());
    }
    auto chain = chain_of(costs, probs);
    std::set<NodeId> frontier;
    if (rng.below(2)) frontier.insert(chain[rng.below(n)].id);
    const std::size_t low = std::max<std::size_t>(1, frontier.size());
    for (std::size_t budget = low; budget <= n; ++budget) {
      auto plan = optimize_retention(chain, budget, frontier);
      const double brute = brute_force_retention_cost(costs, probs, budget, frontier_mask(chain, frontier));
      if (std::abs(plan.expected_cost - brute) > 1e-9 * std::max(1.0, brute)) ++mismatches;
      CHECK(plan.retained.size() <= budget);
      for (const auto& f : frontier) CHECK(plan.retained.count(f) == 1);
      CHECK(chain_recovery_cost(chain, plan.retained) == doctest::Approx(plan.expected_cost));
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("DAG retention keeps the frontier and never beats the unconstrained cost") {
  WorkflowGraph g;
  for (auto id : {"a", "b", "c", "d"}) g.add_node(NodeSpec{id, "sim", "{input}", std::nullopt, ""});
  g.add_edge("a", "b");
  g.add_edge("a", "c");
  g.add_edge("b", "d");
  g.add_edge("c", "d");
  GraphTopology topo(g);
  std::vector<RetentionNode> nodes;
  for (const auto& id : topo.order()) nodes.push_back(RetentionNode{id, 2.0, 1.0, 0.3});
  auto all = optimize_retention(topo, nodes, 4);
  auto two = optimize_retention(topo, nodes, 2, {"d"});
  CHECK(two.retained.count("d") == 1);
  CHECK(two.retained.size() <= 2);
  CHECK(two.expected_cost >= all.expected_cost - 1e-12);
  CHECK(dag_recovery_cost(topo, nodes, two.retained) == doctest::Approx(two.expected_cost));
}
