#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "vigil/graph.hpp"
#include "vigil/types.hpp"

namespace vigil {

struct RetentionNode {
  NodeId id;
  /// Cost of re-executing the node; must be > 0.
  double cost = 1.0;
  /// Snapshot size; must be > 0. Reported, not optimized.
  double size = 1.0;
  /// Probability that the node needs recovery.
  double failure_probability = 1.0;
};

struct RetentionPlan {
  std::set<NodeId> retained;
  double expected_cost = 0.0;
};

/// Expected recovery cost of keeping `retained` on a chain: node i pays the
/// summed cost from the nearest retained node at or before it (or from the
/// first node) up to i, weighted by its failure probability.
double chain_recovery_cost(const std::vector<RetentionNode>& chain,
                           const std::set<NodeId>& retained);

/// Exact minimizer of chain_recovery_cost subject to |retained| <= budget and
/// frontier ⊆ retained. Layered dynamic program over segment starts with a
/// lower-envelope line structure: O(budget * n log n). Throws when the
/// frontier does not fit the budget or an input is out of range.
RetentionPlan optimize_retention(const std::vector<RetentionNode>& chain, std::size_t budget,
                                 const std::set<NodeId>& frontier = {});

/// Expected recovery cost on a DAG: recovering node i re-executes every node
/// on a path back to the nearest retained ancestors (sources if none).
double dag_recovery_cost(const GraphTopology& topology, const std::vector<RetentionNode>& nodes,
                         const std::set<NodeId>& retained);

/// General graphs: greedy heuristic. Starting from the frontier it adds the
/// node with the largest cost reduction until the budget is spent or no node
/// helps. Chains are delegated to the exact optimizer. `nodes` is indexed by
/// schedule position.
RetentionPlan optimize_retention(const GraphTopology& topology,
                                 const std::vector<RetentionNode>& nodes, std::size_t budget,
                                 const std::set<NodeId>& frontier = {});

}  // namespace vigil
