#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vigil/monitor_config.hpp"
#include "vigil/types.hpp"

namespace vigil {

class BackendRegistry;

struct NodeSpec {
  NodeId id;
  std::string backend;
  std::string prompt_template;
  std::optional<MonitorConfig> monitor;
  std::string role;

  bool operator==(const NodeSpec&) const = default;
};

struct WorkflowGraph {
  std::map<NodeId, NodeSpec> nodes;
  std::set<std::pair<NodeId, NodeId>> edges;

  bool operator==(const WorkflowGraph&) const = default;

  void add_node(NodeSpec spec);
  void add_edge(const NodeId& from, const NodeId& to);
  bool contains(const NodeId& id) const { return nodes.count(id) != 0; }
  std::vector<NodeId> parents(const NodeId& id) const;
  std::vector<NodeId> children(const NodeId& id) const;
};

/// Thrown by operations that require a validated graph.
class GraphError : public Error {
 public:
  using Error::Error;
};

struct ValidationError {
  enum class Kind {
    EmptyGraph,
    Cycle,
    DanglingEdge,
    NoSource,
    UnresolvedBackend,
    UnresolvedMonitor,
    InvalidMonitorConfig,
    UnknownPlaceholder,
  };
  Kind kind;
  std::string message;
  std::vector<NodeId> nodes;
};

std::string_view to_string(ValidationError::Kind kind);

/// Structural checks only (cycles, dangling edges, sources).
std::vector<ValidationError> validate_structure(const WorkflowGraph& graph);

/// Structural checks plus backend and monitor reference resolution.
std::vector<ValidationError> validate_graph(const WorkflowGraph& graph,
                                            const BackendRegistry& registry);

/// Topological order with lexicographic tie-breaking. Throws GraphError when
/// the graph is structurally invalid.
std::vector<NodeId> schedule(const WorkflowGraph& graph);

/// Placeholder names (`{name}`) referenced by a prompt template.
std::vector<std::string> template_placeholders(const std::string& text);

/// Substitutes `{name}` with values; unknown placeholders are left intact.
std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values);

/// Precomputed index over a validated graph. Nodes are addressed by their
/// position in the schedule.
class GraphTopology {
 public:
  explicit GraphTopology(const WorkflowGraph& graph);

  std::size_t size() const { return order_.size(); }
  const std::vector<NodeId>& order() const { return order_; }
  std::size_t index_of(const NodeId& id) const;
  const NodeId& id_of(std::size_t index) const { return order_[index]; }
  const std::vector<std::size_t>& parents(std::size_t index) const { return parents_[index]; }
  const std::vector<std::size_t>& children(std::size_t index) const { return children_[index]; }
  /// True iff `candidate` is reachable from `root` (a node reaches itself).
  bool descends_from(std::size_t candidate, std::size_t root) const {
    return reach_[root][candidate];
  }
  std::vector<std::size_t> descendants(std::size_t root) const;
  /// True iff every node has at most one parent and one child.
  bool is_chain() const;

 private:
  std::vector<NodeId> order_;
  std::map<NodeId, std::size_t> index_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::vector<bool>> reach_;
};

}  // namespace vigil
