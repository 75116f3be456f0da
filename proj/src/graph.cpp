#include "vigil/graph.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <queue>

#include "vigil/backends.hpp"

namespace vigil {

void WorkflowGraph::add_node(NodeSpec spec) {
  if (spec.id.empty()) throw GraphError("node id must be non-empty");
  auto id = spec.id;
  if (!nodes.emplace(id, std::move(spec)).second) throw GraphError("duplicate node id: " + id);
}

void WorkflowGraph::add_edge(const NodeId& from, const NodeId& to) { edges.emplace(from, to); }

std::vector<NodeId> WorkflowGraph::parents(const NodeId& id) const {
  std::vector<NodeId> out;
  for (const auto& [from, to] : edges)
    if (to == id) out.push_back(from);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<NodeId> WorkflowGraph::children(const NodeId& id) const {
  std::vector<NodeId> out;
  for (const auto& [from, to] : edges)
    if (from == id) out.push_back(to);
  return out;
}

std::string_view to_string(ValidationError::Kind kind) {
  using K = ValidationError::Kind;
  switch (kind) {
    case K::EmptyGraph: return "empty-graph";
    case K::Cycle: return "cycle";
    case K::DanglingEdge: return "dangling-edge";
    case K::NoSource: return "no-source";
    case K::UnresolvedBackend: return "unresolved-backend";
    case K::UnresolvedMonitor: return "unresolved-monitor";
    case K::InvalidMonitorConfig: return "invalid-monitor-config";
    case K::UnknownPlaceholder: return "unknown-placeholder";
  }
  return "unknown";
}

namespace {

using Kind = ValidationError::Kind;

// Strongly connected components that contain a cycle, each sorted. Kosaraju
// over the edges whose endpoints both exist.
std::vector<std::vector<NodeId>> cyclic_components(const WorkflowGraph& graph) {
  std::map<NodeId, std::vector<NodeId>> forward, backward;
  for (const auto& [id, _] : graph.nodes) {
    forward[id];
    backward[id];
  }
  for (const auto& [from, to] : graph.edges) {
    if (!graph.contains(from) || !graph.contains(to)) continue;
    forward[from].push_back(to);
    backward[to].push_back(from);
  }

  std::set<NodeId> visited;
  std::vector<NodeId> finish;
  for (const auto& [root, _] : forward) {
    if (visited.count(root)) continue;
    std::vector<std::pair<NodeId, std::size_t>> stack{{root, 0}};
    visited.insert(root);
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& out = forward[node];
      if (next < out.size()) {
        const NodeId child = out[next++];
        if (visited.insert(child).second) stack.emplace_back(child, 0);
      } else {
        finish.push_back(node);
        stack.pop_back();
      }
    }
  }

  std::set<NodeId> assigned;
  std::vector<std::vector<NodeId>> result;
  for (auto it = finish.rbegin(); it != finish.rend(); ++it) {
    if (assigned.count(*it)) continue;
    std::vector<NodeId> component;
    std::vector<NodeId> stack{*it};
    assigned.insert(*it);
    while (!stack.empty()) {
      NodeId node = stack.back();
      stack.pop_back();
      component.push_back(node);
      for (const auto& parent : backward[node])
        if (assigned.insert(parent).second) stack.push_back(parent);
    }
    bool self_loop = component.size() == 1 && graph.edges.count({component[0], component[0]});
    if (component.size() > 1 || self_loop) {
      std::sort(component.begin(), component.end());
      result.push_back(std::move(component));
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

std::string join(const std::vector<NodeId>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

}  // namespace

std::vector<ValidationError> validate_structure(const WorkflowGraph& graph) {
  std::vector<ValidationError> errors;
  if (graph.nodes.empty()) {
    errors.push_back({Kind::EmptyGraph, "graph has no nodes", {}});
    return errors;
  }
  for (const auto& [from, to] : graph.edges) {
    for (const NodeId* end : {&from, &to}) {
      if (!graph.contains(*end)) {
        errors.push_back({Kind::DanglingEdge,
                          "edge (" + from + ", " + to + ") references unknown node " + *end,
                          {*end}});
      }
    }
  }
  for (auto& component : cyclic_components(graph)) {
    errors.push_back({Kind::Cycle, "cycle through " + join(component), component});
  }
  bool has_source = std::any_of(graph.nodes.begin(), graph.nodes.end(), [&](const auto& entry) {
    return std::none_of(graph.edges.begin(), graph.edges.end(), [&](const auto& edge) {
      return edge.second == entry.first && graph.contains(edge.first);
    });
  });
  if (!has_source) errors.push_back({Kind::NoSource, "graph has no source node", {}});
  return errors;
}

std::vector<ValidationError> validate_graph(const WorkflowGraph& graph,
                                            const BackendRegistry& registry) {
  auto errors = validate_structure(graph);
  for (const auto& [id, spec] : graph.nodes) {
    if (!registry.has_agent(spec.backend)) {
      errors.push_back({Kind::UnresolvedBackend,
                        "node " + id + " references unknown backend '" + spec.backend + "'",
                        {id}});
    }

    std::set<std::string> declared{"input"};
    for (const auto& parent : graph.parents(id)) declared.insert(parent);
    for (const auto& name : template_placeholders(spec.prompt_template)) {
      if (!declared.count(name)) {
        errors.push_back({Kind::UnknownPlaceholder,
                          "node " + id + " prompt references undeclared input {" + name + "}",
                          {id}});
      }
    }

    if (!spec.monitor) continue;
    const MonitorConfig& monitor = *spec.monitor;
    if (!(monitor.threshold >= 0.0 && monitor.threshold <= 1.0)) {
      errors.push_back(
          {Kind::InvalidMonitorConfig, "node " + id + " monitor threshold outside [0, 1]", {id}});
    }
    if (monitor.mode == MonitorMode::Hcv) {
      const EnsembleConfig* ensemble = registry.ensemble(monitor.backend);
      if (!ensemble) {
        errors.push_back({Kind::UnresolvedMonitor,
                          "node " + id + " references unknown ensemble '" + monitor.backend + "'",
                          {id}});
      } else if (ensemble->k() < 2) {
        errors.push_back({Kind::InvalidMonitorConfig,
                          "node " + id + " ensemble needs at least two members", {id}});
      } else {
        for (const auto& member : ensemble->members) {
          if (!registry.has_monitor(member.backend)) {
            errors.push_back({Kind::UnresolvedMonitor,
                              "ensemble member '" + member.backend + "' of node " + id +
                                  " is not registered",
                              {id}});
          }
        }
      }
    } else if (!registry.has_monitor(monitor.backend)) {
      errors.push_back({Kind::UnresolvedMonitor,
                        "node " + id + " references unknown monitor '" + monitor.backend + "'",
                        {id}});
    }
    if (monitor.ensemble && !registry.ensemble(*monitor.ensemble)) {
      errors.push_back({Kind::UnresolvedMonitor,
                        "node " + id + " references unknown escalation ensemble '" +
                            *monitor.ensemble + "'",
                        {id}});
    }
  }
  return errors;
}

std::vector<NodeId> schedule(const WorkflowGraph& graph) {
  auto errors = validate_structure(graph);
  if (!errors.empty()) throw GraphError("cannot schedule invalid graph: " + errors.front().message);

  std::map<NodeId, std::size_t> indegree;
  for (const auto& [id, _] : graph.nodes) indegree[id] = 0;
  for (const auto& [from, to] : graph.edges) ++indegree[to];

  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (const auto& [id, degree] : indegree)
    if (degree == 0) ready.push(id);

  std::map<NodeId, std::vector<NodeId>> children;
  for (const auto& [from, to] : graph.edges) children[from].push_back(to);

  std::vector<NodeId> order;
  order.reserve(graph.nodes.size());
  while (!ready.empty()) {
    NodeId id = ready.top();
    ready.pop();
    order.push_back(id);
    for (const auto& child : children[id])
      if (--indegree[child] == 0) ready.push(child);
  }
  return order;
}

std::vector<std::string> template_placeholders(const std::string& text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string::npos) {
    auto close = text.find('}', pos + 1);
    if (close == std::string::npos) break;
    std::string name = text.substr(pos + 1, close - pos - 1);
    bool identifier = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    });
    if (identifier && std::find(names.begin(), names.end(), name) == names.end())
      names.push_back(name);
    pos = close + 1;
  }
  return names;
}

std::string render_template(const std::string& text,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find('{', pos);
    if (open == std::string::npos) break;
    auto close = text.find('}', open + 1);
    if (close == std::string::npos) break;
    auto it = values.find(text.substr(open + 1, close - open - 1));
    out.append(text, pos, open - pos);
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(text, open, close - open + 1);
    }
    pos = close + 1;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

GraphTopology::GraphTopology(const WorkflowGraph& graph) : order_(schedule(graph)) {
  for (std::size_t i = 0; i < order_.size(); ++i) index_[order_[i]] = i;
  parents_.resize(order_.size());
  children_.resize(order_.size());
  for (const auto& [from, to] : graph.edges) {
    children_[index_.at(from)].push_back(index_.at(to));
    parents_[index_.at(to)].push_back(index_.at(from));
  }
  for (auto& list : parents_) std::sort(list.begin(), list.end());
  for (auto& list : children_) std::sort(list.begin(), list.end());

  const std::size_t n = order_.size();
  reach_.assign(n, std::vector<bool>(n, false));
  for (std::size_t i = n; i-- > 0;) {
    reach_[i][i] = true;
    for (std::size_t child : children_[i])
      for (std::size_t j = 0; j < n; ++j)
        if (reach_[child][j]) reach_[i][j] = true;
  }
}

std::size_t GraphTopology::index_of(const NodeId& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw GraphError("unknown node: " + id);
  return it->second;
}

std::vector<std::size_t> GraphTopology::descendants(std::size_t root) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < order_.size(); ++j)
    if (reach_[root][j]) out.push_back(j);
  return out;
}

bool GraphTopology::is_chain() const {
  for (std::size_t i = 0; i < order_.size(); ++i) {
    if (parents_[i].size() > 1 || children_[i].size() > 1) return false;
    if (i > 0 && (parents_[i].size() != 1 || parents_[i][0] != i - 1)) return false;
  }
  return true;
}

}  // namespace vigil
