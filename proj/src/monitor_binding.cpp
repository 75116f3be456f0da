#include "vigil/monitor_binding.hpp"

#include <cmath>
#include <deque>

namespace vigil {

std::string_view to_string(MonitorMode mode) {
  switch (mode) {
    case MonitorMode::Single: return "single";
    case MonitorMode::Brp: return "brp";
    case MonitorMode::Hcv: return "hcv";
  }
  return "single";
}

MonitorMode monitor_mode_from_string(std::string_view text) {
  if (text == "single") return MonitorMode::Single;
  if (text == "brp") return MonitorMode::Brp;
  if (text == "hcv") return MonitorMode::Hcv;
  throw Error("unknown monitor mode: " + std::string(text));
}

std::string_view to_string(Activation activation) {
  return activation == Activation::Always ? "always" : "on-low-upstream-confidence";
}

Activation activation_from_string(std::string_view text) {
  if (text == "always") return Activation::Always;
  if (text == "on-low-upstream-confidence") return Activation::OnLowUpstreamConfidence;
  throw Error("unknown activation predicate: " + std::string(text));
}

void check_monitor_config(const MonitorConfig& config) {
  if (!(config.threshold >= 0.0 && config.threshold <= 1.0))
    throw Error("monitor threshold must lie in [0, 1]");
  if (!std::isfinite(config.activation_cutoff))
    throw Error("activation cutoff must be finite");
  if (config.backend.empty()) throw Error("monitor binding needs a backend reference");
}

BindResult bind(const WorkflowGraph& graph, const NodeId& node, const MonitorConfig& config) {
  auto it = graph.nodes.find(node);
  if (it == graph.nodes.end()) throw GraphError("cannot bind monitor to unknown node " + node);
  check_monitor_config(config);
  BindResult result{graph, std::nullopt};
  auto& spec = result.graph.nodes.at(node);
  if (spec.monitor) {
    result.warning = "node " + node + ": replaced monitor binding '" + spec.monitor->backend +
                     "' with '" + config.backend + "'";
  }
  spec.monitor = config;
  return result;
}

// ---------------------------------------------------------------------------

CancelToken TaskRegistry::register_task(const SnapshotKey& key, TaskKind kind) {
  std::lock_guard lock(mutex_);
  CancelToken token;
  if (!tasks_.emplace(std::make_pair(key, kind), token).second)
    throw Error("task already registered: " + key.to_string());
  return token;
}

bool TaskRegistry::complete(const SnapshotKey& key, TaskKind kind) {
  std::lock_guard lock(mutex_);
  auto it = tasks_.find({key, kind});
  if (it == tasks_.end()) return false;
  const bool live = !it->second.cancelled();
  tasks_.erase(it);
  return live;
}

bool TaskRegistry::contains(const SnapshotKey& key, TaskKind kind) const {
  std::lock_guard lock(mutex_);
  return tasks_.count({key, kind}) != 0;
}

std::size_t TaskRegistry::cancel_where(
    const std::function<bool(const SnapshotKey&, TaskKind)>& predicate) {
  std::lock_guard lock(mutex_);
  std::size_t cancelled = 0;
  for (auto it = tasks_.begin(); it != tasks_.end();) {
    if (predicate(it->first.first, it->first.second)) {
      it->second.cancel();
      it = tasks_.erase(it);
      ++cancelled;
    } else {
      ++it;
    }
  }
  return cancelled;
}

std::size_t TaskRegistry::clear() {
  return cancel_where([](const SnapshotKey&, TaskKind) { return true; });
}

std::vector<std::pair<SnapshotKey, TaskKind>> TaskRegistry::entries() const {
  std::lock_guard lock(mutex_);
  std::vector<std::pair<SnapshotKey, TaskKind>> out;
  for (const auto& [entry, _] : tasks_) out.push_back(entry);
  return out;
}

std::size_t TaskRegistry::size() const {
  std::lock_guard lock(mutex_);
  return tasks_.size();
}

std::size_t cancel_descendants(const WorkflowGraph& graph, const NodeId& node, Epoch older_than,
                               TaskRegistry& registry) {
  std::set<NodeId> reached{node};
  std::deque<NodeId> frontier{node};
  while (!frontier.empty()) {
    NodeId current = frontier.front();
    frontier.pop_front();
    for (const auto& [from, to] : graph.edges)
      if (from == current && reached.insert(to).second) frontier.push_back(to);
  }
  return registry.cancel_where([&](const SnapshotKey& key, TaskKind) {
    return key.epoch < older_than && reached.count(key.node) != 0;
  });
}

std::size_t cancel_descendants(const GraphTopology& topology, const NodeId& node,
                               Epoch older_than, TaskRegistry& registry) {
  const std::size_t root = topology.index_of(node);
  return registry.cancel_where([&](const SnapshotKey& key, TaskKind) {
    return key.epoch < older_than && topology.descends_from(topology.index_of(key.node), root);
  });
}

bool should_activate(const MonitorConfig& config, std::optional<double> upstream_confidence) {
  if (config.activation == Activation::Always) return true;
  // Unknown upstream confidence is treated as low.
  return !upstream_confidence || *upstream_confidence < config.activation_cutoff;
}

// ---------------------------------------------------------------------------

MonitorDispatcher::MonitorDispatcher(std::size_t workers, std::size_t queue_capacity)
    : pool_(workers, queue_capacity) {}

std::optional<AssessmentHandle> MonitorDispatcher::on_complete(
    const std::optional<MonitorConfig>& binding, const Snapshot& snapshot,
    TaskRegistry& registry, Job job, std::optional<double> upstream_confidence,
    MonitorMetrics* metrics) {
  if (!binding || !should_activate(*binding, upstream_confidence)) return std::nullopt;
  const SnapshotKey key = snapshot.key();
  CancelToken token = registry.register_task(key, TaskKind::Assessment);
  const bool queued = pool_.try_submit([&registry, key, token, job = std::move(job)] {
    job(token);
    registry.complete(key, TaskKind::Assessment);
  });
  if (!queued) {
    registry.complete(key, TaskKind::Assessment);
    if (metrics) metrics->dropped.fetch_add(1);
    return std::nullopt;
  }
  return AssessmentHandle{key, token};
}

// ---------------------------------------------------------------------------

void EpochFence::invalidate(const NodeId& node, Epoch from) {
  std::lock_guard lock(mutex_);
  auto& mark = valid_from_[node];
  if (from > mark) mark = from;
}

bool EpochFence::is_stale(const SnapshotKey& key) const {
  std::lock_guard lock(mutex_);
  auto it = valid_from_.find(key.node);
  return it != valid_from_.end() && key.epoch < it->second;
}

Epoch EpochFence::valid_from(const NodeId& node) const {
  std::lock_guard lock(mutex_);
  auto it = valid_from_.find(node);
  return it == valid_from_.end() ? Epoch{} : it->second;
}

RouteDecision route_verdict(const Verdict& verdict, const Snapshot& snapshot,
                            const MonitorConfig& config, const EpochFence* fence,
                            MonitorMetrics* metrics) {
  if (verdict.key != snapshot.key())
    throw Error("verdict " + verdict.key.to_string() + " does not belong to snapshot " +
                snapshot.key().to_string());
  RouteDecision decision;
  if (fence && fence->is_stale(verdict.key)) {
    if (metrics) metrics->stale_discarded.fetch_add(1);
    decision.action = RouteDecision::Action::Discard;
    decision.reason = "stale epoch";
    return decision;
  }
  if (verdict.pass) {
    decision.reason = "pass";
    return decision;
  }
  if (verdict.confidence < config.threshold) {
    decision.reason = "fail below threshold";
    return decision;
  }
  if (snapshot.attempt >= config.max_corrections) {
    decision.degraded = true;
    decision.reason = "correction budget exhausted";
    return decision;
  }
  decision.action = RouteDecision::Action::Correct;
  decision.request = CorrectionRequest{verdict.key, verdict, monotonic_now_ns()};
  decision.reason = "fail";
  return decision;
}

RouteDecision VerdictRouter::route(const Verdict& verdict, const Snapshot& snapshot,
                                   const MonitorConfig& config, const EpochFence* fence,
                                   MonitorMetrics* metrics) {
  std::lock_guard lock(mutex_);
  if (routed_.count(verdict.key)) {
    if (metrics) metrics->duplicate_discarded.fetch_add(1);
    return RouteDecision{RouteDecision::Action::Discard, false, std::nullopt, "duplicate"};
  }
  auto decision = route_verdict(verdict, snapshot, config, fence, metrics);
  if (decision.action != RouteDecision::Action::Discard) routed_.insert(verdict.key);
  return decision;
}

}  // namespace vigil
