#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vigil/graph.hpp"
#include "vigil/monitor_config.hpp"
#include "vigil/monitoring.hpp"
#include "vigil/thread_pool.hpp"
#include "vigil/types.hpp"

namespace vigil {

/// Throws on threshold outside [0, 1], non-finite cutoff, or an Hcv binding
/// without an ensemble reference.
void check_monitor_config(const MonitorConfig& config);

struct BindResult {
  WorkflowGraph graph;
  /// Set when an existing binding was replaced.
  std::optional<std::string> warning;
};

/// Returns a copy of `graph` with the node's monitor binding set.
BindResult bind(const WorkflowGraph& graph, const NodeId& node, const MonitorConfig& config);

/// Cooperative cancellation flag shared between the registry and a task.
class CancelToken {
 public:
  CancelToken() : flag_(std::make_shared<std::atomic<bool>>(false)) {}
  bool cancelled() const { return flag_->load(std::memory_order_acquire); }
  void cancel() const { flag_->store(true, std::memory_order_release); }

 private:
  std::shared_ptr<std::atomic<bool>> flag_;
};

enum class TaskKind { Node, Assessment };

/// Run-scoped map of in-flight tasks keyed by (node, epoch, attempt) and
/// kind. All operations are atomic with respect to each other.
class TaskRegistry {
 public:
  explicit TaskRegistry(std::string run_id = {}) : run_id_(std::move(run_id)) {}

  const std::string& run_id() const { return run_id_; }

  /// Throws when the same (key, kind) is already in flight.
  CancelToken register_task(const SnapshotKey& key, TaskKind kind);
  /// Deregisters a finished task. Returns false if it had been cancelled or
  /// was never registered, in which case its result must be discarded.
  bool complete(const SnapshotKey& key, TaskKind kind);
  bool contains(const SnapshotKey& key, TaskKind kind) const;
  /// Cancels and removes every entry matching the predicate.
  std::size_t cancel_where(const std::function<bool(const SnapshotKey&, TaskKind)>& predicate);
  /// Cancels everything; used at the end of a run.
  std::size_t clear();
  std::vector<std::pair<SnapshotKey, TaskKind>> entries() const;
  std::size_t size() const;

 private:
  std::string run_id_;
  mutable std::mutex mutex_;
  std::map<std::pair<SnapshotKey, TaskKind>, CancelToken> tasks_;
};

/// Cancels tasks on `node` or its descendants whose epoch is below
/// `older_than`. Idempotent. Returns the number cancelled.
std::size_t cancel_descendants(const WorkflowGraph& graph, const NodeId& node, Epoch older_than,
                               TaskRegistry& registry);
std::size_t cancel_descendants(const GraphTopology& topology, const NodeId& node,
                               Epoch older_than, TaskRegistry& registry);

bool should_activate(const MonitorConfig& config, std::optional<double> upstream_confidence);

struct AssessmentHandle {
  SnapshotKey key;
  CancelToken token;
};

/// Hands assessment jobs to a bounded worker pool. Dispatch never blocks: a
/// full queue drops the assessment and counts monitoring debt.
class MonitorDispatcher {
 public:
  using Job = std::function<void(const CancelToken&)>;

  MonitorDispatcher(std::size_t workers, std::size_t queue_capacity);

  /// Registers and queues `job` when the node is bound and the activation
  /// predicate holds. Unbound nodes dispatch nothing.
  std::optional<AssessmentHandle> on_complete(const std::optional<MonitorConfig>& binding,
                                              const Snapshot& snapshot, TaskRegistry& registry,
                                              Job job,
                                              std::optional<double> upstream_confidence = {},
                                              MonitorMetrics* metrics = nullptr);

  void wait_idle() { pool_.wait_idle(); }
  std::size_t workers() const { return pool_.workers(); }

 private:
  ThreadPool pool_;
};

/// Per-node invalidation marks. A key is stale once a rollback at a newer
/// epoch covered its node.
class EpochFence {
 public:
  void invalidate(const NodeId& node, Epoch from);
  bool is_stale(const SnapshotKey& key) const;
  Epoch valid_from(const NodeId& node) const;

 private:
  mutable std::mutex mutex_;
  std::map<NodeId, Epoch> valid_from_;
};

struct CorrectionRequest {
  SnapshotKey key;
  Verdict verdict;
  std::int64_t requested_at_ns = 0;
};

struct RouteDecision {
  enum class Action { Accept, Correct, Discard };
  Action action = Action::Accept;
  bool degraded = false;
  std::optional<CorrectionRequest> request;
  std::string reason;
};

/// Threshold rule: a failing verdict whose confidence reaches the threshold
/// requests a correction while attempts remain; an exhausted budget accepts
/// with the degraded flag; everything else accepts. Stale verdicts are
/// discarded and counted.
RouteDecision route_verdict(const Verdict& verdict, const Snapshot& snapshot,
                            const MonitorConfig& config, const EpochFence* fence = nullptr,
                            MonitorMetrics* metrics = nullptr);

/// Serializes routing per snapshot key so one snapshot yields at most one
/// correction request.
class VerdictRouter {
 public:
  RouteDecision route(const Verdict& verdict, const Snapshot& snapshot,
                      const MonitorConfig& config, const EpochFence* fence = nullptr,
                      MonitorMetrics* metrics = nullptr);

 private:
  std::mutex mutex_;
  std::set<SnapshotKey> routed_;
};

}  // namespace vigil
