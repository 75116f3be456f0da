#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vigil/backends.hpp"
#include "vigil/chaos.hpp"
#include "vigil/correction.hpp"
#include "vigil/cross_validation.hpp"
#include "vigil/event_log.hpp"
#include "vigil/graph.hpp"
#include "vigil/monitoring.hpp"
#include "vigil/reflection.hpp"
#include "vigil/serialization.hpp"
#include "vigil/snapshot_store.hpp"
#include "vigil/types.hpp"

namespace vigil {

struct RunConfig {
  std::uint64_t seed = 0;
  /// Overrides every binding's max_corrections when set.
  std::optional<std::uint32_t> correction_budget;
  /// Overrides every binding's threshold when set.
  std::optional<double> threshold;
  bool monitoring = true;
  /// Wait for each verdict before launching children.
  bool synchronous_monitoring = false;
  std::size_t brp_max_rounds = 5;
  std::size_t brp_window = 4;
  /// Maximum retained snapshots; unbounded when unset.
  std::optional<std::size_t> snapshot_budget;
  AggregationRule aggregation;
  ClassifyOptions classify;
  std::size_t signature_repetitions = 2;
  ChaosSpec chaos;
  AugmentationTemplates templates = AugmentationTemplates::builtin();
  bool parallel_ensemble = false;
  std::string run_id;
  EventLog* events = nullptr;

  /// Throws on zero rounds, window or budget.
  void validate() const;
};

struct Completion {
  NodeId node;
  Epoch epoch;
  std::uint32_t attempt = 0;

  SnapshotKey key() const { return SnapshotKey{node, epoch, attempt}; }
  bool operator==(const Completion&) const = default;
};

/// Timing-dependent counters: how much speculative work was thrown away.
struct SpeculationStats {
  std::uint64_t launched = 0;
  std::uint64_t discarded_completions = 0;
  std::uint64_t cancelled_tasks = 0;
  std::uint64_t stale_verdicts = 0;
  std::uint64_t dropped_assessments = 0;
};

struct ExecutionRecord {
  std::string run_id;
  /// Judged or committed node attempts ordered by (epoch, schedule position,
  /// attempt). Speculative work that was invalidated is not listed.
  std::vector<Completion> completions;
  Payload final_output;
  /// Committed output per node.
  std::map<NodeId, Payload> outputs;
  std::map<NodeId, SnapshotKey> committed;
  bool degraded = false;
  std::vector<NodeId> degraded_nodes;
  std::uint32_t correction_count = 0;
  std::uint32_t rollback_count = 0;
  std::map<NodeId, std::uint32_t> corrections_per_node;
  Epoch final_epoch;
  /// Routed verdicts in routing order.
  std::vector<Verdict> verdicts;
  std::vector<ReflectionTranscript> transcripts;
  std::uint32_t hcv_escalations = 0;
  std::vector<std::string> chaos_events;
  std::vector<std::string> warnings;
  std::uint64_t monitoring_debt = 0;
  bool monitored = true;

  std::int64_t critical_path_ns = 0;
  std::int64_t monitor_latency_total_ns = 0;
  std::int64_t dispatch_ns_total = 0;
  std::uint64_t dispatches = 0;
  std::int64_t wall_ns = 0;
  SpeculationStats speculation;

  /// Field-wise equality excluding timings and speculation counters.
  bool same_outcome(const ExecutionRecord& other) const;
};

void to_json(json& j, const Completion& completion);
void from_json(const json& j, Completion& completion);
/// `timing` includes latencies and speculation counters.
json record_to_json(const ExecutionRecord& record, bool timing = true);

struct ExecutorOptions {
  std::size_t node_workers = 4;
  std::size_t monitor_workers = 2;
  /// Monitor queue bound; 0 means unbounded.
  std::size_t monitor_queue_capacity = 0;
};

/// Runs validated workflow graphs. Nodes execute on a worker pool in
/// dependency order and children start as soon as parent outputs exist, while
/// assessments run on a separate monitor pool. Failing verdicts roll the
/// node back and re-run it and everything downstream at a new epoch.
class Executor {
 public:
  explicit Executor(const BackendRegistry& backends, ExecutorOptions options = {});
  ~Executor();

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  /// Throws GraphError on an invalid graph and BackendFailure (naming the
  /// node) when an agent backend fails.
  ExecutionRecord execute(const WorkflowGraph& graph, const Payload& input,
                          const RunConfig& config,
                          std::shared_ptr<SnapshotStore> store = nullptr);

  /// Restarts from a stored snapshot: its output is taken as committed and
  /// only its descendants re-execute, at an epoch above everything stored.
  /// Other nodes reuse their latest stored snapshot when one exists.
  ExecutionRecord resume(const WorkflowGraph& graph, const Payload& input,
                         const RunConfig& config, std::shared_ptr<SnapshotStore> store,
                         const SnapshotKey& from);

 private:
  struct Pools;
  ExecutionRecord run(const WorkflowGraph& graph, const Payload& input, const RunConfig& config,
                      std::shared_ptr<SnapshotStore> store, const SnapshotKey* from);

  const BackendRegistry& backends_;
  std::unique_ptr<Pools> pools_;
};

}  // namespace vigil
