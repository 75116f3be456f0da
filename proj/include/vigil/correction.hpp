#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vigil/event_log.hpp"
#include "vigil/graph.hpp"
#include "vigil/monitor_binding.hpp"
#include "vigil/perturbation.hpp"
#include "vigil/snapshot_store.hpp"
#include "vigil/types.hpp"

namespace vigil {

/// Raised when a correction cannot be planned (for example the snapshot to
/// restore was pruned). The run continues degraded.
class CorrectionAborted : public Error {
 public:
  using Error::Error;
};

/// Text templates for augmented prompts. Placeholders: {input}
/// {failed_output} {category} {rationale} {avoid_list}.
struct AugmentationTemplates {
  std::string version = "v1";
  std::string augment;
  std::string format_block;
  std::string reflection_preamble;

  /// Templates shipped with the repository, embedded at build time.
  static AugmentationTemplates builtin();
  /// Reads `augment_<version>.txt`, `format_spec_<version>.txt` and
  /// `reflection_preamble_<version>.txt` from `directory`.
  static AugmentationTemplates load(const std::filesystem::path& directory,
                                    const std::string& version = "v1");
};

struct AttemptRecord {
  SnapshotKey key;
  std::string digest;
  Verdict verdict;
};

/// Append-only per-node history of judged attempts.
class AttemptHistory {
 public:
  void append(const NodeId& node, AttemptRecord record);
  const std::vector<AttemptRecord>& entries(const NodeId& node) const;
  /// Digests of failed attempts, first occurrence order, duplicates removed.
  std::vector<std::string> failed_digests(const NodeId& node) const;

 private:
  std::map<NodeId, std::vector<AttemptRecord>> entries_;
};

struct PerturbationSchedule {
  double temperature_step = 0.2;
  double temperature_cap = 0.6;
};

struct RollbackPlan {
  NodeId target;
  SnapshotKey restore_from;
  Epoch new_epoch;
  std::uint32_t next_attempt = 0;
  Payload restored_input;
  std::vector<std::string> prompt_history;
  std::string augmented_prompt;
  PerturbationDirective perturbation;
};

struct PlanOptions {
  PerturbationSchedule schedule;
  /// Replaces the generic augmentation block (used by reflection mode).
  std::optional<std::string> augmentation_override;
};

/// Builds the rollback plan for a failing snapshot: the target is the failing
/// node; the prompt extends the original one with the input, the failed
/// output, the verdict and the digests to avoid; the perturbation shifts the
/// seed by the attempt index and raises temperature on repeated digests.
/// Throws CorrectionAborted when the snapshot is missing from the store.
RollbackPlan plan_rollback(const CorrectionRequest& request, const SnapshotStore& store,
                           const AttemptHistory& history, const AugmentationTemplates& templates,
                           Epoch current_epoch, const PlanOptions& options = {});

/// Renders the augmentation block alone.
std::string render_augmentation(const AugmentationTemplates& templates, const Snapshot& failed,
                                const Verdict& verdict,
                                const std::vector<std::string>& avoid_digests);

/// Serializes rollbacks for one run. Each applied plan bumps the epoch once,
/// invalidates and cancels the target's descendants, then re-dispatches.
/// A second plan restoring the same snapshot is coalesced.
class RollbackCoordinator {
 public:
  using Redispatch = std::function<void(const RollbackPlan&)>;

  RollbackCoordinator(const GraphTopology& topology, TaskRegistry& registry, EpochFence& fence,
                      Epoch start = {}, EventLog* events = nullptr);

  struct Outcome {
    bool applied = false;
    Epoch epoch;
    std::size_t cancelled = 0;
  };

  Outcome apply(RollbackPlan plan, const Redispatch& redispatch);
  /// Epoch bump that restores an earlier attempt without re-execution; the
  /// node itself is re-fenced along with its descendants.
  Outcome restore(const NodeId& node, const std::function<void(Epoch)>& recommit);

  Epoch current_epoch() const;
  std::size_t rollbacks() const;

 private:
  const GraphTopology& topology_;
  TaskRegistry& registry_;
  EpochFence& fence_;
  EventLog* events_;
  mutable std::mutex mutex_;
  Epoch epoch_;
  std::size_t rollbacks_ = 0;
  std::set<SnapshotKey> applied_sources_;
};

/// Same contract as RollbackCoordinator::apply, as a free function.
RollbackCoordinator::Outcome apply_rollback(const RollbackPlan& plan,
                                            RollbackCoordinator& coordinator,
                                            const RollbackCoordinator::Redispatch& redispatch);

struct GiveUpDecision {
  AttemptRecord committed;
  bool degraded = true;
};

/// Commits the judged attempt with the highest quality. Among equal-quality
/// attempts the output reproduced most often wins, then the earliest.
GiveUpDecision give_up(const NodeId& node, const AttemptHistory& history);

}  // namespace vigil
