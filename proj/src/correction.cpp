#include "vigil/correction.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "vigil_templates.hpp"

namespace vigil {

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read template " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

AugmentationTemplates AugmentationTemplates::builtin() {
  return AugmentationTemplates{"v1", std::string(templates::augment_v1),
                               std::string(templates::format_spec_v1),
                               std::string(templates::reflection_preamble_v1)};
}

AugmentationTemplates AugmentationTemplates::load(const std::filesystem::path& directory,
                                                  const std::string& version) {
  AugmentationTemplates t;
  t.version = version;
  t.augment = read_text(directory / ("augment_" + version + ".txt"));
  t.format_block = read_text(directory / ("format_spec_" + version + ".txt"));
  t.reflection_preamble = read_text(directory / ("reflection_preamble_" + version + ".txt"));
  return t;
}

void AttemptHistory::append(const NodeId& node, AttemptRecord record) {
  entries_[node].push_back(std::move(record));
}

const std::vector<AttemptRecord>& AttemptHistory::entries(const NodeId& node) const {
  static const std::vector<AttemptRecord> empty;
  auto it = entries_.find(node);
  return it == entries_.end() ? empty : it->second;
}

std::vector<std::string> AttemptHistory::failed_digests(const NodeId& node) const {
  std::vector<std::string> out;
  for (const auto& record : entries(node))
    if (!record.verdict.pass && std::find(out.begin(), out.end(), record.digest) == out.end())
      out.push_back(record.digest);
  return out;
}

std::string render_augmentation(const AugmentationTemplates& templates, const Snapshot& failed,
                                const Verdict& verdict,
                                const std::vector<std::string>& avoid_digests) {
  std::string avoid;
  for (const auto& d : avoid_digests) avoid += "- " + d + "\n";
  if (avoid.empty()) avoid = "- (none)\n";
  std::string text = render_template(templates.augment,
                                     {{"input", canonical_form(failed.input)},
                                      {"failed_output", canonical_form(failed.output)},
                                      {"category", std::string(to_string(verdict.category))},
                                      {"rationale", verdict.rationale},
                                      {"avoid_list", avoid}});
  if (verdict.category == ErrorCategory::Format) text += "\n" + templates.format_block;
  return text;
}

RollbackPlan plan_rollback(const CorrectionRequest& request, const SnapshotStore& store,
                           const AttemptHistory& history, const AugmentationTemplates& templates,
                           Epoch current_epoch, const PlanOptions& options) {
  auto snapshot = store.get(request.key);
  if (!snapshot)
    throw CorrectionAborted("snapshot " + request.key.to_string() + " is not in the store");

  const NodeId& node = request.key.node;
  std::vector<std::string> avoid = history.failed_digests(node);
  const std::string failed_digest = output_digest(snapshot->output);
  if (std::find(avoid.begin(), avoid.end(), failed_digest) == avoid.end())
    avoid.push_back(failed_digest);

  // One escalation step per failed attempt whose digest repeats an earlier one.
  std::size_t failures = 0;
  bool counted_current = false;
  for (const auto& record : history.entries(node)) {
    if (record.verdict.pass) continue;
    ++failures;
    if (record.key == request.key) counted_current = true;
  }
  if (!counted_current) ++failures;
  const double repeats = static_cast<double>(failures - std::min(failures, avoid.size()));

  RollbackPlan plan;
  plan.target = node;
  plan.restore_from = request.key;
  plan.new_epoch = current_epoch.next();
  plan.next_attempt = request.key.attempt + 1;
  plan.restored_input = snapshot->input;
  plan.prompt_history = snapshot->prompt_history;
  plan.perturbation.seed_offset = plan.next_attempt;
  plan.perturbation.temperature_delta =
      std::min(options.schedule.temperature_cap, options.schedule.temperature_step * repeats);
  plan.perturbation.avoid_digests = avoid;

  const std::string original =
      snapshot->prompt_history.empty() ? std::string() : snapshot->prompt_history.front();
  std::string block = options.augmentation_override
                          ? *options.augmentation_override
                          : render_augmentation(templates, *snapshot, request.verdict, avoid);
  plan.augmented_prompt = original + "\n\n" + block + "\nCorrection attempt " +
                          std::to_string(plan.next_attempt) + ".\n";
  plan.prompt_history.push_back(plan.augmented_prompt);
  return plan;
}

RollbackCoordinator::RollbackCoordinator(const GraphTopology& topology, TaskRegistry& registry,
                                         EpochFence& fence, Epoch start, EventLog* events)
    : topology_(topology), registry_(registry), fence_(fence), events_(events), epoch_(start) {}

RollbackCoordinator::Outcome RollbackCoordinator::apply(RollbackPlan plan,
                                                        const Redispatch& redispatch) {
  std::lock_guard lock(mutex_);
  if (!applied_sources_.insert(plan.restore_from).second) {
    if (events_) events_->emit("coalesce " + plan.restore_from.to_string());
    return Outcome{false, epoch_, 0};
  }
  epoch_ = epoch_.next();
  ++rollbacks_;
  plan.new_epoch = epoch_;
  const std::size_t root = topology_.index_of(plan.target);
  for (std::size_t d : topology_.descendants(root)) fence_.invalidate(topology_.id_of(d), epoch_);
  const std::size_t cancelled = cancel_descendants(topology_, plan.target, epoch_, registry_);
  if (events_) {
    events_->emit("epoch " + std::to_string(epoch_.counter));
    events_->emit("cancel " + plan.target + " below " + std::to_string(epoch_.counter) + " (" +
                  std::to_string(cancelled) + ")");
    events_->emit("redispatch " + plan.target + "@" + std::to_string(epoch_.counter) + "#" +
                  std::to_string(plan.next_attempt));
  }
  redispatch(plan);
  return Outcome{true, epoch_, cancelled};
}

RollbackCoordinator::Outcome RollbackCoordinator::restore(
    const NodeId& node, const std::function<void(Epoch)>& recommit) {
  std::lock_guard lock(mutex_);
  epoch_ = epoch_.next();
  ++rollbacks_;
  const std::size_t root = topology_.index_of(node);
  for (std::size_t d : topology_.descendants(root)) fence_.invalidate(topology_.id_of(d), epoch_);
  const std::size_t cancelled = cancel_descendants(topology_, node, epoch_, registry_);
  if (events_) {
    events_->emit("epoch " + std::to_string(epoch_.counter));
    events_->emit("cancel " + node + " below " + std::to_string(epoch_.counter) + " (" +
                  std::to_string(cancelled) + ")");
    events_->emit("restore " + node + "@" + std::to_string(epoch_.counter));
  }
  recommit(epoch_);
  return Outcome{true, epoch_, cancelled};
}

Epoch RollbackCoordinator::current_epoch() const {
  std::lock_guard lock(mutex_);
  return epoch_;
}

std::size_t RollbackCoordinator::rollbacks() const {
  std::lock_guard lock(mutex_);
  return rollbacks_;
}

RollbackCoordinator::Outcome apply_rollback(const RollbackPlan& plan,
                                            RollbackCoordinator& coordinator,
                                            const RollbackCoordinator::Redispatch& redispatch) {
  return coordinator.apply(plan, redispatch);
}

GiveUpDecision give_up(const NodeId& node, const AttemptHistory& history) {
  const auto& entries = history.entries(node);
  if (entries.empty()) throw Error("no judged attempts recorded for node " + node);
  double top = entries.front().verdict.quality;
  for (const auto& record : entries) top = std::max(top, record.verdict.quality);
  std::map<std::string, std::size_t> repeats;
  for (const auto& record : entries)
    if (record.verdict.quality == top) ++repeats[record.digest];
  const AttemptRecord* best = nullptr;
  for (const auto& record : entries) {
    if (record.verdict.quality != top) continue;
    if (!best || repeats[record.digest] > repeats[best->digest]) best = &record;
  }
  return GiveUpDecision{*best, true};
}

}  // namespace vigil
