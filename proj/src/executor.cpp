#include "vigil/executor.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include "vigil/monitor_binding.hpp"
#include "vigil/retention.hpp"
#include "vigil/rng.hpp"
#include "vigil/thread_pool.hpp"

namespace vigil {

void RunConfig::validate() const {
  if (brp_max_rounds == 0) throw Error("reflection rounds must be at least 1");
  if (brp_window == 0) throw Error("reflection window must be at least 1");
  if (snapshot_budget && *snapshot_budget == 0) throw Error("snapshot budget must be at least 1");
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0))
    throw Error("threshold must lie in [0, 1]");
  if (signature_repetitions == 0) throw Error("signature repetitions must be at least 1");
}

bool ExecutionRecord::same_outcome(const ExecutionRecord& o) const {
  return run_id == o.run_id && completions == o.completions && final_output == o.final_output &&
         outputs == o.outputs && committed == o.committed && degraded == o.degraded &&
         degraded_nodes == o.degraded_nodes && correction_count == o.correction_count &&
         rollback_count == o.rollback_count && corrections_per_node == o.corrections_per_node &&
         final_epoch == o.final_epoch && verdicts == o.verdicts && transcripts == o.transcripts &&
         hcv_escalations == o.hcv_escalations && chaos_events == o.chaos_events &&
         warnings == o.warnings && monitored == o.monitored;
}

void to_json(json& j, const Completion& c) {
  j = json{{"node", c.node}, {"epoch", c.epoch.counter}, {"attempt", c.attempt}};
}

void from_json(const json& j, Completion& c) {
  j.at("node").get_to(c.node);
  c.epoch.counter = j.at("epoch").get<std::uint64_t>();
  j.at("attempt").get_to(c.attempt);
}

json record_to_json(const ExecutionRecord& r, bool timing) {
  json committed = json::object();
  for (const auto& [node, key] : r.committed) committed[node] = key;
  json j{{"run_id", r.run_id},
         {"completions", r.completions},
         {"final_output", r.final_output},
         {"outputs", r.outputs},
         {"committed", committed},
         {"degraded", r.degraded},
         {"degraded_nodes", r.degraded_nodes},
         {"correction_count", r.correction_count},
         {"rollback_count", r.rollback_count},
         {"corrections_per_node", r.corrections_per_node},
         {"final_epoch", r.final_epoch.counter},
         {"verdicts", r.verdicts},
         {"transcripts", r.transcripts},
         {"hcv_escalations", r.hcv_escalations},
         {"chaos_events", r.chaos_events},
         {"warnings", r.warnings},
         {"monitored", r.monitored}};
  if (timing) {
    j["monitoring_debt"] = r.monitoring_debt;
    j["critical_path_ns"] = r.critical_path_ns;
    j["monitor_latency_total_ns"] = r.monitor_latency_total_ns;
    j["dispatch_ns_total"] = r.dispatch_ns_total;
    j["dispatches"] = r.dispatches;
    j["wall_ns"] = r.wall_ns;
    j["speculation"] = {{"launched", r.speculation.launched},
                        {"discarded_completions", r.speculation.discarded_completions},
                        {"cancelled_tasks", r.speculation.cancelled_tasks},
                        {"stale_verdicts", r.speculation.stale_verdicts},
                        {"dropped_assessments", r.speculation.dropped_assessments}};
  }
  return j;
}

struct Executor::Pools {
  Pools(const ExecutorOptions& o)
      : nodes(o.node_workers), monitors(o.monitor_workers, o.monitor_queue_capacity) {}
  ThreadPool nodes;
  MonitorDispatcher monitors;
};

Executor::Executor(const BackendRegistry& backends, ExecutorOptions options)
    : backends_(backends), pools_(std::make_unique<Pools>(options)) {}

Executor::~Executor() = default;

ExecutionRecord Executor::execute(const WorkflowGraph& graph, const Payload& input,
                                  const RunConfig& config, std::shared_ptr<SnapshotStore> store) {
  return run(graph, input, config, std::move(store), nullptr);
}

ExecutionRecord Executor::resume(const WorkflowGraph& graph, const Payload& input,
                                 const RunConfig& config, std::shared_ptr<SnapshotStore> store,
                                 const SnapshotKey& from) {
  if (!store) throw Error("resume needs the snapshot store of the original run");
  return run(graph, input, config, std::move(store), &from);
}

namespace {

struct Event {
  enum class Kind { NodeDone, VerdictReady };
  Kind kind = Kind::NodeDone;
  SnapshotKey key;
  bool cancelled = false;
  bool failed = false;
  std::string error;
  GenerateResult result;
  std::optional<Verdict> verdict;
  std::int64_t finished_ns = 0;
  std::int64_t monitor_ns = 0;
};

/// Shared between the coordinator and in-flight tasks; tasks hold a
/// reference so it outlives the coordinator if needed.
struct RunState {
  explicit RunState(std::string id) : registry(std::move(id)) {}

  void post(Event event) {
    {
      std::lock_guard lock(mutex);
      events.push_back(std::move(event));
    }
    ready.notify_one();
  }

  Event wait() {
    std::unique_lock lock(mutex);
    ready.wait(lock, [&] { return !events.empty(); });
    Event e = std::move(events.front());
    events.pop_front();
    return e;
  }

  TaskRegistry registry;
  MonitorMetrics metrics;
  std::mutex mutex;
  std::condition_variable ready;
  std::deque<Event> events;
};

struct Launch {
  Payload input;
  std::vector<Payload> upstream;
  std::vector<Provenance> provenance;
  std::vector<std::string> prompts;
  std::vector<std::string> chaos_events;
};

struct NodeState {
  std::optional<SnapshotKey> running;
  std::optional<Launch> launch;
  std::optional<Snapshot> done;
  std::int64_t done_ns = 0;
  bool awaiting_verdict = false;
  std::optional<Verdict> verdict;
  bool resolved = false;
  std::uint32_t attempt = 0;
  std::optional<RollbackPlan> plan;
  bool plan_reflects = false;
  std::vector<AttemptRecord> lineage;
  ReflectionTranscript transcript;
  bool escalate_hcv = false;
  std::vector<std::string> chaos_events;
};

Payload merge_inputs(const std::vector<NodeId>& ids, const std::vector<Payload>& payloads) {
  Payload merged;
  for (std::size_t i = 0; i < payloads.size(); ++i) {
    if (!merged.content.empty()) merged.content += "\n";
    merged.content += "[" + ids[i] + "] " + payloads[i].content;
    for (const auto& [k, v] : payloads[i].structured) merged.structured[ids[i] + "." + k] = v;
  }
  return merged;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : sep) + p;
  return out;
}

}  // namespace

ExecutionRecord Executor::run(const WorkflowGraph& graph, const Payload& input,
                              const RunConfig& config, std::shared_ptr<SnapshotStore> store,
                              const SnapshotKey* from) {
  config.validate();
  if (auto problems = validate_graph(graph, backends_); !problems.empty()) {
    std::vector<std::string> messages;
    for (const auto& p : problems) messages.push_back(p.message);
    throw GraphError("invalid workflow: " + join(messages, "; "));
  }
  const GraphTopology topo(graph);
  const std::size_t n = topo.size();
  if (!store) store = std::make_shared<InMemorySnapshotStore>();
  auto* log_store = dynamic_cast<LogSnapshotStore*>(store.get());

  const std::string run_id =
      config.run_id.empty() ? "run-" + std::to_string(config.seed) : config.run_id;
  auto state = std::make_shared<RunState>(run_id);
  EventLog* events = config.events;
  auto emit = [&](const std::string& e) {
    if (events) events->emit(e);
  };

  EpochFence fence;
  Epoch base{};
  if (from) {
    for (const auto& key : store->keys()) base = std::max(base, key.epoch);
    base = base.next();
  }
  RollbackCoordinator coordinator(topo, state->registry, fence, base, events);
  std::vector<NodeState> nodes(n);
  AttemptHistory history;
  SignatureTracker tracker(config.signature_repetitions);
  VerdictRouter router;

  ExecutionRecord record;
  record.run_id = run_id;
  record.monitored = config.monitoring;
  std::size_t inflight = 0;
  std::size_t cursor = 0;
  std::int64_t final_ns = 0;
  std::optional<BackendFailure> failure;
  const std::int64_t start_ns = monotonic_now_ns();

  auto binding = [&](std::size_t i) -> std::optional<MonitorConfig> {
    const auto& spec = graph.nodes.at(topo.id_of(i));
    if (!config.monitoring || !spec.monitor) return std::nullopt;
    MonitorConfig b = *spec.monitor;
    if (config.threshold) b.threshold = *config.threshold;
    if (config.correction_budget) b.max_corrections = *config.correction_budget;
    if (b.mode == MonitorMode::Brp)
      b.max_corrections = std::min<std::uint32_t>(
          b.max_corrections, static_cast<std::uint32_t>(config.brp_max_rounds - 1));
    return b;
  };

  auto add_completion = [&](const SnapshotKey& key) {
    Completion c{key.node, key.epoch, key.attempt};
    if (std::find(record.completions.begin(), record.completions.end(), c) ==
        record.completions.end())
      record.completions.push_back(c);
  };

  if (from) {
    auto snap = store->get(*from);
    if (!snap) throw Error("snapshot " + from->to_string() + " is not in the store");
    const std::size_t root = topo.index_of(from->node);
    for (std::size_t j = 0; j < n; ++j) {
      const NodeId& id = topo.id_of(j);
      std::optional<Snapshot> reuse;
      if (j == root)
        reuse = snap;
      else if (!topo.descends_from(j, root))
        if (auto latest = store->latest_key(id)) reuse = store->get(*latest);
      if (j != root && topo.descends_from(j, root)) fence.invalidate(id, base);
      if (reuse) {
        nodes[j].done = reuse;
        nodes[j].resolved = true;
        nodes[j].attempt = reuse->attempt;
        record.outputs[id] = reuse->output;
        record.committed[id] = reuse->key();
      }
    }
  }

  auto invalidate_descendants = [&](std::size_t root, bool include_root) {
    for (std::size_t d : topo.descendants(root)) {
      if (d == root && !include_root) continue;
      auto& ns = nodes[d];
      ns.running.reset();
      ns.launch.reset();
      ns.done.reset();
      ns.verdict.reset();
      ns.awaiting_verdict = false;
      ns.resolved = false;
      ns.chaos_events.clear();
      if (d != root) ns.lineage.clear();
    }
  };

  auto prune = [&]() {
    if (!config.snapshot_budget) return;
    std::set<NodeId> frontier;
    for (std::size_t i = 0; i < n; ++i)
      if ((nodes[i].done && !nodes[i].resolved) || nodes[i].running)
        if (store->latest_key(topo.id_of(i))) frontier.insert(topo.id_of(i));
    const std::size_t budget = std::max(*config.snapshot_budget, frontier.size());
    std::vector<RetentionNode> costs;
    for (std::size_t i = 0; i < n; ++i) costs.push_back(RetentionNode{topo.id_of(i), 1.0, 1.0, 1.0});
    auto plan = optimize_retention(topo, costs, budget, frontier);
    prune_snapshots(*store, budget, frontier, plan.retained);
  };

  auto launchable = [&](std::size_t i) {
    const auto& ns = nodes[i];
    if (ns.running || ns.done) return false;
    for (std::size_t p : topo.parents(i)) {
      if (!nodes[p].done) return false;
      if (config.synchronous_monitoring && !nodes[p].resolved) return false;
    }
    return true;
  };

  auto launch = [&](std::size_t i) {
    auto& ns = nodes[i];
    const NodeId& id = topo.id_of(i);
    const auto& spec = graph.nodes.at(id);
    Epoch epoch = fence.valid_from(id);
    for (std::size_t p : topo.parents(i)) epoch = std::max(epoch, nodes[p].done->epoch);
    const SnapshotKey key{id, epoch, ns.attempt};

    GenerateRequest request;
    request.node = id;
    request.seed = derive_seed(config.seed, id);
    request.attempt = ns.attempt;
    Launch launch;
    std::map<std::string, std::string> values{{"input", input.content}};
    std::vector<NodeId> present;
    double delay_ms = 0.0;
    for (std::size_t p : topo.parents(i)) {
      const NodeId& pid = topo.id_of(p);
      Payload payload = nodes[p].done->output;
      launch.provenance.push_back(payload.provenance);
      if (!config.chaos.empty()) {
        auto chaos = inject_chaos(config.chaos, {pid, id}, payload,
                                  derive_seed(config.seed, "chaos:" + key.to_string()), false);
        if (chaos.event) launch.chaos_events.push_back(*chaos.event + " @" + key.to_string());
        delay_ms += chaos.delayed_ms;
        if (!chaos.payload) {
          request.missing_inputs.push_back(pid);
          values[pid] = "(missing)";
          continue;
        }
        payload = *chaos.payload;
      }
      values[pid] = payload.content;
      present.push_back(pid);
      request.upstream.push_back(payload);
    }
    if (topo.parents(i).empty())
      launch.input = input;
    else if (topo.parents(i).size() == 1 && request.upstream.size() == 1)
      launch.input = request.upstream.front();
    else
      launch.input = merge_inputs(present, request.upstream);
    request.input = launch.input;
    launch.upstream = request.upstream;

    if (ns.plan) {
      request.prompt = ns.plan->augmented_prompt;
      request.perturbation = ns.plan->perturbation;
      request.reflection = ns.plan_reflects;
      launch.prompts = ns.plan->prompt_history;
    } else {
      request.prompt = render_template(spec.prompt_template, values);
      launch.prompts = {request.prompt};
    }

    CancelToken token = state->registry.register_task(key, TaskKind::Node);
    ns.running = key;
    ns.launch = std::move(launch);
    ++inflight;
    ++record.speculation.launched;
    emit("launch " + key.to_string());
    auto backend = backends_.agent(spec.backend);
    pools_->nodes.submit([state, key, request = std::move(request), backend, token, delay_ms] {
      Event ev;
      ev.kind = Event::Kind::NodeDone;
      ev.key = key;
      if (token.cancelled()) {
        ev.cancelled = true;
      } else {
        if (delay_ms > 0.0)
          std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay_ms));
        try {
          ev.result = backend->generate(request);
        } catch (const std::exception& e) {
          ev.failed = true;
          ev.error = e.what();
        }
      }
      ev.finished_ns = monotonic_now_ns();
      state->post(std::move(ev));
    });
  };

  auto dispatch = [&](std::size_t i, const MonitorConfig& b) {
    auto& ns = nodes[i];
    const Snapshot& snapshot = *ns.done;
    std::optional<double> upstream_confidence;
    for (const auto& p : ns.launch->upstream)
      if (auto c = p.field("confidence"))
        upstream_confidence = upstream_confidence ? std::min(*upstream_confidence, *c) : *c;
    ns.awaiting_verdict = false;
    if (!should_activate(b, upstream_confidence)) return;
    ns.awaiting_verdict = true;

    AssessOptions options;
    options.rule = config.aggregation;
    options.classify = config.classify;
    options.seed = derive_seed(config.seed, "monitor:" + snapshot.key().to_string());
    options.metrics = &state->metrics;
    AssessmentContext context{snapshot.key(), snapshot.input, ns.launch->upstream};

    std::optional<EnsembleConfig> ensemble;
    if (b.mode == MonitorMode::Hcv) {
      ensemble = *backends_.ensemble(b.backend);
    } else if (ns.escalate_hcv && b.ensemble) {
      ensemble = *backends_.ensemble(*b.ensemble);
    }
    std::shared_ptr<MonitorBackend> monitor = ensemble ? nullptr : backends_.monitor(b.backend);
    const bool parallel = config.parallel_ensemble;
    const BackendRegistry& registry = backends_;
    auto job = [state, snapshot, context, options, ensemble, monitor, parallel,
                &registry](const CancelToken& token) {
      Event ev;
      ev.kind = Event::Kind::VerdictReady;
      ev.key = snapshot.key();
      if (token.cancelled()) {
        ev.cancelled = true;
      } else {
        const std::int64_t t0 = monotonic_now_ns();
        if (ensemble) {
          auto report = cross_validate(snapshot, context, *ensemble, registry,
                                       CrossValidateOptions{options, parallel});
          if (report.inconclusive) {
            state->metrics.unavailable.fetch_add(1);
            Verdict v;
            v.key = snapshot.key();
            v.monitor_unavailable = true;
            v.confidence = 0.0;
            v.rationale = "monitor-unavailable: ensemble inconclusive";
            ev.verdict = v;
          } else {
            EscalationThresholds thresholds{ensemble->disagreement_threshold,
                                            ensemble->entropy_threshold};
            ev.verdict = verdict_from_report(snapshot.key(), report,
                                             escalate_decision(report, thresholds));
          }
        } else {
          ev.verdict = assess(snapshot, context, *monitor, options);
        }
        ev.monitor_ns = monotonic_now_ns() - t0;
      }
      ev.finished_ns = monotonic_now_ns();
      state->post(std::move(ev));
    };

    const std::int64_t d0 = monotonic_now_ns();
    auto handle = pools_->monitors.on_complete(b, snapshot, state->registry, std::move(job),
                                               upstream_confidence, &state->metrics);
    record.dispatch_ns_total += monotonic_now_ns() - d0;
    ++record.dispatches;
    if (handle) {
      ++inflight;
    } else {
      ++record.speculation.dropped_assessments;
      Verdict v;
      v.key = snapshot.key();
      v.monitor_unavailable = true;
      v.confidence = 0.0;
      v.rationale = "monitor-unavailable: assessment queue full";
      ns.verdict = v;
    }
  };

  auto on_node_done = [&](Event& ev) {
    const bool live = state->registry.complete(ev.key, TaskKind::Node);
    const std::size_t i = topo.index_of(ev.key.node);
    auto& ns = nodes[i];
    if (!live || !ns.running || *ns.running != ev.key || fence.is_stale(ev.key)) {
      ++record.speculation.discarded_completions;
      emit("discard " + ev.key.to_string());
      return;
    }
    if (ev.failed) {
      failure.emplace(ev.key.node, ev.error);
      return;
    }
    Snapshot s;
    s.node = ev.key.node;
    s.epoch = ev.key.epoch;
    s.attempt = ev.key.attempt;
    s.input = ns.launch->input;
    s.output = std::move(ev.result.output);
    s.output.provenance = Provenance{s.node, s.epoch, s.attempt};
    s.prompt_history = ns.launch->prompts;
    s.reasoning_trace = std::move(ev.result.reasoning_trace);
    s.timestamp_ns = ev.finished_ns;
    s.upstream = ns.launch->provenance;
    store->put(s);
    emit("commit " + ev.key.to_string());
    ns.running.reset();
    ns.chaos_events = ns.launch->chaos_events;
    ns.done = std::move(s);
    ns.done_ns = ev.finished_ns;
    ns.verdict.reset();
    ns.awaiting_verdict = false;
    if (auto b = binding(i)) dispatch(i, *b);
    prune();
  };

  auto on_verdict = [&](Event& ev) {
    const std::size_t i = topo.index_of(ev.key.node);
    auto& ns = nodes[i];
    if (ev.cancelled || !ns.done || ns.done->key() != ev.key || !ns.awaiting_verdict ||
        ns.verdict || fence.is_stale(ev.key)) {
      ++record.speculation.stale_verdicts;
      state->metrics.stale_discarded.fetch_add(1);
      return;
    }
    ns.verdict = std::move(ev.verdict);
    record.monitor_latency_total_ns += ev.monitor_ns;
  };

  auto rebuild_context = [&](NodeState& ns, const std::string& task) {
    ComposedContext ctx;
    ctx.task = task;
    for (const auto& round : ns.transcript.rounds)
      if (round.feedback) ctx = compose_context(ctx, round.output, *round.feedback, config.brp_window);
    return ctx;
  };

  auto commit = [&](std::size_t i, bool degraded) {
    auto& ns = nodes[i];
    const NodeId& id = topo.id_of(i);
    const SnapshotKey key = ns.done->key();
    ns.resolved = true;
    record.outputs[id] = ns.done->output;
    record.committed[id] = key;
    add_completion(key);
    for (const auto& e : ns.chaos_events) record.chaos_events.push_back(e);
    if (degraded) {
      record.degraded = true;
      record.degraded_nodes.push_back(id);
    }
    auto b = binding(i);
    if (b && b->mode == MonitorMode::Brp && !ns.transcript.rounds.empty()) {
      auto& t = ns.transcript;
      t.node = id;
      t.window = config.brp_window;
      t.max_rounds = config.brp_max_rounds;
      t.rounds_used = t.rounds.size();
      t.terminated = t.rounds.back().accepted;
      t.escalated = !t.terminated;
      if (log_store) log_store->append_record(RecordKind::Transcript, json(t));
      record.transcripts.push_back(t);
    }
    if (i == n - 1) final_ns = ns.done_ns;
    emit("accept " + key.to_string() + (degraded ? " degraded" : ""));
  };

  auto route = [&](std::size_t i) {
    auto& ns = nodes[i];
    const NodeId& id = topo.id_of(i);
    if (!ns.awaiting_verdict && !ns.verdict) {
      commit(i, false);
      return;
    }
    const auto b = *binding(i);
    Snapshot& s = *ns.done;
    const SnapshotKey key = s.key();
    Verdict v = *ns.verdict;
    if (!v.pass && !v.monitor_unavailable &&
        tracker.observe(error_signature(v.category, v.rationale), id, key.attempt))
      v.category = ErrorCategory::Systematic;
    store->append_diagnostic(key, v);
    s.diagnostics.push_back(v);
    AttemptRecord attempt_record{key, output_digest(s.output), v};
    history.append(id, attempt_record);
    ns.lineage.push_back(attempt_record);
    record.verdicts.push_back(v);

    const bool brp = b.mode == MonitorMode::Brp;
    if (brp) {
      auto& rounds = ns.transcript.rounds;
      if (rounds.size() > key.attempt) rounds.resize(key.attempt);
      RoundState round;
      round.t = rounds.size() + 1;
      round.context = rebuild_context(ns, s.prompt_history.front());
      round.output = s.output;
      round.accepted = v.pass;
      round.digest = output_digest(s.output);
      if (!v.pass && round.t < config.brp_max_rounds) round.feedback = feedback_from_verdict(v, s);
      rounds.push_back(std::move(round));
      if (!v.pass && b.ensemble && !ns.escalate_hcv && detect_oscillation(ns.transcript).found) {
        ns.escalate_hcv = true;
        ++record.hcv_escalations;
        emit("escalate " + key.to_string());
      }
    }

    const auto decision = router.route(v, s, b, &fence, &state->metrics);
    using Action = RouteDecision::Action;
    if (decision.action == Action::Discard) return;
    if (decision.action == Action::Accept && !decision.degraded) {
      commit(i, false);
      return;
    }
    if (decision.action == Action::Accept) {
      AttemptHistory lineage;
      for (const auto& r : ns.lineage) lineage.append(id, r);
      const auto best = give_up(id, lineage);
      if (best.committed.key == key) {
        commit(i, true);
        return;
      }
      auto restored = store->get(best.committed.key);
      if (!restored) {
        record.warnings.push_back("best attempt " + best.committed.key.to_string() +
                                  " was pruned; committing " + key.to_string());
        commit(i, true);
        return;
      }
      add_completion(key);
      const auto outcome = coordinator.restore(id, [&](Epoch epoch) {
        invalidate_descendants(i, false);
        Snapshot r = *restored;
        r.epoch = epoch;
        r.attempt = ns.attempt;
        r.output.provenance = Provenance{id, epoch, r.attempt};
        r.diagnostics = {best.committed.verdict};
        r.timestamp_ns = monotonic_now_ns();
        store->put(r);
        emit("commit " + r.key().to_string());
        ns.done = r;
        ns.done_ns = r.timestamp_ns;
        ns.verdict.reset();
        ns.awaiting_verdict = false;
      });
      record.speculation.cancelled_tasks += outcome.cancelled;
      ++record.rollback_count;
      commit(i, true);
      prune();
      return;
    }

    PlanOptions options;
    if (brp) {
      ComposedContext ctx = rebuild_context(ns, s.prompt_history.front());
      std::string avoid;
      for (const auto& d : history.failed_digests(id)) avoid += "- " + d + "\n";
      options.augmentation_override = config.templates.reflection_preamble + "\n\n" +
                                      ctx.render() +
                                      "\nDo not repeat outputs with these digests:\n" + avoid;
    }
    RollbackPlan plan;
    try {
      plan = plan_rollback(*decision.request, *store, history, config.templates,
                           coordinator.current_epoch(), options);
    } catch (const CorrectionAborted& e) {
      record.warnings.push_back(e.what());
      commit(i, true);
      return;
    }
    add_completion(key);
    ++record.correction_count;
    ++record.corrections_per_node[id];
    const auto outcome = coordinator.apply(plan, [&](const RollbackPlan& p) {
      invalidate_descendants(i, true);
      ns.attempt = p.next_attempt;
      ns.plan = p;
      ns.plan_reflects = brp;
    });
    record.speculation.cancelled_tasks += outcome.cancelled;
    if (outcome.applied) ++record.rollback_count;
  };

  auto advance = [&]() {
    bool progressed = false;
    while (cursor < n) {
      auto& ns = nodes[cursor];
      if (ns.resolved) {
        ++cursor;
        continue;
      }
      if (!ns.done) break;
      if (ns.awaiting_verdict && !ns.verdict) break;
      route(cursor);
      progressed = true;
      if (!nodes[cursor].resolved) break;
      ++cursor;
    }
    return progressed;
  };

  auto launch_ready = [&]() {
    bool launched = false;
    for (std::size_t i = 0; i < n; ++i)
      if (launchable(i)) {
        launch(i);
        launched = true;
      }
    return launched;
  };

  auto drain = [&]() {
    record.speculation.cancelled_tasks += state->registry.clear();
    while (inflight > 0) {
      state->wait();
      --inflight;
    }
  };

  try {
    for (;;) {
      bool changed = true;
      while (changed && !failure) changed = launch_ready() | advance();
      if (failure) break;
      if (cursor >= n) break;
      if (inflight == 0) throw Error("executor stalled with no runnable work");
      Event ev = state->wait();
      --inflight;
      if (ev.kind == Event::Kind::NodeDone)
        on_node_done(ev);
      else
        on_verdict(ev);
    }
  } catch (...) {
    drain();
    throw;
  }
  drain();
  if (failure) throw *failure;

  const std::int64_t end_ns = monotonic_now_ns();
  std::sort(record.completions.begin(), record.completions.end(),
            [&](const Completion& a, const Completion& b) {
              return std::make_tuple(a.epoch, topo.index_of(a.node), a.attempt) <
                     std::make_tuple(b.epoch, topo.index_of(b.node), b.attempt);
            });
  record.final_output = record.outputs.at(topo.id_of(n - 1));
  record.final_epoch = coordinator.current_epoch();
  record.critical_path_ns = (final_ns > 0 ? final_ns : end_ns) - start_ns;
  record.wall_ns = end_ns - start_ns;
  record.monitoring_debt = state->metrics.debt();
  return record;
}

}  // namespace vigil
