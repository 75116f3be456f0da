#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <set>
#include <utility>

#include "vigil/backends.hpp"
#include "vigil/executor.hpp"
#include "vigil/sim.hpp"

namespace vigil::testing {

/// Error-free chain spec n1 -> n2 -> ... adding `constant` at every node.
inline std::shared_ptr<const SimTaskSpec> clean_chain(std::size_t n, double constant = 1.0,
                                                      double input = 0.0) {
  SimNodeSpec node{SimOp::Add, constant, SimErrorModel{0.0, PerturbationKind::ValueScale, 0.1}, 0.0};
  return std::make_shared<const SimTaskSpec>(SimTaskSpec::chain(n, node, input));
}

/// Computes the clean sim value, except that listed (node, attempt) pairs
/// emit the clean value scaled by `factor`.
class ScriptedBackend final : public AgentBackend {
 public:
  ScriptedBackend(std::shared_ptr<const SimTaskSpec> spec,
                  std::set<std::pair<NodeId, std::uint32_t>> wrong, double factor = 1.1)
      : spec_(std::move(spec)), wrong_(std::move(wrong)), factor_(factor) {}

  GenerateResult generate(const GenerateRequest& request) override {
    calls_.fetch_add(1);
    auto p = spec_->parents.find(request.node);
    const bool source = p == spec_->parents.end() || p->second.empty();
    const std::vector<Payload> inputs = source ? std::vector<Payload>{request.input} : request.upstream;
    auto out = sim_generate(*spec_, request.node, inputs, request.seed, request.perturbation);
    if (wrong_.count({request.node, request.attempt}))
      out.output = sim_payload(payload_value(out.output) * factor_);
    return GenerateResult{out.output, "scripted attempt=" + std::to_string(request.attempt)};
  }

  std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<const SimTaskSpec> spec_;
  std::set<std::pair<NodeId, std::uint32_t>> wrong_;
  double factor_;
  std::atomic<std::size_t> calls_{0};
};

class ThrowingBackend final : public AgentBackend {
 public:
  GenerateResult generate(const GenerateRequest& request) override {
    throw BackendFailure(request.node, "scripted outage");
  }
};

class ThrowingMonitor final : public MonitorBackend {
 public:
  JudgeResult judge(const Payload&, const AssessmentContext&, std::uint64_t) override {
    throw Error("monitor offline");
  }
};

/// Fixed judgment regardless of input.
class FixedMonitor final : public MonitorBackend {
 public:
  FixedMonitor(DimensionScores scores, std::string rationale)
      : scores_(scores), rationale_(std::move(rationale)) {}
  JudgeResult judge(const Payload&, const AssessmentContext&, std::uint64_t) override {
    return JudgeResult{scores_, rationale_};
  }

 private:
  DimensionScores scores_;
  std::string rationale_;
};

inline Verdict make_test_verdict(const SnapshotKey& key, bool pass, double confidence,
                                 ErrorCategory category = ErrorCategory::Content,
                                 double quality = -1.0) {
  Verdict v;
  v.key = key;
  v.pass = pass;
  v.category = pass ? ErrorCategory::None : category;
  v.confidence = confidence;
  v.quality = quality >= 0.0 ? quality : (pass ? confidence : 1.0 - confidence);
  v.rationale = pass ? "ok" : "content: wrong value";
  return v;
}

inline Snapshot make_test_snapshot(const NodeId& node, std::uint64_t epoch, std::uint32_t attempt,
                                   double value = 1.0) {
  Snapshot s;
  s.node = node;
  s.epoch = Epoch{epoch};
  s.attempt = attempt;
  s.input = sim_payload(value - 1.0);
  s.output = sim_payload(value);
  s.output.provenance = Provenance{node, Epoch{epoch}, attempt};
  s.prompt_history = {"Compute from " + s.input.content + "."};
  s.reasoning_trace = "trace " + node;
  s.timestamp_ns = 1000 + static_cast<std::int64_t>(attempt);
  return s;
}

}  // namespace vigil::testing
