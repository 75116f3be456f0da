#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vigil/backends.hpp"
#include "vigil/graph.hpp"
#include "vigil/monitoring.hpp"
#include "vigil/perturbation.hpp"
#include "vigil/reflection.hpp"
#include "vigil/types.hpp"

namespace vigil {

enum class SimOp { Add, Mul };
enum class PerturbationKind { ValueScale, DigitFlip, FormatCorrupt, Omission };

std::string_view to_string(SimOp op);
SimOp sim_op_from_string(std::string_view text);
std::string_view to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(std::string_view text);

struct SimErrorModel {
  /// Probability that an attempt is perturbed.
  double probability = 0.0;
  PerturbationKind kind = PerturbationKind::ValueScale;
  /// Relative scale for ValueScale.
  double magnitude = 0.1;
};

struct SimNodeSpec {
  SimOp op = SimOp::Add;
  double constant = 0.0;
  SimErrorModel error;
  double latency_ms = 0.0;
};

/// Arithmetic task family. A node applies its operation to the sum of its
/// parents' values (to the run input for sources).
struct SimTaskSpec {
  double input_value = 0.0;
  std::map<NodeId, SimNodeSpec> nodes;
  std::map<NodeId, std::vector<NodeId>> parents;

  /// Error-free value at a node. Throws on unknown nodes or cycles.
  double ground_truth(const NodeId& node) const;
  const SimNodeSpec& node(const NodeId& id) const;

  /// Linear chain n1 -> n2 -> ... with identical node settings.
  static SimTaskSpec chain(std::size_t n, SimNodeSpec node, double input_value = 1.0);
  /// Matching workflow graph (prompt template `{input}` on sources, parent
  /// placeholders elsewhere).
  WorkflowGraph graph(const std::string& backend) const;
};

/// Canonical content for a value: `value=<%.17g>`.
std::string sim_content(double value);
/// Payload carrying a value in canonical form.
Payload sim_payload(double value);
/// Value read from the structured field, else parsed from content, else 0.
double payload_value(const Payload& payload);

struct SimOutput {
  Payload output;
  std::string reasoning_trace;
  bool injected = false;
};

/// One attempt of `node`. Injection fires when the seeded draw for
/// (seed, node, seed_offset) falls below the node's error probability. An
/// injected output whose digest is in the avoid list is varied until it is
/// not. Missing inputs contribute nothing to the sum.
SimOutput sim_generate(const SimTaskSpec& spec, const NodeId& node,
                       const std::vector<Payload>& inputs, std::uint64_t seed,
                       const PerturbationDirective& perturbation = {});

/// Ground-truth judgment: content is exact-match against the error-free
/// value, format checks the canonical rendering, completeness checks the
/// structured field, logic checks text against the field.
JudgeResult oracle_judge(const SimTaskSpec& spec, const NodeId& node, const Payload& output);

class SimAgentBackend final : public AgentBackend {
 public:
  explicit SimAgentBackend(std::shared_ptr<const SimTaskSpec> spec, bool sleep = true);
  GenerateResult generate(const GenerateRequest& request) override;

 private:
  std::shared_ptr<const SimTaskSpec> spec_;
  bool sleep_;
};

class OracleMonitor final : public MonitorBackend {
 public:
  explicit OracleMonitor(std::shared_ptr<const SimTaskSpec> spec, double latency_ms = 0.0);
  JudgeResult judge(const Payload& output, const AssessmentContext& context,
                    std::uint64_t seed) override;

 private:
  std::shared_ptr<const SimTaskSpec> spec_;
  double latency_ms_;
};

/// Imperfect monitor: catches a true error with probability `sensitivity`
/// and flags a clean output with probability `false_positive`, seeded per
/// snapshot key.
class StochasticMonitor final : public MonitorBackend {
 public:
  StochasticMonitor(std::shared_ptr<const SimTaskSpec> spec, double sensitivity,
                    double false_positive, double latency_ms = 0.0);
  JudgeResult judge(const Payload& output, const AssessmentContext& context,
                    std::uint64_t seed) override;

 private:
  std::shared_ptr<const SimTaskSpec> spec_;
  double sensitivity_;
  double false_positive_;
  double latency_ms_;
};

/// Shares the execution model's blind spot: wrong values pass as long as the
/// field is present.
class BiasedMonitor final : public MonitorBackend {
 public:
  explicit BiasedMonitor(std::shared_ptr<const SimTaskSpec> spec, double latency_ms = 0.0);
  JudgeResult judge(const Payload& output, const AssessmentContext& context,
                    std::uint64_t seed) override;

 private:
  std::shared_ptr<const SimTaskSpec> spec_;
  double latency_ms_;
};

/// Inspectable actor for reflection experiments. On round t it produces an
/// acceptable candidate with probability pi_t = min(1, pi_1 + (t-1) delta),
/// or pi_1 throughout when frozen.
struct SimActSpec {
  double pi1 = 0.2;
  double delta = 0.1;
  bool frozen = false;
  std::vector<std::string> support{"a", "b", "c", "d"};
  std::vector<std::string> accepted{"a"};

  double pi(std::size_t round) const;
};

class SimActModel final : public ReflectionActor {
 public:
  explicit SimActModel(SimActSpec spec) : spec_(std::move(spec)) {}
  Payload act(const ComposedContext& context, std::size_t round, std::uint64_t seed,
              bool reflect) override;
  const SimActSpec& spec() const { return spec_; }
  /// Rounds run with the reflection flag set.
  std::size_t reflections() const { return reflections_; }

 private:
  SimActSpec spec_;
  std::size_t reflections_ = 0;
};

/// Accepts exactly the spec's accepted set.
class SimActReviewer final : public ReflectionReviewer {
 public:
  explicit SimActReviewer(SimActSpec spec, NodeId node = "brp")
      : spec_(std::move(spec)), node_(std::move(node)) {}
  std::optional<Feedback> review(const Payload& output, const ComposedContext& context,
                                 std::size_t round, std::uint64_t seed) override;

 private:
  SimActSpec spec_;
  NodeId node_;
};

AssumptionReport check_assumptions(const SimActSpec& spec);
/// Remote or otherwise opaque actors report every assumption as not checkable.
AssumptionReport check_assumptions(const ReflectionActor& actor);

}  // namespace vigil
