#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vigil/backends.hpp"
#include "vigil/monitoring.hpp"
#include "vigil/serialization.hpp"
#include "vigil/types.hpp"

namespace vigil {

struct TraceReference {
  SnapshotKey key;
  std::string excerpt;

  bool operator==(const TraceReference&) const = default;
};

/// Structured rejection sent from the monitor side to the actor.
struct Feedback {
  ErrorCategory error_type = ErrorCategory::None;
  std::string diagnostic_rationale;
  std::vector<TraceReference> contextual_trace;

  bool operator==(const Feedback&) const = default;
  /// Throws unless the category is a failure and rationale and trace are
  /// non-empty.
  void validate() const;
};

/// Builds feedback from a failing verdict, citing the judged snapshot.
Feedback feedback_from_verdict(const Verdict& verdict, const Snapshot& snapshot);

struct ExchangePair {
  Payload output;
  Feedback feedback;

  bool operator==(const ExchangePair&) const = default;
};

/// Context handed to the actor: the original task plus the most recent
/// rejected outputs with their feedback, bounded by the window.
struct ComposedContext {
  std::string task;
  std::deque<ExchangePair> pairs;
  /// Number of rejections folded in so far.
  std::size_t rejections = 0;

  bool operator==(const ComposedContext&) const = default;
  std::string render() const;
};

/// x_{t+1} from x_t, the rejected y_t and its feedback r_t, keeping only the
/// last `window` pairs. Throws on invalid feedback or a zero window.
ComposedContext compose_context(const ComposedContext& context, const Payload& output,
                                const Feedback& feedback, std::size_t window);

struct RoundState {
  std::size_t t = 1;
  ComposedContext context;
  Payload output;
  bool accepted = false;
  std::optional<Feedback> feedback;
  std::string digest;

  bool operator==(const RoundState&) const = default;
};

struct ReflectionTranscript {
  NodeId node;
  std::vector<RoundState> rounds;
  bool terminated = false;
  bool escalated = false;
  std::size_t rounds_used = 0;
  std::size_t window = 4;
  std::size_t max_rounds = 5;
  std::string failure;

  bool operator==(const ReflectionTranscript&) const = default;
};

void to_json(json& j, const TraceReference& ref);
void from_json(const json& j, TraceReference& ref);
void to_json(json& j, const Feedback& feedback);
void from_json(const json& j, Feedback& feedback);
void to_json(json& j, const ComposedContext& context);
void from_json(const json& j, ComposedContext& context);
void to_json(json& j, const RoundState& round);
void from_json(const json& j, RoundState& round);
void to_json(json& j, const ReflectionTranscript& transcript);
void from_json(const json& j, ReflectionTranscript& transcript);

/// Act side of a negotiation round.
class ReflectionActor {
 public:
  virtual ~ReflectionActor() = default;
  /// `reflect` is set from round 2 on: the actor first weighs the feedback in
  /// the context, then regenerates.
  virtual Payload act(const ComposedContext& context, std::size_t round, std::uint64_t seed,
                      bool reflect) = 0;
};

/// Monitor side of a negotiation round. Returns nothing on accept.
class ReflectionReviewer {
 public:
  virtual ~ReflectionReviewer() = default;
  virtual std::optional<Feedback> review(const Payload& output, const ComposedContext& context,
                                         std::size_t round, std::uint64_t seed) = 0;
};

/// Drives an agent backend; the prompt is the reflection preamble (from
/// round 2) followed by the rendered context.
class AgentActor final : public ReflectionActor {
 public:
  AgentActor(std::shared_ptr<AgentBackend> backend, NodeId node, std::string preamble);
  Payload act(const ComposedContext& context, std::size_t round, std::uint64_t seed,
              bool reflect) override;

 private:
  std::shared_ptr<AgentBackend> backend_;
  NodeId node_;
  std::string preamble_;
};

/// Wraps a monitor backend; a failing verdict becomes feedback.
class MonitorReviewer final : public ReflectionReviewer {
 public:
  MonitorReviewer(std::shared_ptr<MonitorBackend> backend, NodeId node,
                  AssessOptions options = {});
  std::optional<Feedback> review(const Payload& output, const ComposedContext& context,
                                 std::size_t round, std::uint64_t seed) override;

 private:
  std::shared_ptr<MonitorBackend> backend_;
  NodeId node_;
  AssessOptions options_;
};

struct BrpResult {
  std::optional<Payload> accepted;
  bool escalated = false;
  ReflectionTranscript transcript;
};

/// Alternates act and review until the first accept or `max_rounds` rounds.
/// A throwing backend ends the negotiation with an escalation carrying the
/// partial transcript. Throws on max_rounds or window of zero.
BrpResult run_brp(const std::string& task, ReflectionActor& actor, ReflectionReviewer& reviewer,
                  std::size_t max_rounds, std::size_t window, std::uint64_t seed,
                  const NodeId& node = "brp");

struct ConvergenceStats {
  /// Per round t (index t-1): acceptance rate among trials reaching t.
  std::vector<std::optional<double>> pi_hat;
  std::vector<std::size_t> reached;
  std::vector<std::size_t> accepted;
  std::size_t trials = 0;
  /// Fraction of all trials accepted by round t.
  std::vector<double> termination_rate_by_round;
};

/// Throws on an empty input.
ConvergenceStats estimate_pi(const std::vector<ReflectionTranscript>& transcripts);

struct OscillationResult {
  bool found = false;
  std::size_t first = 0;
  std::size_t second = 0;
};

/// Earliest pair of rounds (1-based) whose outputs share a digest.
OscillationResult detect_oscillation(const ReflectionTranscript& transcript);

enum class AssumptionStatus { Holds, Violated, NotCheckable };
std::string_view to_string(AssumptionStatus status);

/// Preconditions for guaranteed convergence of the negotiation: some output is
/// acceptable, acceptance probability grows each round, and every acceptable
/// output can be sampled.
struct AssumptionReport {
  AssumptionStatus candidate_exists = AssumptionStatus::NotCheckable;
  AssumptionStatus improves = AssumptionStatus::NotCheckable;
  AssumptionStatus full_support = AssumptionStatus::NotCheckable;
  std::vector<std::string> notes;

  bool all_hold() const;
};

}  // namespace vigil
