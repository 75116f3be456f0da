#include "vigil/reflection.hpp"

#include <exception>
#include <map>
#include <sstream>

namespace vigil {

void Feedback::validate() const {
  if (error_type == ErrorCategory::None) throw Error("feedback must carry a failure category");
  if (diagnostic_rationale.empty()) throw Error("feedback must carry a diagnostic rationale");
  if (contextual_trace.empty()) throw Error("feedback must carry a contextual trace");
}

Feedback feedback_from_verdict(const Verdict& verdict, const Snapshot& snapshot) {
  Feedback feedback;
  feedback.error_type = verdict.pass ? ErrorCategory::Content : verdict.category;
  feedback.diagnostic_rationale =
      verdict.rationale.empty() ? std::string("rejected without rationale") : verdict.rationale;
  constexpr std::size_t kExcerpt = 160;
  feedback.contextual_trace.push_back(
      TraceReference{snapshot.key(), snapshot.output.content.substr(0, kExcerpt)});
  return feedback;
}

std::string ComposedContext::render() const {
  std::ostringstream out;
  out << "Task:\n" << task << "\n";
  std::size_t round = rejections - pairs.size();
  for (const auto& pair : pairs) {
    ++round;
    out << "\nRejected answer (round " << round << "):\n"
        << canonical_form(pair.output) << "\nFeedback [" << to_string(pair.feedback.error_type)
        << "]: " << pair.feedback.diagnostic_rationale << "\n";
    for (const auto& ref : pair.feedback.contextual_trace)
      out << "  ref " << ref.key.to_string() << ": " << ref.excerpt << "\n";
  }
  return out.str();
}

ComposedContext compose_context(const ComposedContext& context, const Payload& output,
                                const Feedback& feedback, std::size_t window) {
  if (window == 0) throw Error("reflection window must be at least 1");
  feedback.validate();
  ComposedContext next = context;
  next.pairs.push_back(ExchangePair{output, feedback});
  while (next.pairs.size() > window) next.pairs.pop_front();
  ++next.rejections;
  return next;
}

void to_json(json& j, const TraceReference& ref) {
  j = json{{"key", ref.key}, {"excerpt", ref.excerpt}};
}
void from_json(const json& j, TraceReference& ref) {
  j.at("key").get_to(ref.key);
  j.at("excerpt").get_to(ref.excerpt);
}

void to_json(json& j, const Feedback& feedback) {
  j = json{{"error_type", std::string(to_string(feedback.error_type))},
           {"rationale", feedback.diagnostic_rationale},
           {"trace", feedback.contextual_trace}};
}
void from_json(const json& j, Feedback& feedback) {
  feedback.error_type = category_from_string(j.at("error_type").get<std::string>());
  j.at("rationale").get_to(feedback.diagnostic_rationale);
  j.at("trace").get_to(feedback.contextual_trace);
}

void to_json(json& j, const ComposedContext& context) {
  json pairs = json::array();
  for (const auto& p : context.pairs) pairs.push_back({{"output", p.output}, {"feedback", p.feedback}});
  j = json{{"task", context.task}, {"pairs", pairs}, {"rejections", context.rejections}};
}
void from_json(const json& j, ComposedContext& context) {
  j.at("task").get_to(context.task);
  context.pairs.clear();
  for (const auto& p : j.at("pairs"))
    context.pairs.push_back(
        ExchangePair{p.at("output").get<Payload>(), p.at("feedback").get<Feedback>()});
  j.at("rejections").get_to(context.rejections);
}

void to_json(json& j, const RoundState& round) {
  j = json{{"t", round.t},           {"context", round.context}, {"output", round.output},
           {"accepted", round.accepted}, {"digest", round.digest}};
  if (round.feedback) j["feedback"] = *round.feedback;
}
void from_json(const json& j, RoundState& round) {
  j.at("t").get_to(round.t);
  j.at("context").get_to(round.context);
  j.at("output").get_to(round.output);
  j.at("accepted").get_to(round.accepted);
  j.at("digest").get_to(round.digest);
  if (j.contains("feedback"))
    round.feedback = j.at("feedback").get<Feedback>();
  else
    round.feedback.reset();
}

void to_json(json& j, const ReflectionTranscript& transcript) {
  j = json{{"node", transcript.node},
           {"rounds", transcript.rounds},
           {"terminated", transcript.terminated},
           {"escalated", transcript.escalated},
           {"rounds_used", transcript.rounds_used},
           {"window", transcript.window},
           {"max_rounds", transcript.max_rounds},
           {"failure", transcript.failure}};
}
void from_json(const json& j, ReflectionTranscript& transcript) {
  j.at("node").get_to(transcript.node);
  j.at("rounds").get_to(transcript.rounds);
  j.at("terminated").get_to(transcript.terminated);
  j.at("escalated").get_to(transcript.escalated);
  j.at("rounds_used").get_to(transcript.rounds_used);
  j.at("window").get_to(transcript.window);
  j.at("max_rounds").get_to(transcript.max_rounds);
  j.at("failure").get_to(transcript.failure);
}

AgentActor::AgentActor(std::shared_ptr<AgentBackend> backend, NodeId node, std::string preamble)
    : backend_(std::move(backend)), node_(std::move(node)), preamble_(std::move(preamble)) {}

Payload AgentActor::act(const ComposedContext& context, std::size_t round, std::uint64_t seed,
                        bool reflect) {
  GenerateRequest request;
  request.node = node_;
  request.prompt = (reflect ? preamble_ + "\n\n" : std::string()) + context.render();
  request.input.content = context.task;
  request.seed = seed;
  request.attempt = static_cast<std::uint32_t>(round - 1);
  request.perturbation.seed_offset = static_cast<std::uint32_t>(round - 1);
  for (const auto& pair : context.pairs)
    request.perturbation.avoid_digests.push_back(output_digest(pair.output));
  request.reflection = reflect;
  return backend_->generate(request).output;
}

MonitorReviewer::MonitorReviewer(std::shared_ptr<MonitorBackend> backend, NodeId node,
                                 AssessOptions options)
    : backend_(std::move(backend)), node_(std::move(node)), options_(options) {}

std::optional<Feedback> MonitorReviewer::review(const Payload& output,
                                                const ComposedContext& context, std::size_t round,
                                                std::uint64_t seed) {
  Snapshot snapshot;
  snapshot.node = node_;
  snapshot.attempt = static_cast<std::uint32_t>(round - 1);
  snapshot.input.content = context.task;
  snapshot.output = output;
  AssessmentContext assessment{snapshot.key(), snapshot.input, {}};
  AssessOptions options = options_;
  options.seed = seed;
  Verdict verdict = assess(snapshot, assessment, *backend_, options);
  if (verdict.pass) return std::nullopt;
  return feedback_from_verdict(verdict, snapshot);
}

BrpResult run_brp(const std::string& task, ReflectionActor& actor, ReflectionReviewer& reviewer,
                  std::size_t max_rounds, std::size_t window, std::uint64_t seed,
                  const NodeId& node) {
  if (max_rounds == 0) throw Error("reflection needs at least one round");
  if (window == 0) throw Error("reflection window must be at least 1");
  BrpResult result;
  auto& transcript = result.transcript;
  transcript.node = node;
  transcript.window = window;
  transcript.max_rounds = max_rounds;

  ComposedContext context;
  context.task = task;
  for (std::size_t t = 1; t <= max_rounds; ++t) {
    RoundState round;
    round.t = t;
    round.context = context;
    try {
      round.output = actor.act(context, t, seed, t > 1);
      round.digest = output_digest(round.output);
      auto feedback = reviewer.review(round.output, context, t, seed);
      round.accepted = !feedback.has_value();
      if (!round.accepted && t < max_rounds) round.feedback = std::move(feedback);
    } catch (const std::exception& e) {
      transcript.failure = e.what();
      transcript.escalated = true;
      transcript.rounds_used = transcript.rounds.size();
      result.escalated = true;
      return result;
    }
    transcript.rounds.push_back(round);
    transcript.rounds_used = t;
    if (round.accepted) {
      transcript.terminated = true;
      result.accepted = round.output;
      return result;
    }
    if (round.feedback) context = compose_context(context, round.output, *round.feedback, window);
  }
  transcript.escalated = true;
  result.escalated = true;
  return result;
}

ConvergenceStats estimate_pi(const std::vector<ReflectionTranscript>& transcripts) {
  if (transcripts.empty()) throw Error("estimate_pi needs at least one transcript");
  ConvergenceStats stats;
  stats.trials = transcripts.size();
  std::size_t horizon = 0;
  for (const auto& t : transcripts) horizon = std::max(horizon, t.rounds.size());
  stats.reached.assign(horizon, 0);
  stats.accepted.assign(horizon, 0);
  for (const auto& transcript : transcripts) {
    for (const auto& round : transcript.rounds) {
      ++stats.reached[round.t - 1];
      if (round.accepted) ++stats.accepted[round.t - 1];
    }
  }
  std::size_t cumulative = 0;
  for (std::size_t i = 0; i < horizon; ++i) {
    if (stats.reached[i] == 0)
      stats.pi_hat.push_back(std::nullopt);
    else
      stats.pi_hat.push_back(static_cast<double>(stats.accepted[i]) /
                             static_cast<double>(stats.reached[i]));
    cumulative += stats.accepted[i];
    stats.termination_rate_by_round.push_back(static_cast<double>(cumulative) /
                                              static_cast<double>(stats.trials));
  }
  return stats;
}

OscillationResult detect_oscillation(const ReflectionTranscript& transcript) {
  std::map<std::string, std::size_t> first_seen;
  for (const auto& round : transcript.rounds) {
    const std::string d = round.digest.empty() ? output_digest(round.output) : round.digest;
    auto [it, inserted] = first_seen.emplace(d, round.t);
    if (!inserted) return OscillationResult{true, it->second, round.t};
  }
  return {};
}

std::string_view to_string(AssumptionStatus status) {
  switch (status) {
    case AssumptionStatus::Holds: return "holds";
    case AssumptionStatus::Violated: return "violated";
    case AssumptionStatus::NotCheckable: return "not checkable";
  }
  return "not checkable";
}

bool AssumptionReport::all_hold() const {
  return candidate_exists == AssumptionStatus::Holds && improves == AssumptionStatus::Holds &&
         full_support == AssumptionStatus::Holds;
}

}  // namespace vigil
