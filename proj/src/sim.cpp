#include "vigil/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>
#include <thread>

#include "vigil/rng.hpp"

namespace vigil {

std::string_view to_string(SimOp op) { return op == SimOp::Add ? "add" : "mul"; }

SimOp sim_op_from_string(std::string_view text) {
  if (text == "add") return SimOp::Add;
  if (text == "mul") return SimOp::Mul;
  throw Error("unknown sim operation: " + std::string(text));
}

std::string_view to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::ValueScale: return "value-scale";
    case PerturbationKind::DigitFlip: return "digit-flip";
    case PerturbationKind::FormatCorrupt: return "format-corrupt";
    case PerturbationKind::Omission: return "omission";
  }
  return "value-scale";
}

PerturbationKind perturbation_kind_from_string(std::string_view text) {
  if (text == "value-scale") return PerturbationKind::ValueScale;
  if (text == "digit-flip") return PerturbationKind::DigitFlip;
  if (text == "format-corrupt") return PerturbationKind::FormatCorrupt;
  if (text == "omission") return PerturbationKind::Omission;
  throw Error("unknown perturbation kind: " + std::string(text));
}

namespace {

double apply_op(const SimNodeSpec& node, double input) {
  return node.op == SimOp::Add ? input + node.constant : input * node.constant;
}

bool same_value(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

std::optional<double> text_value(const std::string& content) {
  if (content.rfind("value=", 0) != 0) return std::nullopt;
  const char* begin = content.c_str() + 6;
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) return std::nullopt;
  return v;
}

void sleep_ms(double ms) {
  if (ms > 0.0) std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(ms));
}

}  // namespace

const SimNodeSpec& SimTaskSpec::node(const NodeId& id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw Error("sim task has no node " + id);
  return it->second;
}

double SimTaskSpec::ground_truth(const NodeId& id) const {
  std::map<NodeId, double> memo;
  std::set<NodeId> visiting;
  std::function<double(const NodeId&)> eval = [&](const NodeId& n) -> double {
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    if (!visiting.insert(n).second) throw Error("sim task has a cycle through " + n);
    const auto& spec = node(n);
    double in = 0.0;
    auto p = parents.find(n);
    if (p == parents.end() || p->second.empty())
      in = input_value;
    else
      for (const auto& parent : p->second) in += eval(parent);
    visiting.erase(n);
    return memo[n] = apply_op(spec, in);
  };
  return eval(id);
}

SimTaskSpec SimTaskSpec::chain(std::size_t n, SimNodeSpec node, double input_value) {
  SimTaskSpec spec;
  spec.input_value = input_value;
  for (std::size_t i = 1; i <= n; ++i) {
    const NodeId id = "n" + std::to_string(i);
    spec.nodes[id] = node;
    spec.parents[id] = i == 1 ? std::vector<NodeId>{} : std::vector<NodeId>{"n" + std::to_string(i - 1)};
  }
  return spec;
}

WorkflowGraph SimTaskSpec::graph(const std::string& backend) const {
  WorkflowGraph g;
  for (const auto& [id, _] : nodes) {
    NodeSpec spec;
    spec.id = id;
    spec.backend = backend;
    auto p = parents.find(id);
    if (p == parents.end() || p->second.empty()) {
      spec.prompt_template = "Compute from {input}.";
    } else {
      spec.prompt_template = "Compute from";
      for (const auto& parent : p->second) spec.prompt_template += " {" + parent + "}";
      spec.prompt_template += ".";
    }
    spec.role = "arithmetic";
    g.add_node(spec);
  }
  for (const auto& [id, ps] : parents)
    for (const auto& parent : ps) g.add_edge(parent, id);
  return g;
}

std::string sim_content(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "value=%.17g", value);
  return buffer;
}

Payload sim_payload(double value) {
  Payload p;
  p.content = sim_content(value);
  p.structured["value"] = value;
  return p;
}

double payload_value(const Payload& payload) {
  if (auto v = payload.field("value")) return *v;
  if (auto v = text_value(payload.content)) return *v;
  return 0.0;
}

namespace {

Payload perturb(const SimNodeSpec& node, double clean, std::size_t variant) {
  const double j = static_cast<double>(variant);
  Payload out;
  switch (node.error.kind) {
    case PerturbationKind::ValueScale: {
      const double v = clean * (1.0 + node.error.magnitude * (1.0 + 0.5 * j));
      out = sim_payload(v == clean ? clean + 1.0 + j : v);
      break;
    }
    case PerturbationKind::DigitFlip: {
      const auto units = static_cast<long long>(std::floor(std::abs(clean))) % 10;
      long long flipped = (9 - units + static_cast<long long>(variant)) % 10;
      if (flipped == units) flipped = (flipped + 1) % 10;
      out.content = sim_content(clean);
      out.structured["value"] = clean + (clean < 0 ? -1.0 : 1.0) * static_cast<double>(flipped - units);
      break;
    }
    case PerturbationKind::FormatCorrupt: {
      char buffer[64];
      std::snprintf(buffer, sizeof buffer, "VALUE: %.17g", clean);
      out.content = std::string(buffer) + std::string(variant, ' ');
      out.structured["value"] = clean;
      break;
    }
    case PerturbationKind::Omission:
      out.content = sim_content(clean) + std::string(variant, ' ');
      break;
  }
  return out;
}

}  // namespace

SimOutput sim_generate(const SimTaskSpec& spec, const NodeId& node,
                       const std::vector<Payload>& inputs, std::uint64_t seed,
                       const PerturbationDirective& perturbation) {
  const SimNodeSpec& n = spec.node(node);
  double in = 0.0;
  for (const auto& p : inputs) in += payload_value(p);
  const double clean = apply_op(n, in);
  const double draw = Rng(derive_seed(seed, node, perturbation.seed_offset)).uniform();

  SimOutput result;
  result.injected = draw < n.error.probability;
  if (result.injected) {
    constexpr std::size_t kMaxVariants = 64;
    std::size_t variant = 0;
    result.output = perturb(n, clean, variant);
    while (perturbation.avoids(output_digest(result.output)) && variant < kMaxVariants)
      result.output = perturb(n, clean, ++variant);
  } else {
    result.output = sim_payload(clean);
  }

  std::ostringstream trace;
  trace << "node=" << node << " op=" << to_string(n.op) << " constant=" << n.constant
        << " input=" << in << " clean=" << clean << " draw=" << draw
        << " injected=" << (result.injected ? to_string(n.error.kind) : "none");
  result.reasoning_trace = trace.str();
  return result;
}

namespace {

struct OracleFindings {
  DimensionScores scores;
  std::vector<std::string> clauses;
  bool missing = false;
  bool mismatch = false;
};

OracleFindings oracle_findings(const SimTaskSpec& spec, const NodeId& node, const Payload& output) {
  OracleFindings f;
  const double truth = spec.ground_truth(node);
  const auto field = output.field("value");
  const auto text = text_value(output.content);

  if (field && text && !same_value(*field, *text)) {
    f.scores.logical_consistency = 0.0;
    std::ostringstream s;
    s << "logical inconsistency: text reports " << *text << " but field reports " << *field;
    f.clauses.push_back(s.str());
  }
  const bool canonical = text && output.content == sim_content(*text);
  if (!canonical) {
    f.scores.format_compliance = 0.0;
    f.clauses.push_back("format violation: content '" + output.content.substr(0, 40) +
                        "' is not of the form value=<number>");
  }
  if (!field) {
    f.missing = true;
    f.scores.content_completeness = 0.0;
    f.clauses.push_back("missing field: structured value absent");
  } else if (!same_value(*field, truth)) {
    f.mismatch = true;
    f.scores.content_completeness = 0.0;
    std::ostringstream s;
    s << "content mismatch: expected " << truth << " got " << *field;
    f.clauses.push_back(s.str());
  }
  return f;
}

std::string join_clauses(const std::vector<std::string>& clauses) {
  if (clauses.empty()) return "ok";
  std::string out;
  for (const auto& c : clauses) out += (out.empty() ? "" : "; ") + c;
  return out;
}

bool clean_scores(const DimensionScores& s) {
  return s.logical_consistency == 1.0 && s.format_compliance == 1.0 &&
         s.content_completeness == 1.0;
}

}  // namespace

JudgeResult oracle_judge(const SimTaskSpec& spec, const NodeId& node, const Payload& output) {
  auto f = oracle_findings(spec, node, output);
  return JudgeResult{f.scores, join_clauses(f.clauses)};
}

SimAgentBackend::SimAgentBackend(std::shared_ptr<const SimTaskSpec> spec, bool sleep)
    : spec_(std::move(spec)), sleep_(sleep) {}

GenerateResult SimAgentBackend::generate(const GenerateRequest& request) {
  const auto& node = spec_->node(request.node);
  auto p = spec_->parents.find(request.node);
  const bool source = p == spec_->parents.end() || p->second.empty();
  const std::vector<Payload> inputs = source ? std::vector<Payload>{request.input} : request.upstream;
  if (sleep_) sleep_ms(node.latency_ms);
  auto out = sim_generate(*spec_, request.node, inputs, request.seed, request.perturbation);
  std::string trace = out.reasoning_trace;
  if (request.reflection) trace += " reflection=1";
  if (!request.missing_inputs.empty()) trace += " missing_inputs=" + std::to_string(request.missing_inputs.size());
  return GenerateResult{std::move(out.output), std::move(trace)};
}

OracleMonitor::OracleMonitor(std::shared_ptr<const SimTaskSpec> spec, double latency_ms)
    : spec_(std::move(spec)), latency_ms_(latency_ms) {}

JudgeResult OracleMonitor::judge(const Payload& output, const AssessmentContext& context,
                                 std::uint64_t) {
  sleep_ms(latency_ms_);
  return oracle_judge(*spec_, context.key.node, output);
}

StochasticMonitor::StochasticMonitor(std::shared_ptr<const SimTaskSpec> spec, double sensitivity,
                                     double false_positive, double latency_ms)
    : spec_(std::move(spec)),
      sensitivity_(sensitivity),
      false_positive_(false_positive),
      latency_ms_(latency_ms) {
  if (!(sensitivity >= 0.0 && sensitivity <= 1.0) ||
      !(false_positive >= 0.0 && false_positive <= 1.0))
    throw Error("sensitivity and false-positive rate must lie in [0, 1]");
}

JudgeResult StochasticMonitor::judge(const Payload& output, const AssessmentContext& context,
                                     std::uint64_t seed) {
  sleep_ms(latency_ms_);
  JudgeResult truth = oracle_judge(*spec_, context.key.node, output);
  const double draw = Rng(derive_seed(seed, context.key.to_string())).uniform();
  if (!clean_scores(truth.scores)) {
    if (draw < sensitivity_) return truth;
    return JudgeResult{DimensionScores{}, "ok"};
  }
  if (draw < false_positive_) {
    DimensionScores flagged;
    flagged.content_completeness = 0.0;
    return JudgeResult{flagged, "content mismatch: value judged implausible"};
  }
  return truth;
}

BiasedMonitor::BiasedMonitor(std::shared_ptr<const SimTaskSpec> spec, double latency_ms)
    : spec_(std::move(spec)), latency_ms_(latency_ms) {}

JudgeResult BiasedMonitor::judge(const Payload& output, const AssessmentContext& context,
                                 std::uint64_t) {
  sleep_ms(latency_ms_);
  auto f = oracle_findings(*spec_, context.key.node, output);
  if (f.mismatch) {
    f.scores.content_completeness = 1.0;
    f.clauses.erase(std::remove_if(f.clauses.begin(), f.clauses.end(),
                                   [](const std::string& c) {
                                     return c.rfind("content mismatch", 0) == 0;
                                   }),
                    f.clauses.end());
  }
  return JudgeResult{f.scores, join_clauses(f.clauses)};
}

double SimActSpec::pi(std::size_t round) const {
  if (frozen) return pi1;
  const double p = pi1 + static_cast<double>(round - 1) * delta;
  return p >= 1.0 - 1e-12 ? 1.0 : std::max(0.0, p);
}

Payload SimActModel::act(const ComposedContext&, std::size_t round, std::uint64_t seed,
                         bool reflect) {
  if (reflect) ++reflections_;
  std::vector<std::string> good, bad;
  for (const auto& s : spec_.support) {
    if (std::find(spec_.accepted.begin(), spec_.accepted.end(), s) != spec_.accepted.end())
      good.push_back(s);
    else
      bad.push_back(s);
  }
  Rng rng(derive_seed(seed, "act", round));
  const double draw = rng.uniform();
  const std::uint64_t pick = rng.next();
  const bool accept = draw < spec_.pi(round);
  const auto& pool = (accept && !good.empty()) || bad.empty() ? good : bad;
  Payload out;
  out.content = pool.empty() ? std::string() : pool[pick % pool.size()];
  return out;
}

std::optional<Feedback> SimActReviewer::review(const Payload& output, const ComposedContext&,
                                               std::size_t round, std::uint64_t) {
  if (std::find(spec_.accepted.begin(), spec_.accepted.end(), output.content) !=
      spec_.accepted.end())
    return std::nullopt;
  Feedback f;
  f.error_type = ErrorCategory::Content;
  f.diagnostic_rationale = "content mismatch: candidate '" + output.content +
                           "' is outside the accepted set";
  f.contextual_trace.push_back(
      TraceReference{SnapshotKey{node_, Epoch{}, static_cast<std::uint32_t>(round - 1)},
                     output.content});
  return f;
}

AssumptionReport check_assumptions(const SimActSpec& spec) {
  AssumptionReport report;
  report.candidate_exists = spec.accepted.empty() ? AssumptionStatus::Violated : AssumptionStatus::Holds;
  if (report.candidate_exists == AssumptionStatus::Violated) report.notes.push_back("accepted set is empty");

  const bool improves = !spec.frozen && spec.delta > 0.0;
  report.improves = improves || spec.pi1 >= 1.0 ? AssumptionStatus::Holds : AssumptionStatus::Violated;
  if (report.improves == AssumptionStatus::Violated)
    report.notes.push_back("acceptance probability does not increase after a rejection");

  bool covered = !spec.accepted.empty();
  for (const auto& a : spec.accepted)
    if (std::find(spec.support.begin(), spec.support.end(), a) == spec.support.end()) {
      covered = false;
      report.notes.push_back("accepted output '" + a + "' lies outside the sampling support");
    }
  if (spec.pi1 <= 0.0) {
    covered = false;
    report.notes.push_back("accepted outputs have zero probability in round 1");
  }
  report.full_support = covered ? AssumptionStatus::Holds : AssumptionStatus::Violated;
  return report;
}

AssumptionReport check_assumptions(const ReflectionActor& actor) {
  if (auto sim = dynamic_cast<const SimActModel*>(&actor)) return check_assumptions(sim->spec());
  AssumptionReport report;
  report.notes.push_back("actor is not inspectable");
  return report;
}

}  // namespace vigil
