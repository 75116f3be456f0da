#include <doctest.h>

#include <cmath>

#include "vigil/reflection.hpp"
#include "vigil/rng.hpp"
#include "vigil/sim.hpp"
#include "vigil/suites.hpp"

using namespace vigil;

namespace {

Payload text(const std::string& s) {
  Payload p;
  p.content = s;
  return p;
}

Feedback feedback(const std::string& why, std::size_t round = 1) {
  return Feedback{ErrorCategory::Content, why,
                  {TraceReference{SnapshotKey{"brp", {}, static_cast<std::uint32_t>(round)}, "excerpt"}}};
}

class ScriptActor final : public ReflectionActor {
 public:
  explicit ScriptActor(std::vector<std::string> outputs, int throw_at = 0)
      : outputs_(std::move(outputs)), throw_at_(throw_at) {}
  Payload act(const ComposedContext&, std::size_t round, std::uint64_t, bool reflect) override {
    if (static_cast<int>(round) == throw_at_) throw Error("actor crashed");
    flags.push_back(reflect);
    return text(outputs_.at(std::min(round, outputs_.size()) - 1));
  }
  std::vector<bool> flags;

 private:
  std::vector<std::string> outputs_;
  int throw_at_;
};

class AcceptReviewer final : public ReflectionReviewer {
 public:
  explicit AcceptReviewer(std::string good) : good_(std::move(good)) {}
  std::optional<Feedback> review(const Payload& output, const ComposedContext&, std::size_t round,
                                 std::uint64_t) override {
    if (output.content == good_) return std::nullopt;
    return feedback("content: '" + output.content + "' is wrong", round);
  }

 private:
  std::string good_;
};

std::vector<ReflectionTranscript> sim_trials(const SimActSpec& spec, std::size_t trials,
                                             std::size_t max_rounds, std::size_t window = 4) {
  std::vector<ReflectionTranscript> out;
  for (std::size_t i = 0; i < trials; ++i) {
    SimActModel actor(spec);
    SimActReviewer reviewer(spec);
    out.push_back(run_brp("task", actor, reviewer, max_rounds, window, trial_seed(7, i)).transcript);
  }
  return out;
}

}  // namespace

TEST_CASE("feedback needs a failure category, a rationale and a trace") {
  CHECK_NOTHROW(feedback("why").validate());
  auto empty = feedback("");
  CHECK_THROWS_AS(empty.validate(), Error);
  auto no_trace = feedback("why");
  no_trace.contextual_trace.clear();
  CHECK_THROWS_AS(no_trace.validate(), Error);
  auto none = feedback("why");
  none.error_type = ErrorCategory::None;
  CHECK_THROWS_AS(none.validate(), Error);
  CHECK_THROWS_AS(compose_context(ComposedContext{}, text("y"), empty, 4), Error);
}

TEST_CASE("context composition keeps the last window pairs in order") {
  ComposedContext c;
  c.task = "task";
  for (int t = 1; t <= 3; ++t) c = compose_context(c, text("y" + std::to_string(t)), feedback("r" + std::to_string(t)), 1);
  REQUIRE(c.pairs.size() == 1);
  CHECK(c.pairs[0].output.content == "y3");
  CHECK(c.rejections == 3);
  CHECK(c.render().find("round 3") != std::string::npos);

  ComposedContext d;
  for (int t = 1; t <= 2; ++t) d = compose_context(d, text("y" + std::to_string(t)), feedback("r" + std::to_string(t)), 4);
  REQUIRE(d.pairs.size() == 2);
  CHECK(d.pairs[0].output.content == "y1");
  CHECK(d.pairs[1].output.content == "y2");
  CHECK(d.pairs[1].feedback.diagnostic_rationale == "r2");
  CHECK_THROWS_AS(compose_context(d, text("z"), feedback("r"), 0), Error);
}

TEST_CASE("negotiation ends at the first accept") {
  ScriptActor first({"good"});
  AcceptReviewer reviewer("good");
  auto r = run_brp("task", first, reviewer, 5, 4, 1);
  REQUIRE(r.accepted);
  CHECK(r.transcript.terminated);
  CHECK(r.transcript.rounds_used == 1);
  CHECK_FALSE(r.transcript.rounds[0].feedback);
  CHECK(first.flags == std::vector<bool>{false});

  ScriptActor third({"bad1", "bad2", "good"});
  auto r3 = run_brp("task", third, reviewer, 5, 4, 1);
  CHECK(r3.transcript.rounds_used == 3);
  CHECK(third.flags == std::vector<bool>{false, true, true});
  CHECK(r3.transcript.rounds[2].context.pairs.size() == 2);
  CHECK(r3.transcript.rounds[2].context.pairs[1].output.content == "bad2");
}

TEST_CASE("exhausted rounds escalate and a crashing actor keeps the partial transcript") {
  ScriptActor never({"bad"});
  AcceptReviewer reviewer("good");
  auto r = run_brp("task", never, reviewer, 3, 4, 1);
  CHECK_FALSE(r.accepted);
  CHECK(r.escalated);
  CHECK(r.transcript.rounds.size() == 3);

  ScriptActor crash({"bad"}, 2);
  auto c = run_brp("task", crash, reviewer, 5, 4, 1);
  CHECK(c.escalated);
  CHECK(c.transcript.rounds.size() >= 1);
  CHECK_FALSE(c.transcript.failure.empty());
  CHECK_THROWS_AS(run_brp("task", crash, reviewer, 0, 4, 1), Error);
}

TEST_CASE("the improving sim actor always terminates by round 9") {
  SimActSpec spec;
  auto transcripts = sim_trials(spec, 1000, 12);
  for (const auto& t : transcripts) {
    CHECK(t.terminated);
    CHECK(t.rounds_used <= 9);
  }
  auto stats = estimate_pi(transcripts);
  REQUIRE(stats.termination_rate_by_round.size() <= 9);
  CHECK(stats.termination_rate_by_round.back() == 1.0);
  for (std::size_t t = 1; t <= stats.pi_hat.size(); ++t) {
    if (!stats.pi_hat[t - 1]) continue;
    const double pi = spec.pi(t);
    auto [lo, hi] = wilson_interval(stats.accepted[t - 1], stats.reached[t - 1]);
    CHECK((std::abs(*stats.pi_hat[t - 1] - pi) <= 0.05 || (lo <= pi && pi <= hi)));
  }
}

TEST_CASE("the frozen sim actor escalates after every round budget") {
  SimActSpec spec;
  spec.pi1 = 0.0;
  spec.frozen = true;
  for (const auto& t : sim_trials(spec, 200, 5)) {
    CHECK(t.escalated);
    CHECK(t.rounds.size() == 5);
  }
}

TEST_CASE("estimates of the acceptance rate per round") {
  SimActSpec always;
  always.pi1 = 1.0;
  auto s1 = estimate_pi(sim_trials(always, 10, 5));
  CHECK(s1.pi_hat.at(0) == 1.0);
  CHECK(s1.pi_hat.size() == 1);

  ScriptActor bad({"bad"});
  AcceptReviewer reviewer("good");
  auto single = estimate_pi({run_brp("t", bad, reviewer, 1, 1, 0).transcript});
  CHECK(single.pi_hat.at(0) == 0.0);
  CHECK_THROWS_AS(estimate_pi({}), Error);
}

TEST_CASE("empirical convergence follows the closed-form deadline") {
  Rng rng(5);
  for (int model = 0; model < 5; ++model) {
    SimActSpec spec;
    spec.pi1 = 0.05 + 0.5 * rng.uniform();
    spec.delta = 0.05 + 0.3 * rng.uniform();
    const auto deadline = static_cast<std::size_t>(std::ceil((1.0 - spec.pi1) / spec.delta)) + 1;
    for (const auto& t : sim_trials(spec, 1000, deadline + 2)) CHECK(t.rounds_used <= deadline);
  }
}

TEST_CASE("oscillation is detected by digest only") {
  ReflectionTranscript t;
  for (std::size_t i = 1; i <= 4; ++i) {
    RoundState r;
    r.t = i;
    r.output = text(i == 4 ? "y2" : "y" + std::to_string(i));
    t.rounds.push_back(r);
  }
  auto found = detect_oscillation(t);
  CHECK(found.found);
  CHECK(found.first == 2);
  CHECK(found.second == 4);

  t.rounds[3].output = text("y4");
  CHECK_FALSE(detect_oscillation(t).found);
  t.rounds[3].output = text("y2 ");
  CHECK_FALSE(detect_oscillation(t).found);
}

TEST_CASE("assumption checks inspect the sim actor") {
  CHECK(check_assumptions(SimActSpec{}).all_hold());
  SimActSpec frozen;
  frozen.frozen = true;
  CHECK(check_assumptions(frozen).improves == AssumptionStatus::Violated);
  SimActSpec outside;
  outside.accepted = {"z"};
  CHECK(check_assumptions(outside).full_support == AssumptionStatus::Violated);
  ScriptActor opaque({"x"});
  auto report = check_assumptions(opaque);
  CHECK(report.candidate_exists == AssumptionStatus::NotCheckable);
  CHECK(report.improves == AssumptionStatus::NotCheckable);
  CHECK(report.full_support == AssumptionStatus::NotCheckable);
}

TEST_CASE("transcripts survive a JSON round trip") {
  ScriptActor actor({"bad1", "good"});
  AcceptReviewer reviewer("good");
  auto t = run_brp("task", actor, reviewer, 5, 2, 3).transcript;
  json j = t;
  CHECK(j.get<ReflectionTranscript>() == t);
}
