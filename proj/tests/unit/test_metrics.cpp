#include <doctest.h>

#include <sstream>

#include "vigil/metrics.hpp"
#include "vigil/suites.hpp"

using namespace vigil;

namespace {

MetricsRow row(const std::string& task, std::uint64_t seed, bool monitored, double score, double latency) {
  MetricsRow r;
  r.task = task;
  r.seed = seed;
  r.monitored = monitored;
  r.score = score;
  r.latency_s = latency;
  return r;
}

}  // namespace

TEST_CASE("rows pair on task and seed") {
  std::vector<MetricsRow> rows{row("t", 1, false, 0.5, 2.0), row("t", 1, true, 0.75, 2.5),
                               row("t", 2, true, 1.0, 1.0), row("u", 1, false, 0.0, 1.0)};
  auto pairs = pair_rows(rows);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].task == "t");
  CHECK(*pairs[0].overhead_pct == doctest::Approx(25.0));
  CHECK(*pairs[0].improvement_pct == doctest::Approx(25.0));

  rows[0].latency_s.reset();
  pairs = pair_rows(rows);
  CHECK_FALSE(pairs[0].overhead_pct);
  CHECK(pairs[0].improvement_pct);
}

TEST_CASE("metrics files round trip") {
  MetricsReport report;
  report.suite = "demo";
  report.params = {{"n", 3}};
  report.rows = {row("t", 1, false, 0.5, 2.0), row("t", 1, true, 0.75, 2.5)};
  report.rows[1].extra = {{"rounds", 2}};
  report.rows[1].corrections = 4;
  report.rows[1].degraded = true;
  report.checks = {CheckResult{"bound", true, 0.1, 0.2, "ok"}};
  report.summary = {{"k", 1.5}};
  std::stringstream buffer;
  write_metrics(report, buffer, "2026-01-01T00:00:00Z");
  const std::string text = buffer.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  auto back = read_metrics(buffer);
  CHECK(back.suite == "demo");
  CHECK(back.params == report.params);
  CHECK(back.rows == report.rows);
  CHECK(back.checks == report.checks);
  CHECK(back.summary == report.summary);
  CHECK(back.passed());

  std::stringstream again;
  write_metrics(back, again, "2026-01-01T00:00:00Z");
  CHECK(again.str() == text);

  std::stringstream junk("{not json\n");
  CHECK_THROWS_AS(read_metrics(junk), Error);
}

TEST_CASE("aggregates and renderers") {
  MetricsReport report;
  report.suite = "demo";
  report.rows = {row("t", 1, false, 0.5, 2.0), row("t", 1, true, 1.0, 3.0)};
  auto agg = report.aggregate();
  CHECK(agg.rows == 2);
  CHECK(agg.pairs == 1);
  CHECK(*agg.mean_score == doctest::Approx(0.75));
  CHECK(*agg.overhead_pct == doctest::Approx(50.0));
  CHECK(*agg.improvement_pct == doctest::Approx(50.0));

  report.checks = {CheckResult{"bound", false, 1, 0.5, ""}};
  CHECK_FALSE(report.passed());
  const auto md = render_markdown({report});
  CHECK(md.find("Overhead %") != std::string::npos);
  CHECK(md.find("FAIL") != std::string::npos);
  const auto csv = render_csv({report});
  CHECK(csv.find("overhead") != std::string::npos);
  CHECK(csv.find("demo") != std::string::npos);
}

TEST_CASE("suite reports are reproducible under a fixed seed") {
  SuiteParams params;
  params.n = 6;
  params.eps = 0.1;
  params.trials = 200;
  params.seed = 3;
  params.jobs = 2;
  for (const char* suite : {"propagation", "hcv-blindspot"}) {
    std::stringstream a, b;
    write_metrics(run_suite(suite, params), a, "fixed");
    params.jobs = 1;
    write_metrics(run_suite(suite, params), b, "fixed");
    params.jobs = 2;
    CHECK_MESSAGE(a.str() == b.str(), suite);
  }
  CHECK_THROWS_AS(run_suite("nonexistent", params), Error);
}

TEST_CASE("interval helpers") {
  auto [lo, hi] = wilson_interval(50, 100);
  CHECK(lo == doctest::Approx(0.4038).epsilon(1e-3));
  CHECK(hi == doctest::Approx(0.5962).epsilon(1e-3));
  auto [zlo, zhi] = wilson_interval(0, 10);
  CHECK(zlo == doctest::Approx(0.0));
  CHECK(zhi == doctest::Approx(0.2775).epsilon(1e-3));
  CHECK(student_t_975(1) == doctest::Approx(12.706).epsilon(1e-3));
  CHECK(student_t_975(10) == doctest::Approx(2.228).epsilon(1e-3));
  CHECK(student_t_975(1e6) == doctest::Approx(1.960).epsilon(1e-3));
  auto fit = fit_line({1, 2, 3, 4}, {3, 5, 7, 9});
  CHECK(fit.slope == doctest::Approx(2.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.slope_se == doctest::Approx(0.0));
  CHECK_THROWS(fit_line({1, 1, 1}, {1, 2, 3}));
}
