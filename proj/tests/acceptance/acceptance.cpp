#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "properties.hpp"
#include "vigil/suites.hpp"

using namespace vigil;

namespace {

struct Criterion {
  int id;
  std::string label;
  double limit_s;  // 0 when unbounded
  std::function<std::pair<bool, std::string>()> run;
};

std::string describe(const MetricsReport& report) {
  std::ostringstream out;
  bool first = true;
  for (const auto& c : report.checks) {
    out << (first ? "" : "; ") << (c.passed ? "" : "FAILED ") << c.name << " = " << c.value
        << " (bound " << c.bound << ")";
    first = false;
  }
  return out.str();
}

std::pair<bool, std::string> suite(const std::string& name, SuiteParams params = {}) {
  const MetricsReport report = run_suite(name, params);
  return {report.passed(), describe(report)};
}

std::pair<bool, std::string> core_properties() {
  constexpr std::size_t cases = 1000;
  const auto runs = properties::monitored_runs(cases, 17);
  const std::vector<properties::Outcome> all{properties::snapshot_round_trip(cases, 11),
                                             runs.stale,
                                             runs.epochs,
                                             runs.replay,
                                             runs.budget,
                                             properties::bounded_reflection_context(cases, 23)};
  bool ok = true;
  std::ostringstream out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& o = all[i];
    const bool pass = o.passed() && o.cases >= cases;
    ok &= pass;
    out << (i ? "; " : "") << (pass ? "" : "FAILED ") << o.name << " " << o.failures << "/" << o.cases;
  }
  return {ok, out.str()};
}

}  // namespace

int main() {
  SuiteParams propagation;
  propagation.n = 10;
  propagation.eps = 0.05;
  propagation.trials = 1000;

  const std::vector<Criterion> criteria{
      {1, "error propagation", 30.0, [&] { return suite("propagation", propagation); }},
      {2, "reflection convergence", 10.0, [] { return suite("convergence"); }},
      {3, "constant per-node overhead", 60.0, [] { return suite("overhead"); }},
      {4, "amortized retries", 0.0, [] { return suite("amortized"); }},
      {5, "retention optimizer matches enumeration", 30.0, [] { return suite("retention"); }},
      {6, "ensemble blind spot", 0.0, [] { return suite("hcv-blindspot"); }},
      {7, "core properties", 0.0, core_properties},
      {8, "snapshot memory", 0.0, [] { return suite("memory"); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::pair<bool, std::string> result;
    try {
      result = c.run();
    } catch (const std::exception& e) {
      result = {false, std::string("error: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = result.first;
    std::string timing = std::to_string(elapsed).substr(0, 5) + " s";
    if (c.limit_s > 0) {
      const bool in_time = elapsed < c.limit_s;
      pass &= in_time;
      timing += in_time ? " < " : " EXCEEDS ";
      timing += std::to_string(static_cast<int>(c.limit_s)) + " s";
    }
    failed += pass ? 0 : 1;
    std::cout << "criterion " << c.id << " " << (pass ? "PASS" : "FAIL") << " " << c.label << " ["
              << timing << "] " << result.second << std::endl;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
