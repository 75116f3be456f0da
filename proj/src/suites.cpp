#include "vigil/suites.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <thread>
#include <unistd.h>

#include "vigil/cross_validation.hpp"
#include "vigil/error_model.hpp"
#include "vigil/executor.hpp"
#include "vigil/reflection.hpp"
#include "vigil/retention.hpp"
#include "vigil/rng.hpp"
#include "vigil/sim.hpp"
#include "vigil/snapshot_store.hpp"

namespace vigil {

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"propagation", "convergence", "overhead",  "amortized",
                                              "hcv-blindspot", "retention", "memory"};
  return names;
}

MetricsReport run_suite(const std::string& name, const SuiteParams& params) {
  if (name == "propagation") return propagation_suite(params);
  if (name == "convergence") return convergence_suite(params);
  if (name == "overhead") return overhead_suite(params);
  if (name == "amortized") return amortized_suite(params);
  if (name == "hcv-blindspot") return hcv_blindspot_suite(params);
  if (name == "retention") return retention_suite(params);
  if (name == "memory") return memory_suite(params);
  throw Error("unknown suite '" + name + "'");
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double student_t_975(double dof) {
  if (!(dof >= 1.0)) throw Error("t quantile needs at least one degree of freedom");
  if (dof == 1.0) return 12.706204736174707;
  if (dof == 2.0) return 4.302652729749464;
  // Cornish-Fisher expansion around the normal quantile.
  const double z = 1.959963984540054;
  const double z2 = z * z, z3 = z2 * z, z5 = z3 * z2, z7 = z5 * z2, z9 = z7 * z2;
  const double g1 = (z3 + z) / 4.0;
  const double g2 = (5 * z5 + 16 * z3 + 3 * z) / 96.0;
  const double g3 = (3 * z7 + 19 * z5 + 17 * z3 - 15 * z) / 384.0;
  const double g4 = (79 * z9 + 776 * z7 + 1482 * z5 - 1920 * z3 - 945 * z) / 92160.0;
  return z + g1 / dof + g2 / (dof * dof) + g3 / std::pow(dof, 3) + g4 / std::pow(dof, 4);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) throw Error("line fit needs at least three points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error("line fit needs distinct x values");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    sse += r * r;
  }
  fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
  const double t = student_t_975(n - 2.0);
  fit.slope_lo = fit.slope - t * fit.slope_se;
  fit.slope_hi = fit.slope + t * fit.slope_se;
  return fit;
}

double brute_force_retention_cost(const std::vector<double>& costs,
                                  const std::vector<double>& probabilities, std::size_t budget,
                                  const std::vector<bool>& frontier) {
  const std::size_t n = costs.size();
  if (n > 20) throw Error("exhaustive retention search is limited to 20 nodes");
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) > budget) continue;
    bool covers = true;
    for (std::size_t i = 0; i < n && covers; ++i)
      if (frontier[i] && !(mask & (1u << i))) covers = false;
    if (!covers) continue;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t start = 0;
      for (std::size_t j = i + 1; j-- > 0;)
        if (mask & (1u << j)) {
          start = j;
          break;
        }
      double replay = 0.0;
      for (std::size_t k = start; k <= i; ++k) replay += costs[k];
      total += probabilities[i] * replay;
    }
    best = std::min(best, total);
  }
  return best;
}

namespace {

std::size_t param(const std::optional<std::size_t>& v, std::size_t fallback, std::size_t lo,
                  std::size_t hi, const char* name) {
  const std::size_t value = v.value_or(fallback);
  if (value < lo || value > hi)
    throw Error(std::string(name) + " must lie in [" + std::to_string(lo) + ", " +
                std::to_string(hi) + "], got " + std::to_string(value));
  return value;
}

double extra_number(const SuiteParams& p, const char* key, double fallback, double lo, double hi) {
  double value = fallback;
  if (p.extra.contains(key)) {
    if (!p.extra[key].is_number()) throw Error(std::string(key) + " must be a number");
    value = p.extra[key].get<double>();
  }
  if (!(value >= lo && value <= hi))
    throw Error(std::string(key) + " must lie in [" + std::to_string(lo) + ", " +
                std::to_string(hi) + "]");
  return value;
}

std::size_t worker_count(const SuiteParams& p, std::size_t trials) {
  std::size_t jobs = p.jobs ? p.jobs : std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(jobs, trials));
}

/// Runs fn(trial, executor) for every trial on `jobs` threads, each with its
/// own executor. Results land by index, so order never depends on timing.
template <typename Result>
std::vector<Result> run_trials(std::size_t trials, std::size_t jobs, const BackendRegistry& backends,
                               const std::function<Result(std::size_t, Executor&)>& fn) {
  std::vector<Result> results(trials);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    Executor executor(backends, ExecutorOptions{2, 1, 0});
    for (std::size_t i; (i = next.fetch_add(1)) < trials;) {
      try {
        results[i] = fn(i, executor);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = trials;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t j = 1; j < jobs; ++j) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return results;
}

void monitor_all(WorkflowGraph& graph, const std::string& backend, std::uint32_t budget) {
  for (auto& [id, node] : graph.nodes) {
    (void)id;
    MonitorConfig m;
    m.backend = backend;
    m.max_corrections = budget;
    node.monitor = m;
  }
}

double relative_error(const Payload& output, double truth) {
  return std::abs(payload_value(output) - truth) / std::max(std::abs(truth), 1e-300);
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

CheckResult check_at_most(std::string name, double value, double bound, std::string detail = {}) {
  return CheckResult{std::move(name), value <= bound, value, bound, std::move(detail)};
}

}  // namespace

MetricsReport propagation_suite(const SuiteParams& p) {
  const std::size_t n = param(p.n, 10, 1, 64, "n");
  const std::size_t trials = param(p.trials, 1000, 1, 1000000, "trials");
  const double eps = p.eps.value_or(0.05);
  const double magnitude = extra_number(p, "magnitude", 0.25, 1e-6, 10.0);
  const double budget = extra_number(p, "budget", 3, 0, 32);
  if (!(eps > 0.0 && eps <= magnitude))
    throw Error("eps must lie in (0, magnitude]; got " + std::to_string(eps));
  const double probability = eps / magnitude;

  SimNodeSpec node{SimOp::Mul, 1.0, SimErrorModel{probability, PerturbationKind::ValueScale, magnitude}, 0.0};
  auto spec = std::make_shared<const SimTaskSpec>(SimTaskSpec::chain(n, node, 1.0));
  const NodeId last = "n" + std::to_string(n);
  const double truth = spec->ground_truth(last);
  BackendRegistry backends;
  backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  backends.add_monitor("oracle", std::make_shared<OracleMonitor>(spec));
  const WorkflowGraph plain = spec->graph("sim");
  WorkflowGraph monitored = plain;
  monitor_all(monitored, "oracle", static_cast<std::uint32_t>(budget));

  struct Trial {
    ExecutionRecord baseline, checked;
  };
  const auto results = run_trials<Trial>(
      trials, worker_count(p, trials), backends, [&](std::size_t i, Executor& executor) {
        RunConfig config;
        config.seed = trial_seed(p.seed, i);
        Trial t;
        config.monitoring = false;
        t.baseline = executor.execute(plain, sim_payload(1.0), config);
        config.monitoring = true;
        t.checked = executor.execute(monitored, sim_payload(1.0), config);
        return t;
      });

  MetricsReport report;
  report.suite = "propagation";
  report.params = {{"n", n}, {"eps", eps}, {"trials", trials}, {"seed", p.seed},
                   {"magnitude", magnitude}, {"injection_probability", probability},
                   {"correction_budget", budget}};
  std::vector<double> base_err, mon_err;
  const std::string task = "chain-n" + std::to_string(n);
  for (std::size_t i = 0; i < trials; ++i) {
    const std::uint64_t seed = trial_seed(p.seed, i);
    for (const ExecutionRecord* r : {&results[i].baseline, &results[i].checked}) {
      MetricsRow row = row_from_record(task, seed, *r, truth);
      row.latency_s.reset();
      (r->monitored ? mon_err : base_err).push_back(relative_error(r->final_output, truth));
      report.rows.push_back(std::move(row));
    }
  }
  const double bound = error_bound(std::vector<double>(n, eps)) - 1.0;
  const double base_mean = mean_of(base_err);
  const double mon_mean = mean_of(mon_err);
  report.checks.push_back(check_at_most("unmonitored mean relative error within 5% of bound",
                                        base_mean, bound * 1.05));
  report.checks.push_back(check_at_most("monitored mean relative error", mon_mean, 0.01));
  report.checks.back().passed = mon_mean < 0.01;
  report.summary = {{"bound", bound},
                    {"unmonitored_mean_relative_error", base_mean},
                    {"monitored_mean_relative_error", mon_mean},
                    {"deviation_from_bound", (base_mean - bound) / bound}};
  return report;
}

MetricsReport convergence_suite(const SuiteParams& p) {
  const std::size_t trials = param(p.trials, 1000, 1, 1000000, "trials");
  const double pi1 = extra_number(p, "pi1", 0.2, 0.0, 1.0);
  const double delta = p.eps.value_or(extra_number(p, "delta", 0.1, 0.0, 1.0));
  const std::size_t max_rounds = static_cast<std::size_t>(extra_number(p, "max_rounds", 12, 1, 1000));
  const std::size_t window = static_cast<std::size_t>(extra_number(p, "window", 4, 1, 1000));
  const std::size_t control_rounds = static_cast<std::size_t>(extra_number(p, "control_rounds", 5, 1, 1000));
  if (!(delta > 0.0 && delta <= 1.0)) throw Error("delta must lie in (0, 1]");

  SimActSpec conformant;
  conformant.pi1 = pi1;
  conformant.delta = delta;
  SimActSpec frozen = conformant;
  frozen.pi1 = 0.0;
  frozen.frozen = true;

  std::size_t certain_round = 0;
  for (std::size_t t = 1; t <= 100000; ++t)
    if (conformant.pi(t) >= 1.0) {
      certain_round = t;
      break;
    }

  std::vector<ReflectionTranscript> transcripts, controls;
  MetricsReport report;
  report.suite = "convergence";
  report.params = {{"trials", trials}, {"seed", p.seed}, {"pi1", pi1}, {"delta", delta},
                   {"max_rounds", max_rounds}, {"window", window},
                   {"control_rounds", control_rounds}};
  std::size_t by_certain = 0, escalated_controls = 0, controls_full = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    const std::uint64_t seed = trial_seed(p.seed, i);
    {
      SimActModel actor(conformant);
      SimActReviewer reviewer(conformant);
      auto result = run_brp("Produce an accepted symbol.", actor, reviewer, max_rounds, window, seed);
      const auto& t = result.transcript;
      if (t.terminated && t.rounds_used <= certain_round) ++by_certain;
      MetricsRow row{"brp-conformant", seed, true, t.terminated ? 1.0 : 0.0, std::nullopt,
                     static_cast<std::uint32_t>(t.rounds_used > 0 ? t.rounds_used - 1 : 0),
                     0, result.escalated, json{{"rounds", t.rounds_used}}};
      report.rows.push_back(std::move(row));
      transcripts.push_back(t);
    }
    {
      SimActModel actor(frozen);
      SimActReviewer reviewer(frozen);
      auto result = run_brp("Produce an accepted symbol.", actor, reviewer, control_rounds, window, seed);
      const auto& t = result.transcript;
      if (result.escalated) ++escalated_controls;
      if (t.rounds_used == control_rounds) ++controls_full;
      MetricsRow row{"brp-frozen", seed, true, t.terminated ? 1.0 : 0.0, std::nullopt,
                     static_cast<std::uint32_t>(t.rounds_used > 0 ? t.rounds_used - 1 : 0),
                     0, result.escalated, json{{"rounds", t.rounds_used}}};
      report.rows.push_back(std::move(row));
      controls.push_back(t);
    }
  }

  const auto stats = estimate_pi(transcripts);
  json per_round = json::array();
  std::size_t off = 0;
  double worst = 0.0;
  for (std::size_t t = 0; t < stats.pi_hat.size(); ++t) {
    if (!stats.pi_hat[t]) continue;
    const double analytic = conformant.pi(t + 1);
    const double estimate = *stats.pi_hat[t];
    const auto [lo, hi] = wilson_interval(stats.accepted[t], stats.reached[t]);
    const bool close = std::abs(estimate - analytic) <= 0.05;
    const bool covered = analytic >= lo - 1e-12 && analytic <= hi + 1e-12;
    if (!close && !covered) ++off;
    worst = std::max(worst, std::abs(estimate - analytic));
    per_round.push_back({{"round", t + 1}, {"reached", stats.reached[t]}, {"pi_hat", estimate},
                         {"pi", analytic}, {"wilson_lo", lo}, {"wilson_hi", hi}});
  }
  const double termination = static_cast<double>(by_certain) / static_cast<double>(trials);
  report.checks.push_back(CheckResult{"termination by round " + std::to_string(certain_round),
                                      by_certain == trials, termination, 1.0, ""});
  report.checks.push_back(CheckResult{"rounds with pi_hat outside 0.05 and the 95% interval",
                                      off == 0, static_cast<double>(off), 0.0, ""});
  const double escalation = static_cast<double>(escalated_controls) / static_cast<double>(trials);
  report.checks.push_back(CheckResult{"frozen control escalation rate at W=" + std::to_string(control_rounds),
                                      escalated_controls == trials && controls_full == trials,
                                      escalation, 1.0, ""});
  const auto h = check_assumptions(conformant);
  const auto hf = check_assumptions(frozen);
  report.checks.push_back(CheckResult{"conformant model satisfies every convergence assumption", h.all_hold(),
                                      h.all_hold() ? 1.0 : 0.0, 1.0, ""});
  report.checks.push_back(CheckResult{"frozen model violates the improvement assumption", hf.improves == AssumptionStatus::Violated,
                                      hf.improves == AssumptionStatus::Violated ? 1.0 : 0.0, 1.0, ""});
  bool monotone = true;
  for (std::size_t t = 1; t < stats.termination_rate_by_round.size(); ++t)
    monotone = monotone && stats.termination_rate_by_round[t] >= stats.termination_rate_by_round[t - 1];
  report.checks.push_back(CheckResult{"termination curve non-decreasing", monotone,
                                      monotone ? 1.0 : 0.0, 1.0, ""});
  report.summary = {{"certain_round", certain_round},
                    {"per_round", per_round},
                    {"max_abs_deviation", worst},
                    {"termination_rate_by_round", stats.termination_rate_by_round}};
  return report;
}

MetricsReport overhead_suite(const SuiteParams& p) {
  const std::size_t trials = param(p.trials, 5, 2, 1000, "trials");
  const double node_ms = extra_number(p, "node_ms", 2.0, 0.0, 1000.0);
  const double monitor_ms = extra_number(p, "monitor_ms", 2.0, 0.0, 1000.0);
  const double max_added_ms = extra_number(p, "max_added_ms", 1.0, 0.0, 1000.0);
  std::vector<std::size_t> depths{5, 10, 20, 40};
  if (p.extra.contains("depths")) depths = p.extra["depths"].get<std::vector<std::size_t>>();
  if (depths.size() < 2) throw Error("overhead suite needs at least two depths");

  MetricsReport report;
  report.suite = "overhead";
  report.params = {{"trials", trials}, {"seed", p.seed}, {"node_ms", node_ms},
                   {"monitor_ms", monitor_ms}, {"max_added_ms", max_added_ms}, {"depths", depths}};
  std::vector<double> xs, ys;
  json per_depth = json::array();
  double worst_mean = 0.0;
  for (std::size_t depth : depths) {
    if (depth < 1 || depth > 256) throw Error("depths must lie in [1, 256]");
    SimNodeSpec node{SimOp::Add, 1.0, SimErrorModel{}, node_ms};
    auto spec = std::make_shared<const SimTaskSpec>(SimTaskSpec::chain(depth, node, 0.0));
    BackendRegistry backends;
    backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, true));
    backends.add_monitor("oracle", std::make_shared<OracleMonitor>(spec, monitor_ms));
    const WorkflowGraph plain = spec->graph("sim");
    WorkflowGraph monitored = plain;
    monitor_all(monitored, "oracle", 3);
    Executor executor(backends, ExecutorOptions{2, 2, 0});
    const std::string task = "chain-d" + std::to_string(depth);
    RunConfig warmup;
    executor.execute(monitored, sim_payload(0.0), warmup);
    std::vector<double> added;
    for (std::size_t i = 0; i < trials; ++i) {
      RunConfig config;
      config.seed = trial_seed(p.seed, i);
      ExecutionRecord base, mon;
      // Alternate the order so drift affects both arms equally.
      if (i % 2 == 0) {
        config.monitoring = false;
        base = executor.execute(plain, sim_payload(0.0), config);
        config.monitoring = true;
        mon = executor.execute(monitored, sim_payload(0.0), config);
      } else {
        config.monitoring = true;
        mon = executor.execute(monitored, sim_payload(0.0), config);
        config.monitoring = false;
        base = executor.execute(plain, sim_payload(0.0), config);
      }
      const double truth = spec->ground_truth("n" + std::to_string(depth));
      report.rows.push_back(row_from_record(task, config.seed, base, truth));
      report.rows.push_back(row_from_record(task, config.seed, mon, truth));
      const double per_node_ms =
          static_cast<double>(mon.critical_path_ns - base.critical_path_ns) * 1e-6 /
          static_cast<double>(depth);
      added.push_back(per_node_ms);
      xs.push_back(static_cast<double>(depth));
      ys.push_back(per_node_ms);
    }
    const double m = mean_of(added);
    worst_mean = std::max(worst_mean, m);
    per_depth.push_back({{"depth", depth}, {"mean_added_ms_per_node", m}});
  }
  const auto fit = fit_line(xs, ys);
  report.checks.push_back(CheckResult{"slope 95% interval contains zero",
                                      fit.slope_lo <= 0.0 && fit.slope_hi >= 0.0, fit.slope, 0.0,
                                      "interval [" + std::to_string(fit.slope_lo) + ", " +
                                          std::to_string(fit.slope_hi) + "] ms per node per level"});
  report.checks.push_back(check_at_most("added latency per node (ms)", worst_mean, max_added_ms));
  report.summary = {{"per_depth", per_depth},
                    {"slope", fit.slope},
                    {"slope_lo", fit.slope_lo},
                    {"slope_hi", fit.slope_hi},
                    {"intercept", fit.intercept}};
  return report;
}

MetricsReport amortized_suite(const SuiteParams& p) {
  const std::size_t n = param(p.n, 10, 1, 64, "n");
  const std::size_t trials = param(p.trials, 1000, 1, 1000000, "trials");
  const double probability = p.eps.value_or(0.1);
  const double budget = extra_number(p, "budget", 3, 0, 32);
  if (!(probability >= 0.0 && probability < 1.0)) throw Error("eps must lie in [0, 1)");

  SimNodeSpec node{SimOp::Add, 1.0, SimErrorModel{probability, PerturbationKind::ValueScale, 0.1}, 0.0};
  auto spec = std::make_shared<const SimTaskSpec>(SimTaskSpec::chain(n, node, 0.0));
  BackendRegistry backends;
  backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  backends.add_monitor("oracle", std::make_shared<OracleMonitor>(spec));
  WorkflowGraph graph = spec->graph("sim");
  monitor_all(graph, "oracle", static_cast<std::uint32_t>(budget));
  const double truth = spec->ground_truth("n" + std::to_string(n));

  const auto records = run_trials<ExecutionRecord>(
      trials, worker_count(p, trials), backends, [&](std::size_t i, Executor& executor) {
        RunConfig config;
        config.seed = trial_seed(p.seed, i);
        return executor.execute(graph, sim_payload(0.0), config);
      });

  MetricsReport report;
  report.suite = "amortized";
  report.params = {{"n", n}, {"trials", trials}, {"seed", p.seed}, {"p", probability},
                   {"correction_budget", budget}};
  std::size_t executions = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    MetricsRow row = row_from_record("chain-n" + std::to_string(n), trial_seed(p.seed, i),
                                     records[i], truth);
    row.latency_s.reset();
    row.extra["attempts"] = records[i].verdicts.size();
    executions += records[i].verdicts.size();
    report.rows.push_back(std::move(row));
  }
  const double expected = 1.0 / (1.0 - probability);
  const double mean_attempts = static_cast<double>(executions) / static_cast<double>(n * trials);
  const double deviation = std::abs(mean_attempts - expected) / expected;
  report.checks.push_back(CheckResult{"monitored node executions", executions >= 10000,
                                      static_cast<double>(executions), 10000.0, "at least"});
  report.checks.push_back(check_at_most("relative deviation of mean attempts from 1/(1-p)",
                                        deviation, 0.10));
  report.summary = {{"mean_attempts", mean_attempts}, {"expected", expected},
                    {"executions", executions}};
  return report;
}

MetricsReport hcv_blindspot_suite(const SuiteParams& p) {
  const std::size_t errors = param(p.trials, 500, 1, 1000000, "trials");
  const std::size_t vectors = static_cast<std::size_t>(extra_number(p, "vectors", 1000, 1, 1e7));

  SimNodeSpec node{SimOp::Add, 1.0, SimErrorModel{1.0, PerturbationKind::ValueScale, 0.1}, 0.0};
  auto spec = std::make_shared<const SimTaskSpec>(SimTaskSpec::chain(1, node, 1.0));
  BackendRegistry backends;
  for (const char* name : {"biased-a", "biased-b", "biased-c"})
    backends.add_monitor(name, std::make_shared<BiasedMonitor>(spec));
  backends.add_monitor("oracle", std::make_shared<OracleMonitor>(spec));
  backends.add_monitor("stochastic", std::make_shared<StochasticMonitor>(spec, 1.0, 0.0));

  EnsembleConfig homogeneous{{{"biased-a", "exec-family"}, {"biased-b", "exec-family"}, {"biased-c", "exec-family"}},
                             "exec-family", 0.5, 1.0};
  EnsembleConfig heterogeneous{{{"biased-a", "exec-family"}, {"oracle", "symbolic-checker"},
                                {"stochastic", "sampled-judge"}},
                               "exec-family", 0.5, 1.0};

  MetricsReport report;
  report.suite = "hcv-blindspot";
  report.params = {{"errors", errors}, {"vectors", vectors}, {"seed", p.seed}};
  std::size_t injected = 0, hom_detected = 0, het_detected = 0;
  for (std::size_t i = 0; i < errors; ++i) {
    const std::uint64_t seed = trial_seed(p.seed, i);
    SimOutput generated = sim_generate(*spec, "n1", {}, seed);
    Snapshot snapshot;
    snapshot.node = "n1";
    snapshot.input = sim_payload(1.0);
    snapshot.output = generated.output;
    const JudgeResult truth = oracle_judge(*spec, "n1", snapshot.output);
    if (generated.injected && truth.scores.content_completeness < 1.0) ++injected;
    AssessmentContext context{snapshot.key(), snapshot.input, {}};
    CrossValidateOptions options;
    options.assess.seed = seed;
    for (const auto* ensemble : {&homogeneous, &heterogeneous}) {
      const auto r = cross_validate(snapshot, context, *ensemble, backends, options);
      const bool detected = !r.inconclusive && escalate_decision(r) != EscalationAction::Accept;
      const bool het = ensemble == &heterogeneous;
      (het ? het_detected : hom_detected) += detected ? 1 : 0;
      report.rows.push_back(MetricsRow{het ? "heterogeneous" : "homogeneous", seed, true,
                                       detected ? 1.0 : 0.0, std::nullopt, 0, 0, false,
                                       json{{"disagreement", r.pairwise_disagreement},
                                            {"entropy", r.normalized_entropy}}});
    }
  }

  // Random verdict vectors for the reduction properties.
  std::size_t permutation_failures = 0, bound_failures = 0;
  Rng rng(derive_seed(p.seed, "hcv-vectors"));
  const std::vector<std::string> tags{"exec-family", "symbolic-checker", "sampled-judge", "other"};
  for (std::size_t v = 0; v < vectors; ++v) {
    const std::size_t k = 2 + rng.below(7);
    std::vector<Verdict> verdicts(k);
    std::vector<std::string> architectures(k);
    for (std::size_t m = 0; m < k; ++m) {
      auto& verdict = verdicts[m];
      verdict.category = static_cast<ErrorCategory>(rng.below(5));
      verdict.pass = verdict.category == ErrorCategory::None;
      verdict.confidence = rng.uniform();
      verdict.quality = verdict.pass ? verdict.confidence : 1.0 - verdict.confidence;
      verdict.rationale = "member " + std::to_string(m);
      architectures[m] = tags[rng.below(tags.size())];
    }
    const auto base = summarize_verdicts(verdicts, architectures, "exec-family");
    std::vector<std::size_t> order(k);
    for (std::size_t m = 0; m < k; ++m) order[m] = m;
    for (std::size_t m = k; m > 1; --m) std::swap(order[m - 1], order[rng.below(m)]);
    std::vector<Verdict> pv;
    std::vector<std::string> pa;
    for (std::size_t m : order) {
      pv.push_back(verdicts[m]);
      pa.push_back(architectures[m]);
    }
    const auto permuted = summarize_verdicts(pv, pa, "exec-family");
    if (permuted.pairwise_disagreement != base.pairwise_disagreement ||
        permuted.normalized_entropy != base.normalized_entropy ||
        permuted.majority != base.majority || permuted.systematic_flag != base.systematic_flag)
      ++permutation_failures;
    if (!(base.normalized_entropy >= 0.0 && base.normalized_entropy <= 1.0) ||
        !(base.pairwise_disagreement >= 0.0 && base.pairwise_disagreement <= 1.0))
      ++bound_failures;
  }

  const double n = static_cast<double>(errors);
  report.checks.push_back(CheckResult{"injected content errors confirmed by ground truth",
                                      injected == errors, static_cast<double>(injected), n, ""});
  report.checks.push_back(check_at_most("homogeneous detection rate", hom_detected / n, 0.0));
  report.checks.push_back(CheckResult{"heterogeneous detection rate", het_detected == errors,
                                      het_detected / n, 1.0, "must equal"});
  report.checks.push_back(check_at_most("permutation invariance failures",
                                        static_cast<double>(permutation_failures), 0.0));
  report.checks.push_back(check_at_most("entropy or disagreement outside [0, 1]",
                                        static_cast<double>(bound_failures), 0.0));
  report.summary = {{"homogeneous_detected", hom_detected}, {"heterogeneous_detected", het_detected}};
  return report;
}

MetricsReport retention_suite(const SuiteParams& p) {
  const std::size_t instances = param(p.trials, 200, 1, 100000, "trials");
  const std::size_t max_n = param(p.n, 12, 1, 16, "n");
  MetricsReport report;
  report.suite = "retention";
  report.params = {{"instances", instances}, {"max_n", max_n}, {"seed", p.seed}};
  std::size_t mismatches = 0, cases = 0;
  for (std::size_t i = 0; i < instances; ++i) {
    const std::uint64_t seed = trial_seed(p.seed, i);
    Rng rng(seed);
    const std::size_t n = 1 + i % max_n;
    std::vector<RetentionNode> chain;
    std::vector<double> costs, probs;
    std::vector<bool> frontier(n, false);
    std::set<NodeId> frontier_ids;
    for (std::size_t k = 0; k < n; ++k) {
      const double cost = 0.1 + 9.9 * rng.uniform();
      const double prob = rng.uniform() < 0.1 ? 0.0 : rng.uniform();
      chain.push_back(RetentionNode{"n" + std::to_string(k + 1), cost, 1.0, prob});
      costs.push_back(cost);
      probs.push_back(prob);
      if (rng.uniform() < 0.15) {
        frontier[k] = true;
        frontier_ids.insert(chain.back().id);
      }
    }
    std::size_t instance_mismatches = 0;
    for (std::size_t budget = frontier_ids.size(); budget <= n; ++budget) {
      ++cases;
      const auto plan = optimize_retention(chain, budget, frontier_ids);
      const double best = brute_force_retention_cost(costs, probs, budget, frontier);
      const double tol = 1e-9 * std::max(1.0, std::abs(best));
      bool ok = std::abs(plan.expected_cost - best) <= tol && plan.retained.size() <= budget &&
                std::includes(plan.retained.begin(), plan.retained.end(), frontier_ids.begin(),
                              frontier_ids.end()) &&
                std::abs(chain_recovery_cost(chain, plan.retained) - plan.expected_cost) <= tol;
      if (!ok) ++instance_mismatches;
    }
    mismatches += instance_mismatches;
    report.rows.push_back(MetricsRow{"chain-n" + std::to_string(n), seed, true,
                                     instance_mismatches == 0 ? 1.0 : 0.0, std::nullopt, 0, 0,
                                     false, json{{"mismatches", instance_mismatches}}});
  }
  report.checks.push_back(check_at_most("mismatches against exhaustive enumeration",
                                        static_cast<double>(mismatches), 0.0));
  report.summary = {{"cases", cases}};
  return report;
}

MetricsReport memory_suite(const SuiteParams& p) {
  const std::size_t n = param(p.n, 10, 2, 64, "n");
  const double probability = p.eps.value_or(0.1);
  const double slack = extra_number(p, "slack", 2, 0, 64);
  const double max_ratio = extra_number(p, "max_ratio", 1.15, 0.0, 100.0);
  if (!(probability >= 0.0 && probability < 1.0)) throw Error("eps must lie in [0, 1)");

  SimNodeSpec node{SimOp::Add, 1.0, SimErrorModel{probability, PerturbationKind::ValueScale, 0.1}, 0.0};
  auto spec = std::make_shared<const SimTaskSpec>(SimTaskSpec::chain(n, node, 0.0));
  BackendRegistry backends;
  backends.add_agent("sim", std::make_shared<SimAgentBackend>(spec, false));
  backends.add_monitor("oracle", std::make_shared<OracleMonitor>(spec));
  const WorkflowGraph plain = spec->graph("sim");
  WorkflowGraph graph = plain;
  monitor_all(graph, "oracle", 3);
  const NodeId last = "n" + std::to_string(n);
  const double truth = spec->ground_truth(last);

  namespace fs = std::filesystem;
  const fs::path root = p.extra.contains("dir")
                            ? fs::path(p.extra["dir"].get<std::string>())
                            : fs::temp_directory_path() /
                                  ("vigil-memory-" + std::to_string(::getpid()) + "-" +
                                   std::to_string(p.seed));
  fs::remove_all(root);
  fs::create_directories(root);

  // A chain has one node awaiting judgment at a time.
  const std::size_t frontier = 1;
  const std::size_t budget = frontier + static_cast<std::size_t>(slack);
  Executor executor(backends);
  RunConfig config;
  config.seed = p.seed;
  config.snapshot_budget = budget;

  MetricsReport report;
  report.suite = "memory";
  report.params = {{"n", n}, {"eps", probability}, {"seed", p.seed}, {"snapshot_budget", budget},
                   {"max_ratio", max_ratio}};

  RunConfig baseline_config;
  baseline_config.seed = p.seed;
  baseline_config.monitoring = false;
  const auto baseline = executor.execute(plain, sim_payload(0.0), baseline_config);
  std::uint64_t baseline_bytes = 0;
  {
    LogSnapshotStore payloads(root / "baseline");
    GraphTopology topo(plain);
    for (const auto& id : topo.order()) payloads.append_record(RecordKind::Payload, pack_payload(baseline.outputs.at(id)));
    baseline_bytes = payloads.log_bytes();
  }
  MetricsRow base_row = row_from_record("chain-n" + std::to_string(n), p.seed, baseline, truth);
  base_row.latency_s.reset();
  report.rows.push_back(base_row);

  std::uint64_t monitored_bytes = 0;
  std::vector<SnapshotKey> retained;
  ExecutionRecord record;
  {
    auto store = std::make_shared<LogSnapshotStore>(root / "monitored");
    record = executor.execute(graph, sim_payload(0.0), config, store);
    store->compact();
    monitored_bytes = store->log_bytes();
    retained = store->keys();
  }
  MetricsRow row = row_from_record("chain-n" + std::to_string(n), p.seed, record, truth);
  row.latency_s.reset();
  report.rows.push_back(row);

  std::size_t recoveries = 0, correct = 0;
  for (const auto& key : retained) {
    const fs::path copy = root / ("resume-" + std::to_string(recoveries));
    fs::copy(root / "monitored", copy, fs::copy_options::recursive);
    auto store = std::make_shared<LogSnapshotStore>(copy);
    const auto resumed = executor.resume(graph, sim_payload(0.0), config, store, key);
    ++recoveries;
    if (resumed.final_output.content == record.final_output.content &&
        relative_error(resumed.final_output, truth) == 0.0)
      ++correct;
  }
  if (!p.extra.contains("keep")) fs::remove_all(root);

  const double ratio = static_cast<double>(monitored_bytes) / static_cast<double>(baseline_bytes);
  report.checks.push_back(check_at_most("snapshot log size over payload log size", ratio, max_ratio));
  report.checks.push_back(CheckResult{"recoveries yielding the correct final output",
                                      recoveries > 0 && correct == recoveries,
                                      static_cast<double>(correct), static_cast<double>(recoveries), ""});
  report.checks.push_back(CheckResult{"monitored run final relative error",
                                      relative_error(record.final_output, truth) == 0.0,
                                      relative_error(record.final_output, truth), 0.0, ""});
  json keys = json::array();
  for (const auto& k : retained) keys.push_back(k.to_string());
  report.summary = {{"snapshot_log_bytes", monitored_bytes}, {"payload_log_bytes", baseline_bytes},
                    {"ratio", ratio}, {"retained", keys}};
  return report;
}

}  // namespace vigil
