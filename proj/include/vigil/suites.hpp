#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vigil/metrics.hpp"
#include "vigil/serialization.hpp"

namespace vigil {

/// Common knobs; suites ignore the ones they do not use. `extra` holds
/// suite-specific overrides by name (for example `magnitude`, `node_ms`).
struct SuiteParams {
  std::optional<std::size_t> n;
  std::optional<double> eps;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 7;
  /// Worker threads for concurrent trials; 0 picks the hardware count.
  std::size_t jobs = 0;
  json extra = json::object();
};

/// propagation, convergence, overhead, amortized, hcv-blindspot, retention,
/// memory.
const std::vector<std::string>& suite_names();

/// Runs a suite by name. Trial i runs with trial_seed(seed, i). Throws Error
/// on an unknown suite or out-of-range parameters. The report's checks decide
/// pass or fail.
MetricsReport run_suite(const std::string& name, const SuiteParams& params);

MetricsReport propagation_suite(const SuiteParams& params);
MetricsReport convergence_suite(const SuiteParams& params);
MetricsReport overhead_suite(const SuiteParams& params);
MetricsReport amortized_suite(const SuiteParams& params);
MetricsReport hcv_blindspot_suite(const SuiteParams& params);
MetricsReport retention_suite(const SuiteParams& params);
MetricsReport memory_suite(const SuiteParams& params);

/// Exhaustive minimum of the chain recovery cost over every subset of at
/// most `budget` nodes containing `frontier`. Exponential; small n only.
double brute_force_retention_cost(const std::vector<double>& costs,
                                  const std::vector<double>& probabilities, std::size_t budget,
                                  const std::vector<bool>& frontier);

/// Two-sided 95% Wilson score interval for k successes out of n.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  /// Two-sided 95% interval for the slope.
  double slope_lo = 0.0;
  double slope_hi = 0.0;
};

/// Ordinary least squares with a Student-t interval. Needs at least three
/// points with distinct x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Upper 0.975 quantile of Student's t with `dof` degrees of freedom.
double student_t_975(double dof);

}  // namespace vigil
