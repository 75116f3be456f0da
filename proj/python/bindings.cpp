#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vigil/config.hpp"
#include "vigil/error_model.hpp"
#include "vigil/executor.hpp"
#include "vigil/retention.hpp"
#include "vigil/suites.hpp"

namespace py = pybind11;
using namespace vigil;

namespace {

std::string run_document(const Workflow& wf, std::optional<std::uint64_t> seed,
                         std::optional<std::uint32_t> budget, bool monitoring) {
  RunConfig config = wf.run;
  if (seed) config.seed = *seed;
  if (budget) config.correction_budget = *budget;
  config.monitoring = config.monitoring && monitoring;
  ExecutionRecord record;
  {
    py::gil_scoped_release release;
    Executor executor(wf.backends);
    record = executor.execute(wf.graph, wf.input, config);
  }
  return record_to_json(record).dump();
}

std::vector<std::string> findings(const Workflow& wf) {
  std::vector<std::string> out;
  for (const auto& p : validate_graph(wf.graph, wf.backends))
    out.push_back(std::string(to_string(p.kind)) + ": " + p.message);
  return out;
}

}  // namespace

PYBIND11_MODULE(_vigil, m) {
  m.doc() = "Native core of the vigil workflow runtime";

  auto& error = py::register_exception<Error>(m, "VigilError");
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

  m.def("error_bound", &error_bound, py::arg("epsilons"));

  m.def(
      "validate_workflow", [](const std::string& path) { return findings(load_workflow(path)); },
      py::arg("path"));
  m.def(
      "validate_document",
      [](const std::string& document) { return findings(parse_workflow(json::parse(document))); },
      py::arg("document"));

  m.def(
      "run_workflow",
      [](const std::string& path, std::optional<std::uint64_t> seed,
         std::optional<std::uint32_t> budget, bool monitoring) {
        return run_document(load_workflow(path), seed, budget, monitoring);
      },
      py::arg("path"), py::arg("seed") = py::none(), py::arg("budget") = py::none(),
      py::arg("monitoring") = true);
  m.def(
      "run_document",
      [](const std::string& document, std::optional<std::uint64_t> seed,
         std::optional<std::uint32_t> budget, bool monitoring) {
        return run_document(parse_workflow(json::parse(document)), seed, budget, monitoring);
      },
      py::arg("document"), py::arg("seed") = py::none(), py::arg("budget") = py::none(),
      py::arg("monitoring") = true);

  m.def("suite_names", &suite_names);
  m.def(
      "run_suite",
      [](const std::string& name, std::optional<std::size_t> n, std::optional<double> eps,
         std::optional<std::size_t> trials, std::uint64_t seed, const std::string& extra) {
        SuiteParams params;
        params.n = n;
        params.eps = eps;
        params.trials = trials;
        params.seed = seed;
        params.extra = json::parse(extra);
        MetricsReport report;
        {
          py::gil_scoped_release release;
          report = run_suite(name, params);
        }
        return json{{"suite", report.suite},
                    {"params", report.params},
                    {"rows", report.rows},
                    {"checks", report.checks},
                    {"summary", report.summary},
                    {"passed", report.passed()}}
            .dump();
      },
      py::arg("name"), py::arg("n") = py::none(), py::arg("eps") = py::none(),
      py::arg("trials") = py::none(), py::arg("seed") = 7, py::arg("extra") = "{}");

  m.def(
      "optimize_chain_retention",
      [](const std::vector<double>& costs, const std::vector<double>& probabilities,
         std::size_t budget, const std::vector<std::size_t>& frontier) {
        if (costs.size() != probabilities.size())
          throw Error("costs and probabilities differ in length");
        std::vector<RetentionNode> chain;
        for (std::size_t i = 0; i < costs.size(); ++i)
          chain.push_back(RetentionNode{"n" + std::to_string(i), costs[i], 1.0, probabilities[i]});
        std::set<NodeId> forced;
        for (std::size_t i : frontier) {
          if (i >= costs.size()) throw Error("frontier index out of range");
          forced.insert(chain[i].id);
        }
        const auto plan = optimize_retention(chain, budget, forced);
        std::vector<std::size_t> retained;
        for (std::size_t i = 0; i < chain.size(); ++i)
          if (plan.retained.count(chain[i].id)) retained.push_back(i);
        return py::make_tuple(retained, plan.expected_cost);
      },
      py::arg("costs"), py::arg("probabilities"), py::arg("budget"),
      py::arg("frontier") = std::vector<std::size_t>{});
}
