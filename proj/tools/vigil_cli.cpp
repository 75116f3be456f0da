#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vigil/config.hpp"
#include "vigil/executor.hpp"
#include "vigil/metrics.hpp"
#include "vigil/snapshot_store.hpp"
#include "vigil/suites.hpp"

namespace {

using namespace vigil;

constexpr int kFailed = 1;
constexpr int kUsage = 2;

int cmd_validate(const std::string& file) {
  const Workflow wf = load_workflow(file);
  const auto problems = validate_graph(wf.graph, wf.backends);
  for (const auto& p : problems) std::cout << "error: " << to_string(p.kind) << ": " << p.message << "\n";
  if (!problems.empty()) return kFailed;
  std::cout << "ok: " << wf.name << " (" << wf.graph.nodes.size() << " nodes, "
            << wf.graph.edges.size() << " edges)\n";
  return 0;
}

struct RunArgs {
  std::string file;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> budget;
  bool no_monitor = false;
  std::string out;
  std::string record;
  std::string snapshots;
};

int cmd_run(const RunArgs& args) {
  Workflow wf = load_workflow(args.file);
  if (auto problems = validate_graph(wf.graph, wf.backends); !problems.empty()) {
    for (const auto& p : problems) std::cerr << "error: " << to_string(p.kind) << ": " << p.message << "\n";
    return kFailed;
  }
  RunConfig config = wf.run;
  if (args.seed) config.seed = *args.seed;
  if (args.budget) config.correction_budget = *args.budget;
  if (args.no_monitor) config.monitoring = false;

  std::shared_ptr<SnapshotStore> store;
  if (!args.snapshots.empty())
    store = std::make_shared<LogSnapshotStore>(args.snapshots);
  else if (wf.snapshot_dir)
    store = std::make_shared<LogSnapshotStore>(*wf.snapshot_dir);

  Executor executor(wf.backends);
  const ExecutionRecord record = executor.execute(wf.graph, wf.input, config, store);

  std::optional<double> truth;
  if (wf.sim) truth = wf.sim->ground_truth(GraphTopology(wf.graph).order().back());
  MetricsRow row = row_from_record(wf.name, config.seed, record, truth);

  std::cout << "run " << record.run_id << ": " << (record.monitored ? "monitored" : "unmonitored")
            << " final=\"" << record.final_output.content << "\" corrections="
            << record.correction_count << " degraded=" << (record.degraded ? "yes" : "no")
            << " debt=" << record.monitoring_debt << " critical_path_s=" << *row.latency_s;
  if (row.score) std::cout << " score=" << *row.score;
  std::cout << "\n";

  std::string record_path = args.record;
  if (record_path.empty() && !args.out.empty()) {
    std::filesystem::path p(args.out);
    record_path = (p.parent_path() / (p.stem().string() + ".record.json")).string();
  }
  if (!record_path.empty()) {
    std::ofstream out(record_path);
    if (!out) throw Error("cannot write execution record " + record_path);
    out << record_to_json(record).dump(2) << "\n";
  }
  if (!args.out.empty()) {
    MetricsReport report;
    report.suite = "run";
    report.params = {{"workflow", wf.name}, {"seed", config.seed}, {"monitoring", config.monitoring}};
    report.rows.push_back(row);
    write_metrics_file(report, args.out);
  }
  return 0;
}

struct SimulateArgs {
  std::string suite;
  std::optional<std::size_t> n;
  std::optional<double> eps;
  std::optional<std::size_t> trials;
  std::uint64_t seed = 7;
  std::size_t jobs = 0;
  std::string out;
  std::vector<std::string> set;
};

int cmd_simulate(const SimulateArgs& args) {
  SuiteParams params;
  params.n = args.n;
  params.eps = args.eps;
  params.trials = args.trials;
  params.seed = args.seed;
  params.jobs = args.jobs;
  for (const auto& kv : args.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    try {
      params.extra[key] = json::parse(value);
    } catch (const json::parse_error&) {
      params.extra[key] = value;
    }
  }
  const auto start = std::chrono::steady_clock::now();
  const MetricsReport report = run_suite(args.suite, params);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!args.out.empty()) write_metrics_file(report, args.out);
  std::cout << render_markdown({report});
  std::cerr << args.suite << ": " << (report.passed() ? "pass" : "FAIL") << " in " << elapsed << " s\n";
  return report.passed() ? 0 : kFailed;
}

int cmd_report(const std::vector<std::string>& files, const std::string& format,
               const std::string& out_path) {
  std::vector<MetricsReport> reports;
  for (const auto& f : files) reports.push_back(read_metrics_file(f));
  const std::string text = format == "csv" ? render_csv(reports) : render_markdown(reports);
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    if (!out) throw Error("cannot write report " + out_path);
    out << text;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vigil: monitored workflow execution and simulation suites"};
  app.require_subcommand(1);

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "Check a workflow definition");
  validate->add_option("file", validate_file, "Workflow file (JSON or YAML)")->required()->check(CLI::ExistingFile);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute a workflow");
  run->add_option("file", run_args.file, "Workflow file (JSON or YAML)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_args.seed, "Override the run seed");
  run->add_option("--budget", run_args.budget, "Override the correction budget");
  run->add_flag("--no-monitor", run_args.no_monitor, "Disable every monitor (baseline run)");
  run->add_option("--out", run_args.out, "Metrics file to write (JSON lines)");
  run->add_option("--record", run_args.record, "Execution record file (defaults next to --out)");
  run->add_option("--snapshots", run_args.snapshots, "Directory for the on-disk snapshot log");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a simulation suite");
  simulate->add_option("suite", sim_args.suite, "Suite name")
      ->required()
      ->check(CLI::IsMember(suite_names()));
  simulate->add_option("--n", sim_args.n, "Chain length");
  simulate->add_option("--eps", sim_args.eps, "Per-node error rate");
  simulate->add_option("--trials", sim_args.trials, "Number of trials");
  simulate->add_option("--seed", sim_args.seed, "Master seed");
  simulate->add_option("--jobs", sim_args.jobs, "Concurrent trial workers (0 = all cores)");
  simulate->add_option("--out", sim_args.out, "Metrics file to write (JSON lines)");
  simulate->add_option("--set", sim_args.set, "Suite-specific key=value override");

  std::vector<std::string> report_files;
  std::string report_format = "md";
  std::string report_out;
  auto* report = app.add_subcommand("report", "Render metrics files as tables");
  report->add_option("files", report_files, "Metrics files")->required()->check(CLI::ExistingFile);
  report->add_option("--format", report_format, "md or csv")->check(CLI::IsMember({"md", "csv"}));
  report->add_option("--out", report_out, "Write the table to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_file);
    if (*run) return cmd_run(run_args);
    if (*simulate) return cmd_simulate(sim_args);
    if (*report) return cmd_report(report_files, report_format, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kUsage;
  } catch (const GraphError& e) {
    std::cerr << "error: graph: " << e.what() << "\n";
    return kFailed;
  } catch (const BackendFailure& e) {
    std::cerr << "error: backend: " << e.what() << "\n";
    return kFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
