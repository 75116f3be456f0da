#include "vigil/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "vigil/sim.hpp"

namespace vigil {

bool MetricsReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

namespace {

std::optional<double> mean(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

std::string cell(const std::optional<double>& v, int precision = 4) {
  if (!v) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

json aggregates_json(const Aggregates& a) {
  return json{{"rows", a.rows},
              {"pairs", a.pairs},
              {"mean_score", optional_json(a.mean_score)},
              {"mean_latency_s", optional_json(a.mean_latency_s)},
              {"overhead_pct", optional_json(a.overhead_pct)},
              {"improvement_pct", optional_json(a.improvement_pct)}};
}

}  // namespace

std::vector<PairedRow> pair_rows(const std::vector<MetricsRow>& rows) {
  std::map<std::pair<std::string, std::uint64_t>, const MetricsRow*> baselines;
  for (const auto& r : rows)
    if (!r.monitored) baselines.emplace(std::make_pair(r.task, r.seed), &r);
  std::vector<PairedRow> pairs;
  for (const auto& r : rows) {
    if (!r.monitored) continue;
    auto it = baselines.find({r.task, r.seed});
    if (it == baselines.end()) continue;
    PairedRow p{r.task, r.seed, *it->second, r, std::nullopt, std::nullopt};
    if (p.baseline.latency_s && p.monitored.latency_s && *p.baseline.latency_s > 0.0)
      p.overhead_pct = (*p.monitored.latency_s - *p.baseline.latency_s) / *p.baseline.latency_s * 100.0;
    if (p.baseline.score && p.monitored.score)
      p.improvement_pct = (*p.monitored.score - *p.baseline.score) * 100.0;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

Aggregates MetricsReport::aggregate() const {
  Aggregates a;
  a.rows = rows.size();
  std::vector<double> scores, latencies, overheads, improvements;
  for (const auto& r : rows) {
    if (r.score) scores.push_back(*r.score);
    if (r.latency_s) latencies.push_back(*r.latency_s);
  }
  const auto pairs = pair_rows(rows);
  a.pairs = pairs.size();
  for (const auto& p : pairs) {
    if (p.overhead_pct) overheads.push_back(*p.overhead_pct);
    if (p.improvement_pct) improvements.push_back(*p.improvement_pct);
  }
  a.mean_score = mean(scores);
  a.mean_latency_s = mean(latencies);
  a.overhead_pct = mean(overheads);
  a.improvement_pct = mean(improvements);
  return a;
}

void to_json(json& j, const MetricsRow& r) {
  j = json{{"task", r.task},
           {"seed", r.seed},
           {"monitored", r.monitored},
           {"score", optional_json(r.score)},
           {"latency_s", optional_json(r.latency_s)},
           {"corrections", r.corrections},
           {"monitoring_debt", r.monitoring_debt},
           {"degraded", r.degraded},
           {"extra", r.extra}};
}

void from_json(const json& j, MetricsRow& r) {
  j.at("task").get_to(r.task);
  j.at("seed").get_to(r.seed);
  j.at("monitored").get_to(r.monitored);
  r.score = optional_from(j, "score");
  r.latency_s = optional_from(j, "latency_s");
  r.corrections = j.value("corrections", 0u);
  r.monitoring_debt = j.value("monitoring_debt", std::uint64_t{0});
  r.degraded = j.value("degraded", false);
  r.extra = j.value("extra", json::object());
}

void to_json(json& j, const CheckResult& c) {
  j = json{{"name", c.name}, {"passed", c.passed}, {"value", c.value}, {"bound", c.bound},
           {"detail", c.detail}};
}

void from_json(const json& j, CheckResult& c) {
  j.at("name").get_to(c.name);
  j.at("passed").get_to(c.passed);
  j.at("value").get_to(c.value);
  j.at("bound").get_to(c.bound);
  c.detail = j.value("detail", std::string());
}

void write_metrics(const MetricsReport& report, std::ostream& out, const std::string& timestamp) {
  out << json{{"kind", "header"}, {"suite", report.suite}, {"timestamp", timestamp}}.dump() << "\n";
  for (const auto& row : report.rows) {
    json j = row;
    j["kind"] = "row";
    out << j.dump() << "\n";
  }
  json footer{{"kind", "aggregate"},
              {"suite", report.suite},
              {"params", report.params},
              {"aggregates", aggregates_json(report.aggregate())},
              {"checks", report.checks},
              {"summary", report.summary},
              {"passed", report.passed()}};
  out << footer.dump() << "\n";
}

void write_metrics_file(const MetricsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write metrics file " + path.string());
  write_metrics(report, out, utc_timestamp());
}

MetricsReport read_metrics(std::istream& in) {
  MetricsReport report;
  std::string line;
  std::size_t number = 0;
  bool footer = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error("metrics line " + std::to_string(number) + " is not JSON: " + e.what());
    }
    const std::string kind = j.value("kind", std::string("row"));
    if (kind == "header") {
      report.suite = j.value("suite", std::string());
    } else if (kind == "row") {
      report.rows.push_back(j.get<MetricsRow>());
    } else if (kind == "aggregate") {
      footer = true;
      report.suite = j.value("suite", report.suite);
      report.params = j.value("params", json::object());
      report.checks = j.value("checks", json::array()).get<std::vector<CheckResult>>();
      report.summary = j.value("summary", json::object());
    } else {
      throw Error("metrics line " + std::to_string(number) + " has unknown kind '" + kind + "'");
    }
  }
  if (!footer) throw Error("metrics file has no aggregate footer");
  return report;
}

MetricsReport read_metrics_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file " + path.string());
  return read_metrics(in);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

struct TaskSummary {
  std::string suite;
  std::string task;
  std::size_t runs = 0;
  std::size_t pairs = 0;
  std::optional<double> baseline_score, monitored_score, improvement;
  std::optional<double> baseline_latency, monitored_latency, overhead;
  std::optional<double> corrections, debt;
};

/// Reports sharing a suite name are pooled so runs from separate files pair.
std::vector<MetricsReport> merge_by_suite(const std::vector<MetricsReport>& reports) {
  std::vector<MetricsReport> merged;
  for (const auto& r : reports) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const MetricsReport& m) { return m.suite == r.suite; });
    if (it == merged.end()) {
      merged.push_back(r);
      continue;
    }
    it->rows.insert(it->rows.end(), r.rows.begin(), r.rows.end());
    it->checks.insert(it->checks.end(), r.checks.begin(), r.checks.end());
  }
  return merged;
}

std::vector<TaskSummary> summarize(const std::vector<MetricsReport>& reports) {
  std::vector<TaskSummary> out;
  for (const auto& report : merge_by_suite(reports)) {
    std::map<std::string, std::vector<const MetricsRow*>> by_task;
    for (const auto& r : report.rows) by_task[r.task].push_back(&r);
    const auto pairs = pair_rows(report.rows);
    for (const auto& [task, rows] : by_task) {
      TaskSummary s;
      s.suite = report.suite;
      s.task = task;
      s.runs = rows.size();
      std::vector<double> bs, ms, bl, ml, imp, ovh, corr, debt;
      for (const auto& p : pairs) {
        if (p.task != task) continue;
        ++s.pairs;
        if (p.improvement_pct) imp.push_back(*p.improvement_pct);
        if (p.overhead_pct) ovh.push_back(*p.overhead_pct);
      }
      for (const MetricsRow* r : rows) {
        if (r->score) (r->monitored ? ms : bs).push_back(*r->score);
        if (r->latency_s) (r->monitored ? ml : bl).push_back(*r->latency_s);
        if (r->monitored) {
          corr.push_back(r->corrections);
          debt.push_back(static_cast<double>(r->monitoring_debt));
        }
      }
      s.baseline_score = mean(bs);
      s.monitored_score = mean(ms);
      s.baseline_latency = mean(bl);
      s.monitored_latency = mean(ml);
      s.improvement = mean(imp);
      s.overhead = mean(ovh);
      s.corrections = mean(corr);
      s.debt = mean(debt);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace

std::string render_markdown(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "## Scores and overhead\n\n"
      << "| Suite | Task | Runs | Pairs | Baseline score | Monitored score | Improvement % | "
         "Baseline latency (s) | Monitored latency (s) | Overhead % | Corrections | Debt |\n"
      << "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& s : summarize(reports)) {
    out << "| " << s.suite << " | " << s.task << " | " << s.runs << " | " << s.pairs << " | "
        << cell(s.baseline_score) << " | " << cell(s.monitored_score) << " | "
        << cell(s.improvement, 2) << " | " << cell(s.baseline_latency) << " | "
        << cell(s.monitored_latency) << " | " << cell(s.overhead, 2) << " | "
        << cell(s.corrections, 3) << " | " << cell(s.debt, 3) << " |\n";
  }
  bool any_checks = false;
  for (const auto& r : reports) any_checks = any_checks || !r.checks.empty();
  if (any_checks) {
    out << "\n## Checks\n\n| Suite | Check | Value | Bound | Result |\n|---|---|---|---|---|\n";
    for (const auto& r : reports)
      for (const auto& c : r.checks)
        out << "| " << r.suite << " | " << c.name << " | " << cell(c.value, 6) << " | "
            << cell(c.bound, 6) << " | " << (c.passed ? "pass" : "FAIL") << " |\n";
  }
  return out.str();
}

std::string render_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "suite,task,runs,pairs,baseline_score,monitored_score,improvement_pct,"
         "baseline_latency_s,monitored_latency_s,overhead_pct,corrections,monitoring_debt\n";
  auto csv = [](const std::optional<double>& v) { return v ? cell(v, 6) : std::string(); };
  for (const auto& s : summarize(reports)) {
    out << s.suite << "," << s.task << "," << s.runs << "," << s.pairs << ","
        << csv(s.baseline_score) << "," << csv(s.monitored_score) << "," << csv(s.improvement)
        << "," << csv(s.baseline_latency) << "," << csv(s.monitored_latency) << ","
        << csv(s.overhead) << "," << csv(s.corrections) << "," << csv(s.debt) << "\n";
  }
  return out.str();
}

MetricsRow row_from_record(const std::string& task, std::uint64_t seed,
                           const ExecutionRecord& record, std::optional<double> expected) {
  MetricsRow row;
  row.task = task;
  row.seed = seed;
  row.monitored = record.monitored;
  row.latency_s = static_cast<double>(record.critical_path_ns) * 1e-9;
  row.corrections = record.correction_count;
  row.monitoring_debt = record.monitoring_debt;
  row.degraded = record.degraded;
  if (expected) {
    const double value = payload_value(record.final_output);
    const double rel = std::abs(value - *expected) / std::max(std::abs(*expected), 1e-300);
    row.score = rel <= 1e-12 ? 1.0 : 0.0;
    row.extra["relative_error"] = rel;
  }
  return row;
}

}  // namespace vigil
