#include "vigil/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "vigil/remote.hpp"

namespace vigil {

namespace {

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      json out = json::array();
      for (const auto& item : node) out.push_back(yaml_to_json(item));
      return out;
    }
    case YAML::NodeType::Map: {
      json out = json::object();
      for (const auto& item : node) out[item.first.as<std::string>()] = yaml_to_json(item.second);
      return out;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string text = node.Scalar();
  // Quoted scalars carry the "!" tag and stay strings.
  if (node.Tag() == "!") return text;
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (text == "null" || text == "~") return nullptr;
  try {
    std::size_t used = 0;
    long long integer = std::stoll(text, &used);
    if (used == text.size()) return integer;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    double number = std::stod(text, &used);
    if (used == text.size()) return number;
  } catch (const std::exception&) {
  }
  return text;
}

std::string type_name(const json& j) { return j.type_name(); }

const json* find(const json& obj, const char* key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object, got " + type_name(j));
}

double number(const json& obj, const char* key, const std::string& path, double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + "." + key, "expected a number, got " + type_name(*v));
  return v->get<double>();
}

std::uint64_t count(const json& obj, const char* key, const std::string& path,
                    std::uint64_t fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || v->get<long long>() < 0)
    fail(path + "." + key, "expected a non-negative integer");
  return v->get<std::uint64_t>();
}

std::optional<std::uint64_t> optional_count(const json& obj, const char* key,
                                            const std::string& path) {
  if (!find(obj, key)) return std::nullopt;
  return count(obj, key, path, 0);
}

std::string text(const json& obj, const char* key, const std::string& path,
                 const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(path + "." + key, "expected a string, got " + type_name(*v));
  return v->get<std::string>();
}

std::string required_text(const json& obj, const char* key, const std::string& path) {
  if (!find(obj, key)) fail(path + "." + key, "required");
  return text(obj, key, path, "");
}

bool flag(const json& obj, const char* key, const std::string& path, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "expected a boolean, got " + type_name(*v));
  return v->get<bool>();
}

template <typename Fn>
auto parse_enum(const std::string& value, const std::string& path, Fn fn) {
  try {
    return fn(value);
  } catch (const std::exception& e) {
    fail(path, e.what());
  }
}

EnsembleConfig parse_ensemble(const json& j, const std::string& path) {
  expect_object(j, path);
  EnsembleConfig ensemble;
  const json* members = find(j, "members");
  if (!members || !members->is_array()) fail(path + ".members", "expected a list of members");
  for (std::size_t i = 0; i < members->size(); ++i) {
    const std::string mpath = path + ".members[" + std::to_string(i) + "]";
    const json& m = (*members)[i];
    expect_object(m, mpath);
    ensemble.members.push_back(
        EnsembleMember{required_text(m, "backend", mpath), text(m, "architecture", mpath, "")});
  }
  ensemble.execution_architecture = text(j, "execution_architecture", path, "");
  if (const json* t = find(j, "thresholds")) {
    expect_object(*t, path + ".thresholds");
    ensemble.disagreement_threshold =
        number(*t, "disagreement", path + ".thresholds", ensemble.disagreement_threshold);
    ensemble.entropy_threshold = number(*t, "entropy", path + ".thresholds", ensemble.entropy_threshold);
  }
  return ensemble;
}

MonitorConfig parse_monitor(const json& j, const std::string& path, const NodeId& node,
                            BackendRegistry& backends) {
  expect_object(j, path);
  MonitorConfig m;
  m.mode = parse_enum(text(j, "mode", path, "single"), path + ".mode", monitor_mode_from_string);
  m.threshold = number(j, "threshold", path, m.threshold);
  m.max_corrections = static_cast<std::uint32_t>(count(j, "max_corrections", path, m.max_corrections));
  m.activation = parse_enum(text(j, "activation", path, "always"), path + ".activation",
                            activation_from_string);
  m.activation_cutoff = number(j, "activation_cutoff", path, m.activation_cutoff);
  if (const json* e = find(j, "ensemble")) {
    if (e->is_string()) {
      m.ensemble = e->get<std::string>();
    } else {
      const std::string name = node + ".ensemble";
      backends.add_ensemble(name, parse_ensemble(*e, path + ".ensemble"));
      m.ensemble = name;
    }
  }
  m.backend = text(j, "backend", path, "");
  if (m.backend.empty()) {
    if (m.mode == MonitorMode::Hcv && m.ensemble)
      m.backend = *m.ensemble;
    else
      fail(path + ".backend", "required");
  }
  return m;
}

SimErrorModel parse_error_model(const json& j, const std::string& path) {
  expect_object(j, path);
  SimErrorModel e;
  e.probability = number(j, "probability", path, e.probability);
  e.kind = parse_enum(text(j, "kind", path, "value-scale"), path + ".kind",
                      perturbation_kind_from_string);
  e.magnitude = number(j, "magnitude", path, e.magnitude);
  if (!(e.probability >= 0.0 && e.probability <= 1.0))
    fail(path + ".probability", "must lie in [0, 1]");
  return e;
}

SimNodeSpec parse_sim_node(const json& j, const std::string& path, SimNodeSpec node) {
  expect_object(j, path);
  node.op = parse_enum(text(j, "op", path, std::string(to_string(node.op))), path + ".op",
                       sim_op_from_string);
  node.constant = number(j, "constant", path, node.constant);
  node.latency_ms = number(j, "latency_ms", path, node.latency_ms);
  if (const json* e = find(j, "error")) node.error = parse_error_model(*e, path + ".error");
  return node;
}

RemoteEndpointConfig parse_remote(const json& j, const std::string& path) {
  RemoteEndpointConfig r;
  r.base_url = text(j, "base_url", path, "");
  if (const std::string env = text(j, "base_url_env", path, ""); !env.empty()) {
    if (const char* value = std::getenv(env.c_str())) r.base_url = value;
  }
  if (r.base_url.empty()) fail(path + ".base_url", "required (directly or via base_url_env)");
  r.path = text(j, "path", path, r.path);
  r.model = text(j, "model", path, r.model);
  r.timeout = std::chrono::milliseconds(count(j, "timeout_ms", path, r.timeout.count()));
  r.retries = static_cast<std::uint32_t>(count(j, "retries", path, r.retries));
  r.backoff = std::chrono::milliseconds(count(j, "backoff_ms", path, r.backoff.count()));
  r.credential_env = text(j, "credential_env", path, "");
  r.max_in_flight = count(j, "max_in_flight", path, r.max_in_flight);
  r.temperature = number(j, "temperature", path, r.temperature);
  try {
    r.validate();
  } catch (const Error& e) {
    fail(path, e.what());
  }
  return r;
}

void parse_backends(const json& j, Workflow& wf, bool sleep) {
  expect_object(j, "backends");
  for (const auto& [name, spec] : j.items()) {
    const std::string path = "backends." + name;
    expect_object(spec, path);
    const std::string type = required_text(spec, "type", path);
    const double latency = number(spec, "latency_ms", path, 0.0);
    const bool needs_sim = type != "remote";
    if (needs_sim && !wf.sim) fail(path, "backend type '" + type + "' needs a sim section");
    if (type == "sim") {
      wf.backends.add_agent(name, std::make_shared<SimAgentBackend>(wf.sim, sleep));
    } else if (type == "oracle") {
      wf.backends.add_monitor(name, std::make_shared<OracleMonitor>(wf.sim, latency));
    } else if (type == "stochastic") {
      wf.backends.add_monitor(
          name, std::make_shared<StochasticMonitor>(wf.sim, number(spec, "sensitivity", path, 1.0),
                                                    number(spec, "false_positive", path, 0.0),
                                                    latency));
    } else if (type == "biased") {
      wf.backends.add_monitor(name, std::make_shared<BiasedMonitor>(wf.sim, latency));
    } else if (type == "remote") {
      const std::string role = text(spec, "role", path, "agent");
      auto remote = parse_remote(spec, path);
      if (role == "agent")
        wf.backends.add_agent(name, std::make_shared<RemoteAgentBackend>(remote));
      else if (role == "monitor")
        wf.backends.add_monitor(name, std::make_shared<RemoteMonitorBackend>(remote));
      else
        fail(path + ".role", "expected 'agent' or 'monitor', got '" + role + "'");
    } else {
      fail(path + ".type", "unknown backend type '" + type + "'");
    }
  }
}

ChaosSpec parse_chaos(const json& j) {
  if (!j.is_array()) fail("chaos", "expected a list of edge entries");
  ChaosSpec spec;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "chaos[" + std::to_string(i) + "]";
    const json& entry = j[i];
    expect_object(entry, path);
    Edge edge{required_text(entry, "from", path), required_text(entry, "to", path)};
    const json* actions = find(entry, "actions");
    if (!actions || !actions->is_array()) fail(path + ".actions", "expected a list");
    for (std::size_t a = 0; a < actions->size(); ++a) {
      const std::string apath = path + ".actions[" + std::to_string(a) + "]";
      const json& aj = (*actions)[a];
      expect_object(aj, apath);
      ChaosAction action;
      action.kind = parse_enum(required_text(aj, "kind", apath), apath + ".kind",
                               chaos_kind_from_string);
      action.probability = number(aj, "probability", apath, action.probability);
      action.delay_ms = number(aj, "delay_ms", apath, action.delay_ms);
      action.field = text(aj, "field", apath, action.field);
      action.delta = number(aj, "delta", apath, action.delta);
      spec.edges[edge].push_back(action);
    }
  }
  return spec;
}

void parse_run(const json& j, Workflow& wf, const std::filesystem::path& base_dir) {
  expect_object(j, "run");
  RunConfig& run = wf.run;
  run.seed = count(j, "seed", "run", run.seed);
  if (auto r = optional_count(j, "correction_budget", "run"))
    run.correction_budget = static_cast<std::uint32_t>(*r);
  if (find(j, "threshold")) run.threshold = number(j, "threshold", "run", 0.0);
  if (const json* t = find(j, "thresholds")) {
    expect_object(*t, "run.thresholds");
    if (find(*t, "monitor")) run.threshold = number(*t, "monitor", "run.thresholds", 0.0);
    if (const json* c = find(*t, "dimensions")) {
      if (!c->is_array() || c->size() != 3)
        fail("run.thresholds.dimensions", "expected three cutoffs");
      for (std::size_t i = 0; i < 3; ++i) run.classify.cutoffs[i] = (*c)[i].get<double>();
    }
  }
  run.monitoring = flag(j, "monitoring", "run", run.monitoring);
  run.synchronous_monitoring = flag(j, "synchronous_monitoring", "run", run.synchronous_monitoring);
  run.parallel_ensemble = flag(j, "parallel_ensemble", "run", run.parallel_ensemble);
  if (const json* brp = find(j, "brp")) {
    expect_object(*brp, "run.brp");
    run.brp_max_rounds = count(*brp, "max_rounds", "run.brp", run.brp_max_rounds);
    run.brp_window = count(*brp, "window", "run.brp", run.brp_window);
  }
  if (auto b = optional_count(j, "snapshot_budget", "run")) run.snapshot_budget = *b;
  run.signature_repetitions = count(j, "signature_repetitions", "run", run.signature_repetitions);
  if (const json* agg = find(j, "aggregation")) {
    expect_object(*agg, "run.aggregation");
    const std::string kind = text(*agg, "kind", "run.aggregation", "min");
    if (kind == "min") {
      run.aggregation = AggregationRule::min();
    } else if (kind == "weighted") {
      const json* w = find(*agg, "weights");
      if (!w || !w->is_array() || w->size() != 3)
        fail("run.aggregation.weights", "expected three weights");
      run.aggregation = AggregationRule::weighted((*w)[0].get<double>(), (*w)[1].get<double>(),
                                                  (*w)[2].get<double>());
    } else {
      fail("run.aggregation.kind", "expected 'min' or 'weighted', got '" + kind + "'");
    }
  }
  if (const json* t = find(j, "templates")) {
    expect_object(*t, "run.templates");
    const std::string version = text(*t, "version", "run.templates", "v1");
    const std::string dir = text(*t, "dir", "run.templates", "");
    try {
      run.templates = dir.empty() ? AugmentationTemplates::builtin()
                                  : AugmentationTemplates::load(base_dir / dir, version);
    } catch (const Error& e) {
      fail("run.templates", e.what());
    }
  }
  if (const std::string dir = text(j, "snapshot_dir", "run", ""); !dir.empty())
    wf.snapshot_dir = base_dir / dir;
  run.run_id = text(j, "run_id", "run", run.run_id);
  try {
    run.validate();
  } catch (const Error& e) {
    fail("run", e.what());
  }
}

std::string default_template(const WorkflowGraph& graph, const NodeId& id) {
  const auto parents = graph.parents(id);
  if (parents.empty()) return "{input}";
  std::string out;
  for (const auto& p : parents) out += (out.empty() ? "" : "\n") + ("{" + p + "}");
  return out;
}

}  // namespace

json parse_yaml(const std::string& text) {
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed YAML: ") + e.what());
  }
}

json load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open workflow file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const auto ext = path.extension().string();
  if (ext == ".yaml" || ext == ".yml") return parse_yaml(buffer.str());
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

Workflow parse_workflow(const json& doc, const std::filesystem::path& base_dir) {
  expect_object(doc, "document");
  Workflow wf;
  wf.name = text(doc, "name", "document", "workflow");

  const json* nodes = find(doc, "nodes");
  if (!nodes) fail("nodes", "required");
  std::vector<std::pair<std::string, json>> node_entries;
  if (nodes->is_array()) {
    for (std::size_t i = 0; i < nodes->size(); ++i) {
      const std::string path = "nodes[" + std::to_string(i) + "]";
      expect_object((*nodes)[i], path);
      node_entries.emplace_back(path, (*nodes)[i]);
    }
  } else if (nodes->is_object()) {
    for (const auto& [id, spec] : nodes->items()) {
      json entry = spec.is_null() ? json::object() : spec;
      expect_object(entry, "nodes." + id);
      entry["id"] = id;
      node_entries.emplace_back("nodes." + id, entry);
    }
  } else {
    fail("nodes", "expected a list or a map");
  }

  if (const json* edges = find(doc, "edges")) {
    if (!edges->is_array()) fail("edges", "expected a list");
    for (std::size_t i = 0; i < edges->size(); ++i) {
      const std::string path = "edges[" + std::to_string(i) + "]";
      const json& e = (*edges)[i];
      if (e.is_array() && e.size() == 2 && e[0].is_string() && e[1].is_string())
        wf.graph.edges.emplace(e[0].get<std::string>(), e[1].get<std::string>());
      else if (e.is_object())
        wf.graph.edges.emplace(required_text(e, "from", path), required_text(e, "to", path));
      else
        fail(path, "expected [from, to] or {from, to}");
    }
  }

  for (const auto& [path, entry] : node_entries) {
    NodeSpec spec;
    spec.id = required_text(entry, "id", path);
    if (wf.graph.contains(spec.id)) fail(path + ".id", "duplicate node '" + spec.id + "'");
    spec.backend = required_text(entry, "backend", path);
    spec.prompt_template = text(entry, "prompt_template", path, "");
    spec.role = text(entry, "role", path, "");
    wf.graph.nodes.emplace(spec.id, spec);
  }
  for (auto& [id, spec] : wf.graph.nodes)
    if (spec.prompt_template.empty()) spec.prompt_template = default_template(wf.graph, id);

  bool sleep = true;
  if (const json* sim = find(doc, "sim")) {
    expect_object(*sim, "sim");
    SimTaskSpec spec;
    spec.input_value = number(*sim, "input", "sim", 1.0);
    sleep = flag(*sim, "sleep", "sim", true);
    SimNodeSpec defaults;
    if (const json* d = find(*sim, "defaults")) defaults = parse_sim_node(*d, "sim.defaults", defaults);
    const json* sim_nodes = find(*sim, "nodes");
    if (sim_nodes) expect_object(*sim_nodes, "sim.nodes");
    for (const auto& [id, node] : wf.graph.nodes) {
      (void)node;
      const json* n = sim_nodes ? find(*sim_nodes, id.c_str()) : nullptr;
      spec.nodes[id] = n ? parse_sim_node(*n, "sim.nodes." + id, defaults) : defaults;
      spec.parents[id] = wf.graph.parents(id);
    }
    if (sim_nodes)
      for (const auto& [id, node] : sim_nodes->items())
        if (!wf.graph.contains(id)) fail("sim.nodes." + id, "no such node in the graph");
    wf.sim = std::make_shared<const SimTaskSpec>(std::move(spec));
  }

  if (const json* ensembles = find(doc, "ensembles")) {
    expect_object(*ensembles, "ensembles");
    for (const auto& [name, e] : ensembles->items())
      wf.backends.add_ensemble(name, parse_ensemble(e, "ensembles." + name));
  }
  if (const json* backends = find(doc, "backends")) parse_backends(*backends, wf, sleep);

  for (const auto& [path, entry] : node_entries)
    if (const json* monitor = find(entry, "monitor")) {
      const NodeId id = entry.at("id").get<std::string>();
      wf.graph.nodes.at(id).monitor = parse_monitor(*monitor, path + ".monitor", id, wf.backends);
    }

  if (const json* run = find(doc, "run")) parse_run(*run, wf, base_dir);
  if (const json* chaos = find(doc, "chaos")) wf.run.chaos = parse_chaos(*chaos);

  if (const json* input = find(doc, "input")) {
    if (input->is_number())
      wf.input = sim_payload(input->get<double>());
    else if (input->is_string())
      wf.input.content = input->get<std::string>();
    else
      wf.input = input->get<Payload>();
  } else if (wf.sim) {
    wf.input = sim_payload(wf.sim->input_value);
  }
  return wf;
}

Workflow load_workflow(const std::filesystem::path& path) {
  return parse_workflow(load_document(path), path.parent_path());
}

}  // namespace vigil
