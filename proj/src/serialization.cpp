#include "vigil/serialization.hpp"

namespace vigil {

void to_json(json& j, const Epoch& epoch) { j = epoch.counter; }
void from_json(const json& j, Epoch& epoch) { epoch.counter = j.get<std::uint64_t>(); }

void to_json(json& j, const SnapshotKey& key) {
  j = json{{"node", key.node}, {"epoch", key.epoch}, {"attempt", key.attempt}};
}
void from_json(const json& j, SnapshotKey& key) {
  j.at("node").get_to(key.node);
  j.at("epoch").get_to(key.epoch);
  j.at("attempt").get_to(key.attempt);
}

void to_json(json& j, const Provenance& provenance) {
  j = json{{"node", provenance.node}, {"epoch", provenance.epoch}, {"attempt", provenance.attempt}};
}
void from_json(const json& j, Provenance& provenance) {
  j.at("node").get_to(provenance.node);
  j.at("epoch").get_to(provenance.epoch);
  j.at("attempt").get_to(provenance.attempt);
}

void to_json(json& j, const Payload& payload) {
  j = json{{"content", payload.content},
           {"structured", payload.structured},
           {"provenance", payload.provenance}};
}
void from_json(const json& j, Payload& payload) {
  j.at("content").get_to(payload.content);
  payload.structured = j.value("structured", std::map<std::string, double>{});
  j.at("provenance").get_to(payload.provenance);
}

void to_json(json& j, const DimensionScores& scores) {
  j = json{{"logical_consistency", scores.logical_consistency},
           {"format_compliance", scores.format_compliance},
           {"content_completeness", scores.content_completeness}};
}
void from_json(const json& j, DimensionScores& scores) {
  j.at("logical_consistency").get_to(scores.logical_consistency);
  j.at("format_compliance").get_to(scores.format_compliance);
  j.at("content_completeness").get_to(scores.content_completeness);
}

void to_json(json& j, const Verdict& verdict) {
  j = json{{"key", verdict.key},
           {"category", std::string(to_string(verdict.category))},
           {"scores", verdict.scores},
           {"confidence", verdict.confidence},
           {"quality", verdict.quality},
           {"rationale", verdict.rationale},
           {"pass", verdict.pass},
           {"monitor_unavailable", verdict.monitor_unavailable}};
}
void from_json(const json& j, Verdict& verdict) {
  j.at("key").get_to(verdict.key);
  verdict.category = category_from_string(j.at("category").get<std::string>());
  j.at("scores").get_to(verdict.scores);
  j.at("confidence").get_to(verdict.confidence);
  j.at("quality").get_to(verdict.quality);
  j.at("rationale").get_to(verdict.rationale);
  j.at("pass").get_to(verdict.pass);
  verdict.monitor_unavailable = j.value("monitor_unavailable", false);
}

void to_json(json& j, const Snapshot& snapshot) {
  j = json{{"node", snapshot.node},
           {"epoch", snapshot.epoch},
           {"attempt", snapshot.attempt},
           {"input", snapshot.input},
           {"output", snapshot.output},
           {"prompt_history", snapshot.prompt_history},
           {"reasoning_trace", snapshot.reasoning_trace},
           {"diagnostics", snapshot.diagnostics},
           {"timestamp_ns", snapshot.timestamp_ns},
           {"upstream", snapshot.upstream}};
}
void from_json(const json& j, Snapshot& snapshot) {
  j.at("node").get_to(snapshot.node);
  j.at("epoch").get_to(snapshot.epoch);
  j.at("attempt").get_to(snapshot.attempt);
  j.at("input").get_to(snapshot.input);
  j.at("output").get_to(snapshot.output);
  j.at("prompt_history").get_to(snapshot.prompt_history);
  j.at("reasoning_trace").get_to(snapshot.reasoning_trace);
  j.at("diagnostics").get_to(snapshot.diagnostics);
  j.at("timestamp_ns").get_to(snapshot.timestamp_ns);
  snapshot.upstream = j.value("upstream", std::vector<Provenance>{});
}

json pack_payload(const Payload& p) {
  return json::array({p.content, p.structured, p.provenance.node, p.provenance.epoch.counter,
                      p.provenance.attempt});
}

Payload unpack_payload(const json& j) {
  if (j.is_object()) return j.get<Payload>();
  Payload p;
  j.at(0).get_to(p.content);
  j.at(1).get_to(p.structured);
  j.at(2).get_to(p.provenance.node);
  p.provenance.epoch.counter = j.at(3).get<std::uint64_t>();
  j.at(4).get_to(p.provenance.attempt);
  return p;
}

json pack_verdict(const Verdict& v) {
  const int flags = (v.pass ? 1 : 0) | (v.monitor_unavailable ? 2 : 0);
  return json::array({v.key.node, v.key.epoch.counter, v.key.attempt, static_cast<int>(v.category),
                      v.scores.logical_consistency, v.scores.format_compliance,
                      v.scores.content_completeness, v.confidence, v.quality, v.rationale, flags});
}

Verdict unpack_verdict(const json& j) {
  if (j.is_object()) return j.get<Verdict>();
  Verdict v;
  j.at(0).get_to(v.key.node);
  v.key.epoch.counter = j.at(1).get<std::uint64_t>();
  j.at(2).get_to(v.key.attempt);
  const int category = j.at(3).get<int>();
  if (category < 0 || category > static_cast<int>(ErrorCategory::Systematic))
    throw Error("encoded verdict has an unknown category");
  v.category = static_cast<ErrorCategory>(category);
  j.at(4).get_to(v.scores.logical_consistency);
  j.at(5).get_to(v.scores.format_compliance);
  j.at(6).get_to(v.scores.content_completeness);
  j.at(7).get_to(v.confidence);
  j.at(8).get_to(v.quality);
  j.at(9).get_to(v.rationale);
  const int flags = j.at(10).get<int>();
  v.pass = flags & 1;
  v.monitor_unavailable = flags & 2;
  return v;
}

namespace {

constexpr int kSnapshotLayout = 1;

}  // namespace

std::vector<std::uint8_t> encode_snapshot(const Snapshot& s) {
  json diagnostics = json::array();
  for (const auto& v : s.diagnostics) diagnostics.push_back(pack_verdict(v));
  json upstream = json::array();
  for (const auto& p : s.upstream) upstream.push_back(json::array({p.node, p.epoch.counter, p.attempt}));
  return json::to_msgpack(json::array({kSnapshotLayout, s.node, s.epoch.counter, s.attempt,
                                       pack_payload(s.input), pack_payload(s.output),
                                       s.prompt_history, s.reasoning_trace, diagnostics,
                                       s.timestamp_ns, upstream}));
}

Snapshot decode_snapshot(const std::vector<std::uint8_t>& bytes) {
  const json j = json::from_msgpack(bytes);
  if (j.is_object()) return j.get<Snapshot>();
  if (j.at(0).get<int>() != kSnapshotLayout) throw Error("unknown snapshot layout");
  Snapshot s;
  j.at(1).get_to(s.node);
  s.epoch.counter = j.at(2).get<std::uint64_t>();
  j.at(3).get_to(s.attempt);
  s.input = unpack_payload(j.at(4));
  s.output = unpack_payload(j.at(5));
  j.at(6).get_to(s.prompt_history);
  j.at(7).get_to(s.reasoning_trace);
  for (const auto& v : j.at(8)) s.diagnostics.push_back(unpack_verdict(v));
  j.at(9).get_to(s.timestamp_ns);
  for (const auto& p : j.at(10))
    s.upstream.push_back(Provenance{p.at(0).get<NodeId>(), Epoch{p.at(1).get<std::uint64_t>()},
                                    p.at(2).get<std::uint32_t>()});
  return s;
}

std::vector<std::uint8_t> encode_verdict(const Verdict& verdict) {
  return json::to_msgpack(pack_verdict(verdict));
}

Verdict decode_verdict(const std::vector<std::uint8_t>& bytes) {
  return unpack_verdict(json::from_msgpack(bytes));
}

}  // namespace vigil
