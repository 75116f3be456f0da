#include "vigil/chaos.hpp"

#include <chrono>
#include <sstream>
#include <thread>

#include "vigil/rng.hpp"
#include "vigil/sim.hpp"

namespace vigil {

std::string_view to_string(ChaosAction::Kind kind) {
  switch (kind) {
    case ChaosAction::Kind::Delay: return "delay";
    case ChaosAction::Kind::Tamper: return "tamper";
    case ChaosAction::Kind::Drop: return "drop";
  }
  return "delay";
}

ChaosAction::Kind chaos_kind_from_string(std::string_view text) {
  if (text == "delay") return ChaosAction::Kind::Delay;
  if (text == "tamper") return ChaosAction::Kind::Tamper;
  if (text == "drop") return ChaosAction::Kind::Drop;
  throw Error("unknown chaos action: " + std::string(text));
}

ChaosResult inject_chaos(const ChaosSpec& spec, const Edge& edge, const Payload& payload,
                         std::uint64_t seed, bool sleep) {
  ChaosResult result;
  result.payload = payload;
  auto it = spec.edges.find(edge);
  if (it == spec.edges.end()) return result;
  const std::string label = "chaos:" + edge.first + ">" + edge.second;
  for (std::size_t i = 0; i < it->second.size(); ++i) {
    const ChaosAction& action = it->second[i];
    if (!(Rng(derive_seed(seed, label, i)).uniform() < action.probability)) continue;
    std::ostringstream event;
    event << to_string(action.kind) << " " << edge.first << "->" << edge.second;
    switch (action.kind) {
      case ChaosAction::Kind::Delay:
        result.delayed_ms = action.delay_ms;
        if (sleep && action.delay_ms > 0.0)
          std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(action.delay_ms));
        event << " " << action.delay_ms << "ms";
        break;
      case ChaosAction::Kind::Tamper: {
        Payload& p = *result.payload;
        const double before = p.field(action.field).value_or(0.0);
        const double after = before + action.delta;
        p.structured[action.field] = after;
        if (action.field == "value") p.content = sim_content(after);
        event << " " << action.field << " " << before << " -> " << after;
        break;
      }
      case ChaosAction::Kind::Drop:
        result.payload.reset();
        break;
    }
    result.event = event.str();
    break;
  }
  return result;
}

}  // namespace vigil
