#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vigil/types.hpp"

namespace vigil {

struct ChaosAction {
  enum class Kind { Delay, Tamper, Drop };
  Kind kind = Kind::Delay;
  /// Chance that the action fires on one traversal.
  double probability = 1.0;
  double delay_ms = 0.0;
  std::string field = "value";
  double delta = 0.0;
};

std::string_view to_string(ChaosAction::Kind kind);
ChaosAction::Kind chaos_kind_from_string(std::string_view text);

using Edge = std::pair<NodeId, NodeId>;

struct ChaosSpec {
  std::map<Edge, std::vector<ChaosAction>> edges;

  bool empty() const { return edges.empty(); }
};

struct ChaosResult {
  /// Empty when the payload was dropped.
  std::optional<Payload> payload;
  std::optional<std::string> event;
  double delayed_ms = 0.0;
};

/// Applies at most one action to a payload crossing `edge`: actions are tried
/// in order and the first whose seeded draw falls below its probability
/// fires. Tampering the `value` field also rewrites the canonical content.
/// Delays sleep the caller when `sleep` is set.
ChaosResult inject_chaos(const ChaosSpec& spec, const Edge& edge, const Payload& payload,
                         std::uint64_t seed, bool sleep = true);

}  // namespace vigil
