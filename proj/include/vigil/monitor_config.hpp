#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace vigil {

enum class MonitorMode { Single, Brp, Hcv };
enum class Activation { Always, OnLowUpstreamConfidence };

std::string_view to_string(MonitorMode mode);
MonitorMode monitor_mode_from_string(std::string_view text);
std::string_view to_string(Activation activation);
Activation activation_from_string(std::string_view text);

/// How a node is monitored. `backend` names a monitor backend, or an ensemble
/// when mode is Hcv. `ensemble` is the optional escalation ensemble used after
/// a reflection oscillation in Brp mode.
struct MonitorConfig {
  std::string backend;
  double threshold = 0.7;
  std::uint32_t max_corrections = 3;
  MonitorMode mode = MonitorMode::Single;
  Activation activation = Activation::Always;
  double activation_cutoff = 0.9;
  std::optional<std::string> ensemble;

  bool operator==(const MonitorConfig&) const = default;
};

}  // namespace vigil
