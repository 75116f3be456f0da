#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace vigil {

/// Sampling-side changes requested for a re-dispatched attempt.
struct PerturbationDirective {
  std::uint32_t seed_offset = 0;
  double temperature_delta = 0.0;
  std::vector<std::string> avoid_digests;

  bool avoids(const std::string& digest) const {
    return std::find(avoid_digests.begin(), avoid_digests.end(), digest) != avoid_digests.end();
  }
  bool operator==(const PerturbationDirective&) const = default;
};

}  // namespace vigil
