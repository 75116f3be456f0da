#include "vigil/types.hpp"

#include <chrono>
#include <cstdio>

namespace vigil {

std::string SnapshotKey::to_string() const {
  return node + "@" + std::to_string(epoch.counter) + "#" + std::to_string(attempt);
}

std::size_t SnapshotKeyHash::operator()(const SnapshotKey& key) const noexcept {
  std::size_t h = std::hash<std::string>{}(key.node);
  h ^= std::hash<std::uint64_t>{}(key.epoch.counter) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= std::hash<std::uint32_t>{}(key.attempt) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

std::optional<double> Payload::field(std::string_view name) const {
  auto it = structured.find(std::string(name));
  if (it == structured.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::None: return "none";
    case ErrorCategory::Logic: return "logic";
    case ErrorCategory::Format: return "format";
    case ErrorCategory::Content: return "content";
    case ErrorCategory::Systematic: return "systematic";
  }
  return "none";
}

ErrorCategory category_from_string(std::string_view text) {
  if (text == "none") return ErrorCategory::None;
  if (text == "logic") return ErrorCategory::Logic;
  if (text == "format") return ErrorCategory::Format;
  if (text == "content") return ErrorCategory::Content;
  if (text == "systematic") return ErrorCategory::Systematic;
  throw Error("unknown error category: " + std::string(text));
}

bool DimensionScores::valid() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  return in_unit(logical_consistency) && in_unit(format_compliance) &&
         in_unit(content_completeness);
}

std::string digest(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 16);
}

std::string canonical_form(const Payload& payload) {
  std::string out = payload.content;
  out.push_back('\x1f');
  char buf[64];
  for (const auto& [name, value] : payload.structured) {
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    out += name;
    out.push_back('=');
    out += buf;
    out.push_back('\x1e');
  }
  return out;
}

std::string output_digest(const Payload& payload) { return digest(canonical_form(payload)); }

std::int64_t monotonic_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace vigil
