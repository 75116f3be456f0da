#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vigil {

/// Base class for all errors raised by the runtime.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using NodeId = std::string;

/// Per-run version counter. Bumped exactly once per applied rollback.
struct Epoch {
  std::uint64_t counter = 0;

  constexpr Epoch next() const { return Epoch{counter + 1}; }
  auto operator<=>(const Epoch&) const = default;
};

struct SnapshotKey {
  NodeId node;
  Epoch epoch;
  std::uint32_t attempt = 0;

  auto operator<=>(const SnapshotKey&) const = default;
  std::string to_string() const;
};

struct SnapshotKeyHash {
  std::size_t operator()(const SnapshotKey& key) const noexcept;
};

/// Who produced a payload. The run input carries an empty node id.
struct Provenance {
  NodeId node;
  Epoch epoch;
  std::uint32_t attempt = 0;

  bool operator==(const Provenance&) const = default;
};

struct Payload {
  std::string content;
  std::map<std::string, double> structured;
  Provenance provenance;

  bool operator==(const Payload&) const = default;

  std::optional<double> field(std::string_view name) const;
};

enum class ErrorCategory { None, Logic, Format, Content, Systematic };

std::string_view to_string(ErrorCategory category);
ErrorCategory category_from_string(std::string_view text);

struct DimensionScores {
  double logical_consistency = 1.0;
  double format_compliance = 1.0;
  double content_completeness = 1.0;

  bool operator==(const DimensionScores&) const = default;
  bool valid() const;
};

/// A monitor judgment for one (node, epoch, attempt).
///
/// `confidence` is the monitor's certainty in its own judgment: the aggregated
/// score for a pass, one minus the aggregated score for a fail. `quality` is
/// the aggregated score itself and is what degraded commits rank by.
struct Verdict {
  SnapshotKey key;
  ErrorCategory category = ErrorCategory::None;
  DimensionScores scores;
  double confidence = 1.0;
  double quality = 1.0;
  std::string rationale;
  bool pass = true;
  bool monitor_unavailable = false;

  bool operator==(const Verdict&) const = default;
};

struct Snapshot {
  NodeId node;
  Epoch epoch;
  std::uint32_t attempt = 0;
  Payload input;
  Payload output;
  std::vector<std::string> prompt_history;
  std::string reasoning_trace;
  std::vector<Verdict> diagnostics;
  std::int64_t timestamp_ns = 0;
  std::vector<Provenance> upstream;

  SnapshotKey key() const { return SnapshotKey{node, epoch, attempt}; }
  bool operator==(const Snapshot&) const = default;
};

/// Stable 64-bit FNV-1a digest rendered as 16 hex characters.
std::string digest(std::string_view bytes);

/// Digest over the canonical form of a payload's content and structured
/// fields. Provenance is excluded so equal outputs from different attempts
/// share a digest.
std::string output_digest(const Payload& payload);

/// Canonical text rendering used for digests: content, then sorted fields
/// with round-trip precision.
std::string canonical_form(const Payload& payload);

std::int64_t monotonic_now_ns();

}  // namespace vigil
