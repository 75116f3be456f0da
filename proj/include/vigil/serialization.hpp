#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "vigil/types.hpp"

namespace vigil {

using json = nlohmann::json;

void to_json(json& j, const Epoch& epoch);
void from_json(const json& j, Epoch& epoch);
void to_json(json& j, const SnapshotKey& key);
void from_json(const json& j, SnapshotKey& key);
void to_json(json& j, const Provenance& provenance);
void from_json(const json& j, Provenance& provenance);
void to_json(json& j, const Payload& payload);
void from_json(const json& j, Payload& payload);
void to_json(json& j, const DimensionScores& scores);
void from_json(const json& j, DimensionScores& scores);
void to_json(json& j, const Verdict& verdict);
void from_json(const json& j, Verdict& verdict);
void to_json(json& j, const Snapshot& snapshot);
void from_json(const json& j, Snapshot& snapshot);

/// Positional array forms used by the on-disk log. The unpack functions also
/// accept the keyed object form.
json pack_payload(const Payload& payload);
Payload unpack_payload(const json& j);
json pack_verdict(const Verdict& verdict);
Verdict unpack_verdict(const json& j);

/// MessagePack of the positional forms.
std::vector<std::uint8_t> encode_snapshot(const Snapshot& snapshot);
Snapshot decode_snapshot(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_verdict(const Verdict& verdict);
Verdict decode_verdict(const std::vector<std::uint8_t>& bytes);

}  // namespace vigil
