#pragma once

#include "maptrix/maptrix_assembler.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace maptrix {

/// Documented layout structure: panels, matrix, orderings, leaders as
/// polylines, cells, glyphs and diagnostics. See docs/formats.md.
nlohmann::json layout_to_json(const MapTrixLayout& layout);

/// 64-bit FNV-1a over the compact JSON dump.
std::uint64_t layout_hash(const nlohmann::json& layout_json);
std::string hash_hex(std::uint64_t hash);

/// [{"group_id": "A", "members": ["NSW", "ACT"]}, ...]
std::vector<RegionGroup> groups_from_json(const nlohmann::json& j);
nlohmann::json groups_to_json(const std::vector<RegionGroup>& groups);

/// [{"origin": "QLD"}, {"destination": "NSW"}, {"origin": "QLD", "destination": "NSW"}]
std::vector<Highlight> highlights_from_json(const nlohmann::json& j);
nlohmann::json highlights_to_json(const std::vector<Highlight>& highlights);

nlohmann::json selection_to_json(const SelectionState& selection);

}  // namespace maptrix
