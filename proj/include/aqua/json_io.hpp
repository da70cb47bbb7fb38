// JSON shapes shared by the batch CLI and the HTTP service. Field order is
// stable so identical results serialize byte-for-byte identically.

#pragma once

#include <json.hpp>

#include "aqua/advisor.hpp"
#include "aqua/engine.hpp"
#include "aqua/kb.hpp"

namespace aqua::json_io {

using Json = nlohmann::ordered_json;

/// Requires temperature_f, ph, hardness_dgh and tank_size_gal. Optional:
/// has_hiding_places (false), residents ([]), stocking_ratio (residents per
/// gallon when absent). Throws kb::ValidationError naming the field.
kb::TankState tank_from_json(const Json& doc);
Json tank_to_json(const kb::TankState& tank);

Json fact_to_json(const engine::Fact& fact);
Json pair_to_json(const advisor::PairScore& pair);
Json group_to_json(const advisor::SuggestionGroup& group);
Json groups_to_json(std::span<const advisor::SuggestionGroup> groups);
Json elimination_to_json(const advisor::EliminationRecord& record);

/// `fnv1a64:<hex>` digest of the line-JSON trace export.
std::string trace_ref(std::span<const engine::TraceEvent> trace);

/// {adequate, eliminated, groups, warnings, trace_ref}
Json result_to_json(const advisor::ConsultationResult& result);

Json explanation_to_json(const engine::ExplanationNode& node);
Json profile_to_json(const kb::FishProfile& profile);

/// Byte offset to 1-based line and column, for parse error messages.
std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte_offset);

}  // namespace aqua::json_io
