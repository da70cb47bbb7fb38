#include "aqua/json_io.hpp"

#include <cstdio>

namespace aqua::json_io {

namespace {

double required_number(const Json& doc, const char* field) {
  if (!doc.contains(field)) throw kb::ValidationError(field, std::string("missing field ") + field);
  const auto& v = doc[field];
  if (!v.is_number()) throw kb::ValidationError(field, std::string(field) + " must be a number");
  return v.get<double>();
}

}  // namespace

kb::TankState tank_from_json(const Json& doc) {
  if (!doc.is_object()) throw kb::ValidationError("", "tank state must be a JSON object");
  kb::TankState tank;
  tank.temperature_f = required_number(doc, "temperature_f");
  tank.ph = required_number(doc, "ph");
  tank.hardness_dgh = required_number(doc, "hardness_dgh");
  tank.tank_size_gal = required_number(doc, "tank_size_gal");

  if (doc.contains("has_hiding_places")) {
    if (!doc["has_hiding_places"].is_boolean())
      throw kb::ValidationError("has_hiding_places", "has_hiding_places must be a boolean");
    tank.has_hiding_places = doc["has_hiding_places"].get<bool>();
  }
  if (doc.contains("residents")) {
    const auto& r = doc["residents"];
    if (!r.is_array()) throw kb::ValidationError("residents", "residents must be an array of species ids");
    for (const auto& item : r) {
      if (!item.is_string()) throw kb::ValidationError("residents", "residents must be an array of species ids");
      tank.residents.push_back(item.get<std::string>());
    }
  }
  kb::validate(tank);  // tank size checked before it is used as a divisor
  if (doc.contains("stocking_ratio") && !doc["stocking_ratio"].is_null()) {
    tank.stocking_ratio = required_number(doc, "stocking_ratio");
  } else {
    tank.stocking_ratio = static_cast<double>(tank.residents.size()) / tank.tank_size_gal;
  }
  kb::validate(tank);
  return tank;
}

Json tank_to_json(const kb::TankState& tank) {
  Json out;
  out["temperature_f"] = tank.temperature_f;
  out["ph"] = tank.ph;
  out["hardness_dgh"] = tank.hardness_dgh;
  out["tank_size_gal"] = tank.tank_size_gal;
  out["has_hiding_places"] = tank.has_hiding_places;
  out["stocking_ratio"] = tank.stocking_ratio;
  out["residents"] = tank.residents;
  return out;
}

Json fact_to_json(const engine::Fact& fact) {
  Json slots = Json::object();
  for (const auto& [name, value] : fact.slots) {
    if (const auto* d = std::get_if<double>(&value)) slots[name] = *d;
    else slots[name] = std::get<std::string>(value);
  }
  Json out;
  out["id"] = fact.id;
  out["template"] = fact.templ;
  out["slots"] = std::move(slots);
  out["cf"] = fact.cf;
  return out;
}

Json pair_to_json(const advisor::PairScore& pair) {
  Json out;
  out["a"] = pair.a;
  out["b"] = pair.b;
  out["level"] = pair.base_level ? Json(std::string(1, kb::to_char(*pair.base_level))) : Json(nullptr);
  out["base_cf"] = pair.base_cf;
  out["adjusted_cf"] = pair.adjusted_cf;
  out["modifiers"] = pair.applied;
  if (pair.unknown_pair) out["unknown_pair"] = true;
  return out;
}

Json group_to_json(const advisor::SuggestionGroup& group) {
  Json out;
  out["members"] = group.names;
  out["ids"] = group.members;
  out["score"] = group.score;
  out["mean"] = group.mean;
  Json witness = Json::array();
  for (const auto& w : group.witness) witness.push_back(pair_to_json(w));
  out["witness"] = std::move(witness);
  return out;
}

Json groups_to_json(std::span<const advisor::SuggestionGroup> groups) {
  Json out = Json::array();
  for (const auto& g : groups) out.push_back(group_to_json(g));
  return out;
}

Json elimination_to_json(const advisor::EliminationRecord& record) {
  Json out;
  out["species"] = record.species;
  out["reason"] = std::string(advisor::to_string(record.reason));
  out["value"] = record.value;
  out["bound"] = record.bound;
  out["fact"] = record.fact;
  return out;
}

std::string trace_ref(std::span<const engine::TraceEvent> trace) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : engine::trace_to_jsonl(trace)) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return std::string("fnv1a64:") + buf;
}

Json result_to_json(const advisor::ConsultationResult& result) {
  Json out;
  out["adequate"] = result.adequate;
  Json eliminated = Json::array();
  for (const auto& e : result.eliminated) eliminated.push_back(elimination_to_json(e));
  out["eliminated"] = std::move(eliminated);
  out["groups"] = groups_to_json(result.groups);
  out["warnings"] = result.warnings;
  out["trace_ref"] = trace_ref(result.trace);
  return out;
}

Json explanation_to_json(const engine::ExplanationNode& node) {
  using Kind = engine::ExplanationNode::Kind;
  Json out;
  switch (node.kind) {
    case Kind::Given: out["kind"] = "given"; break;
    case Kind::Derived: out["kind"] = "derived"; break;
    case Kind::Retracted: out["kind"] = "retracted"; break;
    case Kind::Printed: out["kind"] = "printed"; break;
  }
  out["rule"] = node.rule.empty() ? Json(nullptr) : Json(node.rule);
  out["fact"] = node.fact ? fact_to_json(*node.fact) : Json(nullptr);
  out["text"] = node.fact ? engine::render_fact(*node.fact) : node.message;
  out["printed"] = node.printed;
  Json children = Json::array();
  for (const auto& c : node.children) children.push_back(explanation_to_json(c));
  out["children"] = std::move(children);
  return out;
}

Json profile_to_json(const kb::FishProfile& p) {
  Json out;
  out["id"] = p.id;
  out["name"] = p.name;
  out["family"] = p.family;
  out["life_span_years"] = p.life_span_years;
  out["min_tank_gal"] = p.min_tank_gal;
  out["temp_min_f"] = p.temp_min_f;
  out["temp_max_f"] = p.temp_max_f;
  out["ph_min"] = p.ph_min;
  out["ph_max"] = p.ph_max;
  out["hardness_min_dgh"] = p.hardness_min_dgh;
  out["hardness_max_dgh"] = p.hardness_max_dgh;
  return out;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte_offset) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < byte_offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace aqua::json_io

namespace aqua::engine {

std::string trace_to_jsonl(std::span<const TraceEvent> trace) {
  std::string out;
  for (const auto& e : trace) {
    json_io::Json line;
    line["ordinal"] = e.ordinal;
    line["kind"] = std::string(to_string(e.kind));
    line["rule"] = e.rule;
    line["fact"] = e.fact ? json_io::fact_to_json(*e.fact) : json_io::Json(nullptr);
    line["text"] = e.text;
    out += line.dump();
    out += '\n';
  }
  return out;
}

}  // namespace aqua::engine
