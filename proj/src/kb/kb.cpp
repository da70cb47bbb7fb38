#include "aqua/kb.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "aqua/text.hpp"
#include "csv.hpp"

namespace aqua::kb {

LoadError::LoadError(std::size_t line, std::string field, const std::string& what)
    : std::runtime_error(what), line_(line), field_(std::move(field)) {}

namespace {

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(0, "", "cannot open " + path);
  return in;
}

std::string split_header_line(const detail::CsvRow& row) {
  std::string joined;
  for (std::size_t i = 0; i < row.fields.size(); ++i) {
    if (i) joined += ',';
    joined += row.fields[i];
  }
  return joined;
}

}  // namespace

// Profiles -----------------------------------------------------------------

std::optional<std::pair<std::string, std::string>> profile_violation(const FishProfile& p) {
  if (p.id.empty()) return std::pair{std::string("id"), std::string("id is empty")};
  if (p.name.empty()) return std::pair{std::string("name"), std::string("name is empty")};
  if (!(p.life_span_years > 0))
    return std::pair{std::string("life_span_years"), std::string("life_span_years must be positive")};
  if (!(p.min_tank_gal > 0))
    return std::pair{std::string("min_tank_gal"), std::string("min_tank_gal must be positive")};
  if (p.temp_min_f > p.temp_max_f)
    return std::pair{std::string("temp_min_f"), std::string("temp_min exceeds temp_max")};
  if (!(p.ph_min > 0)) return std::pair{std::string("ph_min"), std::string("ph_min must be positive")};
  if (p.ph_max > 14) return std::pair{std::string("ph_max"), std::string("ph_max exceeds 14")};
  if (p.ph_min > p.ph_max) return std::pair{std::string("ph_min"), std::string("ph_min exceeds ph_max")};
  if (p.hardness_min_dgh > p.hardness_max_dgh)
    return std::pair{std::string("hardness_min_dgh"), std::string("hardness_min exceeds hardness_max")};
  return std::nullopt;
}

void ProfileSet::add(FishProfile profile) {
  if (auto bad = profile_violation(profile)) throw std::invalid_argument(bad->second);
  if (by_id_.contains(profile.id)) throw std::invalid_argument("duplicate id " + profile.id);
  by_id_.emplace(profile.id, profiles_.size());
  by_name_.emplace(profile.name, profiles_.size());
  profiles_.push_back(std::move(profile));
}

const FishProfile* ProfileSet::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &profiles_[it->second];
}

const FishProfile* ProfileSet::find_by_name(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : &profiles_[it->second];
}

const FishProfile& ProfileSet::at(std::string_view id) const {
  if (const auto* p = find(id)) return *p;
  throw std::out_of_range("unknown species " + std::string(id));
}

ProfileSet load_profiles(std::istream& in) {
  detail::CsvReader reader(in);
  auto header = reader.next();
  if (!header) throw LoadError(0, "", "profiles: missing header");
  if (split_header_line(*header) != kProfilesHeader)
    throw LoadError(header->line, "", "profiles: line " + std::to_string(header->line) +
                                          ": header must be exactly " + std::string(kProfilesHeader));

  static constexpr std::array<std::string_view, 11> kFields = {
      "id",     "name",   "family", "life_span_years",  "min_tank_gal",    "temp_min_f",
      "temp_max_f", "ph_min", "ph_max", "hardness_min_dgh", "hardness_max_dgh"};

  ProfileSet out;
  while (auto row = reader.next()) {
    const auto line = row->line;
    auto fail = [line](std::string_view field, const std::string& msg) -> LoadError {
      return LoadError(line, std::string(field),
                       "profiles: line " + std::to_string(line) + ", field " + std::string(field) + ": " + msg);
    };
    if (row->fields.size() != kFields.size())
      throw fail(row->fields.size() < kFields.size() ? kFields[row->fields.size()] : "row",
                 "expected " + std::to_string(kFields.size()) + " fields, got " +
                     std::to_string(row->fields.size()));

    std::array<double, 8> nums{};
    for (std::size_t i = 3; i < kFields.size(); ++i) {
      auto v = parse_number(row->fields[i]);
      if (!v) throw fail(kFields[i], "not a number: '" + row->fields[i] + "'");
      nums[i - 3] = *v;
    }
    FishProfile p{row->fields[0], row->fields[1], row->fields[2], nums[0], nums[1], nums[2],
                  nums[3],        nums[4],        nums[5],        nums[6], nums[7]};
    if (auto bad = profile_violation(p)) throw fail(bad->first, bad->second);
    if (out.find(p.id)) throw fail("id", "duplicate id '" + p.id + "'");
    out.add(std::move(p));
  }
  return out;
}

ProfileSet load_profiles_file(const std::string& path) {
  auto in = open_or_throw(path);
  return load_profiles(in);
}

std::string serialize_profiles(const ProfileSet& profiles) {
  std::ostringstream out;
  out << kProfilesHeader << '\n';
  for (const auto& p : profiles) {
    out << detail::csv_escape(p.id) << ',' << detail::csv_escape(p.name) << ','
        << detail::csv_escape(p.family) << ',' << format_number(p.life_span_years) << ','
        << format_number(p.min_tank_gal) << ',' << format_number(p.temp_min_f) << ','
        << format_number(p.temp_max_f) << ',' << format_number(p.ph_min) << ','
        << format_number(p.ph_max) << ',' << format_number(p.hardness_min_dgh) << ','
        << format_number(p.hardness_max_dgh) << '\n';
  }
  return out.str();
}

// Compatibility ------------------------------------------------------------

char to_char(CompatLevel level) {
  switch (level) {
    case CompatLevel::H: return 'H';
    case CompatLevel::M: return 'M';
    case CompatLevel::L: return 'L';
  }
  return '?';
}

std::optional<CompatLevel> parse_level(std::string_view token) {
  if (token == "H") return CompatLevel::H;
  if (token == "M") return CompatLevel::M;
  if (token == "L") return CompatLevel::L;
  return std::nullopt;
}

CompatibilityMatrix::CompatibilityMatrix(std::vector<std::string> species) {
  for (auto& s : species) add_species(s);
}

void CompatibilityMatrix::add_species(const std::string& label) {
  if (!has_species(label)) species_.push_back(label);
}

bool CompatibilityMatrix::has_species(std::string_view label) const {
  return std::find(species_.begin(), species_.end(), label) != species_.end();
}

std::pair<std::string, std::string> CompatibilityMatrix::key(std::string_view a, std::string_view b) {
  if (b < a) std::swap(a, b);
  return {std::string(a), std::string(b)};
}

void CompatibilityMatrix::set(const std::string& a, const std::string& b, CompatLevel level) {
  if (!has_species(a)) throw std::invalid_argument("species '" + a + "' is not in the species list");
  if (!has_species(b)) throw std::invalid_argument("species '" + b + "' is not in the species list");
  auto [it, inserted] = entries_.emplace(key(a, b), level);
  if (!inserted && it->second != level) {
    auto kept = std::min(it->second, level);
    warnings_.push_back("asymmetric entry " + it->first.first + " x " + it->first.second + ": " +
                        to_char(it->second) + " vs " + to_char(level) + ", kept " + to_char(kept));
    it->second = kept;
  }
}

std::optional<CompatLevel> CompatibilityMatrix::lookup(std::string_view a, std::string_view b) const {
  auto it = entries_.find(key(a, b));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

CompatibilityMatrix read_pairs(std::istream& in, std::optional<std::span<const std::string>> species) {
  detail::CsvReader reader(in);
  auto header = reader.next();
  if (!header) throw LoadError(0, "", "compatibility: missing header");
  if (split_header_line(*header) != kCompatibilityHeader)
    throw LoadError(header->line, "", "compatibility: line " + std::to_string(header->line) +
                                          ": header must be exactly " + std::string(kCompatibilityHeader));

  CompatibilityMatrix matrix;
  if (species)
    for (const auto& s : *species) matrix.add_species(s);

  while (auto row = reader.next()) {
    const auto line = row->line;
    auto fail = [line](std::string_view field, const std::string& msg) -> LoadError {
      return LoadError(line, std::string(field),
                       "compatibility: line " + std::to_string(line) + ", field " + std::string(field) + ": " + msg);
    };
    if (row->fields.size() != 3)
      throw fail(row->fields.size() < 3 ? (row->fields.size() < 2 ? "species_b" : "level") : "row",
                 "expected 3 fields, got " + std::to_string(row->fields.size()));
    const auto& a = row->fields[0];
    const auto& b = row->fields[1];
    auto level = parse_level(row->fields[2]);
    if (!level) throw fail("level", "unknown level '" + row->fields[2] + "' (expected H, M or L)");
    if (a.empty()) throw fail("species_a", "empty species label");
    if (b.empty()) throw fail("species_b", "empty species label");
    if (species) {
      if (!matrix.has_species(a)) throw fail("species_a", "unknown species '" + a + "'");
      if (!matrix.has_species(b)) throw fail("species_b", "unknown species '" + b + "'");
    } else {
      matrix.add_species(a);
      matrix.add_species(b);
    }
    matrix.set(a, b, *level);
  }
  return matrix;
}

}  // namespace

CompatibilityMatrix load_compatibility(std::istream& in) { return read_pairs(in, std::nullopt); }

CompatibilityMatrix load_compatibility(std::istream& in, std::span<const std::string> species) {
  return read_pairs(in, species);
}

CompatibilityMatrix load_compatibility_file(const std::string& path) {
  auto in = open_or_throw(path);
  return load_compatibility(in);
}

// TankState ----------------------------------------------------------------

void validate(const TankState& tank) {
  auto finite = [](double v) { return v == v && v - v == 0; };
  if (!finite(tank.temperature_f)) throw ValidationError("temperature_f", "temperature_f must be finite");
  if (!finite(tank.ph) || !(tank.ph > 0) || tank.ph > 14) throw ValidationError("ph", "ph out of range");
  if (!finite(tank.hardness_dgh) || tank.hardness_dgh < 0)
    throw ValidationError("hardness_dgh", "hardness_dgh out of range");
  if (!finite(tank.tank_size_gal) || !(tank.tank_size_gal > 0))
    throw ValidationError("tank_size_gal", "tank_size_gal must be positive");
  if (!finite(tank.stocking_ratio) || tank.stocking_ratio < 0)
    throw ValidationError("stocking_ratio", "stocking_ratio must be non-negative");
  for (const auto& r : tank.residents)
    if (r.empty()) throw ValidationError("residents", "resident species id is empty");
}

// Modifiers ----------------------------------------------------------------

namespace {
constexpr std::array<std::string_view, 7> kTankFields = {
    "temperature_f", "ph", "hardness_dgh", "tank_size_gal", "has_hiding_places", "stocking_ratio", "residents"};
}

std::span<const std::string_view> tank_fields() { return kTankFields; }

bool is_tank_field(std::string_view field) {
  return std::find(kTankFields.begin(), kTankFields.end(), field) != kTankFields.end();
}

bool holds(const Condition& condition, const TankState& tank) {
  const auto& f = condition.field;
  if (f == "residents") {
    const auto* wanted = std::get_if<std::string>(&condition.value);
    if (!wanted || condition.op != ConditionOp::Eq) return false;
    return std::find(tank.residents.begin(), tank.residents.end(), *wanted) != tank.residents.end();
  }
  if (f == "has_hiding_places") {
    const auto* wanted = std::get_if<bool>(&condition.value);
    return wanted && condition.op == ConditionOp::Eq && tank.has_hiding_places == *wanted;
  }

  double actual = 0;
  if (f == "temperature_f") actual = tank.temperature_f;
  else if (f == "ph") actual = tank.ph;
  else if (f == "hardness_dgh") actual = tank.hardness_dgh;
  else if (f == "tank_size_gal") actual = tank.tank_size_gal;
  else if (f == "stocking_ratio") actual = tank.stocking_ratio;
  else return false;

  const auto* wanted = std::get_if<double>(&condition.value);
  if (!wanted) return false;
  switch (condition.op) {
    case ConditionOp::Eq: return actual == *wanted;
    case ConditionOp::Gte: return actual >= *wanted;
    case ConditionOp::Lte: return actual <= *wanted;
  }
  return false;
}

std::vector<CfModifier> load_modifiers(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw LoadError(0, "", std::string("modifiers: ") + e.what());
  }
  if (!doc.is_array()) throw LoadError(0, "", "modifiers: top level must be an array");

  std::vector<CfModifier> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    auto fail = [i](const std::string& field, const std::string& msg) {
      return LoadError(0, field, "modifiers[" + std::to_string(i) + "]." + field + ": " + msg);
    };
    if (!item.is_object()) throw fail("", "entry must be an object");
    CfModifier m;
    if (!item.contains("id") || !item["id"].is_string()) throw fail("id", "missing string");
    m.id = item["id"].get<std::string>();
    if (item.contains("description")) {
      if (!item["description"].is_string()) throw fail("description", "must be a string");
      m.description = item["description"].get<std::string>();
    }
    if (!item.contains("delta") || !item["delta"].is_number()) throw fail("delta", "missing number");
    m.delta = item["delta"].get<double>();
    if (m.delta < -1 || m.delta > 1) throw fail("delta", "must lie in [-1, 1]");

    if (!item.contains("when") || !item["when"].is_object()) throw fail("when", "missing object");
    const auto& when = item["when"];
    if (!when.contains("field") || !when["field"].is_string()) throw fail("when.field", "missing string");
    m.when.field = when["field"].get<std::string>();
    if (!when.contains("op") || !when["op"].is_string()) throw fail("when.op", "missing string");
    auto op = when["op"].get<std::string>();
    if (op == "eq") m.when.op = ConditionOp::Eq;
    else if (op == "gte") m.when.op = ConditionOp::Gte;
    else if (op == "lte") m.when.op = ConditionOp::Lte;
    else throw fail("when.op", "unknown op '" + op + "' (expected eq, gte or lte)");
    if (!when.contains("value")) throw fail("when.value", "missing");
    const auto& v = when["value"];
    if (v.is_boolean()) m.when.value = v.get<bool>();
    else if (v.is_number()) m.when.value = v.get<double>();
    else if (v.is_string()) m.when.value = v.get<std::string>();
    else throw fail("when.value", "must be a number, boolean or string");

    for (const auto& prev : out)
      if (prev.id == m.id) throw fail("id", "duplicate modifier id '" + m.id + "'");
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<CfModifier> load_modifiers_file(const std::string& path) {
  auto in = open_or_throw(path);
  return load_modifiers(in);
}

// Validation ---------------------------------------------------------------

ValidationReport validate_kb(const ProfileSet& profiles, const CompatibilityMatrix& matrix,
                             std::span<const CfModifier> modifiers) {
  ValidationReport report;
  for (const auto& p : profiles)
    if (!matrix.has_species(p.name)) report.missing_from_matrix.push_back(p.name);
  for (const auto& s : matrix.species())
    if (!profiles.find_by_name(s)) report.missing_profiles.push_back(s);
  for (const auto& m : modifiers)
    if (!is_tank_field(m.when.field)) report.unknown_fields.push_back(m.id + ": " + m.when.field);
  return report;
}

KnowledgeBase load_kb(const KbPaths& paths) {
  KnowledgeBase kb;
  kb.profiles = load_profiles_file(paths.profiles);
  kb.matrix = load_compatibility_file(paths.matrix);
  kb.modifiers = load_modifiers_file(paths.modifiers);
  return kb;
}

}  // namespace aqua::kb
