// Knowledge base: fish profiles, the pairwise compatibility chart and the
// contextual certainty-factor modifiers. Everything here is immutable once
// loaded and can be shared between consultations.

#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace aqua::kb {

/// Raised by the loaders. `line` is 1-based and 0 when the error is not tied to a line.
class LoadError : public std::runtime_error {
public:
  LoadError(std::size_t line, std::string field, const std::string& what);

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

private:
  std::size_t line_;
  std::string field_;
};

/// Raised when a TankState (or one of its fields) is out of range.
class ValidationError : public std::invalid_argument {
public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

struct FishProfile {
  std::string id;
  std::string name;
  std::string family;
  double life_span_years = 0;
  double min_tank_gal = 0;
  double temp_min_f = 0;
  double temp_max_f = 0;
  double ph_min = 0;
  double ph_max = 0;
  double hardness_min_dgh = 0;
  double hardness_max_dgh = 0;

  bool operator==(const FishProfile&) const = default;
};

// Checks the range invariants; returns the violated field and message.
std::optional<std::pair<std::string, std::string>> profile_violation(const FishProfile& p);

class ProfileSet {
public:
  ProfileSet() = default;

  /// Throws std::invalid_argument on a duplicate id or an invalid profile.
  void add(FishProfile profile);

  const FishProfile* find(std::string_view id) const;
  const FishProfile* find_by_name(std::string_view name) const;
  const FishProfile& at(std::string_view id) const;

  std::size_t size() const noexcept { return profiles_.size(); }
  bool empty() const noexcept { return profiles_.empty(); }
  auto begin() const { return profiles_.begin(); }
  auto end() const { return profiles_.end(); }
  const std::vector<FishProfile>& all() const noexcept { return profiles_; }

  bool operator==(const ProfileSet& other) const { return profiles_ == other.profiles_; }

private:
  std::vector<FishProfile> profiles_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

inline constexpr std::string_view kProfilesHeader =
    "id,name,family,life_span_years,min_tank_gal,temp_min_f,temp_max_f,ph_min,ph_max,"
    "hardness_min_dgh,hardness_max_dgh";
inline constexpr std::string_view kCompatibilityHeader = "species_a,species_b,level";

ProfileSet load_profiles(std::istream& in);
ProfileSet load_profiles_file(const std::string& path);
std::string serialize_profiles(const ProfileSet& profiles);

// Ordered so that std::min picks the conservative level.
enum class CompatLevel { L = 0, M = 1, H = 2 };

char to_char(CompatLevel level);
std::optional<CompatLevel> parse_level(std::string_view token);

class CompatibilityMatrix {
public:
  CompatibilityMatrix() = default;
  explicit CompatibilityMatrix(std::vector<std::string> species);

  /// Appends a label to the species list if it is not there yet.
  void add_species(const std::string& label);

  /// Stores a level for the unordered pair. When the pair already holds a
  /// different level the lower one is kept and a warning is recorded.
  /// Throws std::invalid_argument if either label is not a known species.
  void set(const std::string& a, const std::string& b, CompatLevel level);

  std::optional<CompatLevel> lookup(std::string_view a, std::string_view b) const;

  bool has_species(std::string_view label) const;
  const std::vector<std::string>& species() const noexcept { return species_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  std::size_t pair_count() const noexcept { return entries_.size(); }

private:
  static std::pair<std::string, std::string> key(std::string_view a, std::string_view b);

  std::vector<std::string> species_;
  std::map<std::pair<std::string, std::string>, CompatLevel> entries_;
  std::vector<std::string> warnings_;
};

/// Species list is taken from the order of first appearance.
CompatibilityMatrix load_compatibility(std::istream& in);
/// Every label must be in `species`; the matrix species list is exactly `species`.
CompatibilityMatrix load_compatibility(std::istream& in, std::span<const std::string> species);
CompatibilityMatrix load_compatibility_file(const std::string& path);

// TankState --------------------------------------------------------------

struct TankState {
  double temperature_f = 0;
  double ph = 7;
  double hardness_dgh = 0;
  double tank_size_gal = 1;
  bool has_hiding_places = false;
  double stocking_ratio = 0;
  std::vector<std::string> residents;

  bool operator==(const TankState&) const = default;
};

/// Throws ValidationError naming the first offending field.
void validate(const TankState& tank);

// Modifiers --------------------------------------------------------------

enum class ConditionOp { Eq, Gte, Lte };

using ConditionValue = std::variant<double, bool, std::string>;

struct Condition {
  std::string field;
  ConditionOp op = ConditionOp::Eq;
  ConditionValue value;
};

struct CfModifier {
  std::string id;
  std::string description;
  Condition when;
  double delta = 0;
};

/// The TankState fields a modifier condition may reference.
std::span<const std::string_view> tank_fields();
bool is_tank_field(std::string_view field);

/// False for unknown fields and for type mismatches.
bool holds(const Condition& condition, const TankState& tank);

std::vector<CfModifier> load_modifiers(std::istream& in);
std::vector<CfModifier> load_modifiers_file(const std::string& path);

// Validation -------------------------------------------------------------

struct ValidationReport {
  std::vector<std::string> missing_from_matrix;  // profile names without chart entries
  std::vector<std::string> missing_profiles;     // chart species without a profile
  std::vector<std::string> unknown_fields;       // "<modifier id>: <field>"

  bool empty() const noexcept {
    return missing_from_matrix.empty() && missing_profiles.empty() && unknown_fields.empty();
  }
};

ValidationReport validate_kb(const ProfileSet& profiles, const CompatibilityMatrix& matrix,
                             std::span<const CfModifier> modifiers);

struct KnowledgeBase {
  ProfileSet profiles;
  CompatibilityMatrix matrix;
  std::vector<CfModifier> modifiers;
};

struct KbPaths {
  std::string profiles;
  std::string matrix;
  std::string modifiers;
};

KnowledgeBase load_kb(const KbPaths& paths);

}  // namespace aqua::kb
