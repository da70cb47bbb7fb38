// The consultation pipeline: seed working memory with every profile,
// eliminate species the tank cannot hold, then score compatibility with the
// residents and group mutually compatible candidates.

#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "aqua/engine.hpp"
#include "aqua/kb.hpp"
#include "aqua/rules.hpp"

namespace aqua::advisor {

/// Scoring constants, kept in one place.
struct AdvisorConfig {
  double cf_high = 0.9;    // "usually compatible"
  double cf_medium = 0.5;  // "sometimes compatible"
  double cf_low = 0.1;     // "rarely compatible"
  double default_threshold = 0.5;
  // Beyond this many maximal cliques the grouping falls back to a greedy partition.
  std::size_t clique_cap = 10000;
  std::size_t max_cycles = 1000000;
};

// Elimination ---------------------------------------------------------------

enum class Reason { TooCold, TooHot, PhLow, PhHigh, HardnessLow, HardnessHigh, TankTooSmall };

std::string_view to_string(Reason reason);
std::optional<Reason> parse_reason(std::string_view text);

struct EliminationRecord {
  std::string species;
  Reason reason = Reason::TooCold;
  double value = 0;  // the tank reading
  double bound = 0;  // the profile bound it violated
  engine::FactId fact = 0;  // the retracted fish fact, for explanations

  bool operator==(const EliminationRecord&) const = default;
};

/// Fig. 3-style constraint rules, one per water condition plus tank size.
dsl::RuleSet constraint_rules();
/// Text form of constraint_rules(), as shipped in kb/constraints.rules.
std::string constraint_rules_text();

/// Seeds `wm` with one (fish ...) fact per profile followed by the tank readings.
void seed_working_memory(engine::WorkingMemory& wm, const kb::TankState& tank, const kb::ProfileSet& profiles);

struct FilterOutcome {
  std::vector<std::string> adequate;  // profile order
  std::vector<EliminationRecord> eliminated;  // profile order
  engine::WorkingMemory wm;
  bool interrupted = false;
};

FilterOutcome filter_by_conditions(const kb::TankState& tank, const kb::ProfileSet& profiles);
FilterOutcome filter_by_conditions(const kb::TankState& tank, const kb::ProfileSet& profiles,
                                   const dsl::RuleSet& rules, const AdvisorConfig& config = {});

// Pair scoring ----------------------------------------------------------------

double base_cf(kb::CompatLevel level, const AdvisorConfig& config = {});

struct PairScore {
  std::string a;  // matrix labels
  std::string b;
  std::optional<kb::CompatLevel> base_level;
  double base_cf = 0;
  double adjusted_cf = 0;
  std::vector<std::string> applied;  // modifier ids, ascending
  bool unknown_pair = false;

  bool operator==(const PairScore&) const = default;
};

/// Folds every active modifier into the base CF: positive deltas via
/// cf_combine, negative ones by scaling cf * (1 + d), in ascending id order.
PairScore adjusted_pair_cf(const std::string& a, const std::string& b, const kb::CompatibilityMatrix& matrix,
                           const kb::TankState& tank, std::span<const kb::CfModifier> modifiers,
                           const AdvisorConfig& config = {});

// Grouping -----------------------------------------------------------------

struct SuggestionGroup {
  std::vector<std::string> members;  // species ids, sorted by display name
  std::vector<std::string> names;    // display names, same order
  double score = 1.0;                // weakest witness
  double mean = 1.0;
  std::vector<PairScore> witness;

  bool operator==(const SuggestionGroup&) const = default;
};

struct GroupingResult {
  std::vector<SuggestionGroup> groups;
  std::vector<std::string> candidates;  // species ids that cleared every resident
  std::vector<std::string> warnings;
  bool degraded = false;  // clique cap exceeded; groups are a greedy partition
};

/// Maximal cliques of an undirected graph given as adjacency lists over
/// vertices 0..n-1. Returns nullopt once more than `cap` cliques are found.
std::optional<std::vector<std::vector<std::size_t>>> maximal_cliques(
    const std::vector<std::vector<bool>>& adjacency, std::size_t cap);

/// Throws std::invalid_argument when threshold is outside [0, 1].
GroupingResult suggest_groups(const kb::TankState& tank, std::span<const std::string> adequate,
                              const kb::ProfileSet& profiles, const kb::CompatibilityMatrix& matrix,
                              std::span<const kb::CfModifier> modifiers, double threshold,
                              const AdvisorConfig& config = {});

// Consultation -------------------------------------------------------------

struct ConsultationResult {
  kb::TankState tank;
  double threshold = 0.5;
  std::vector<std::string> adequate;
  std::vector<EliminationRecord> eliminated;
  std::vector<SuggestionGroup> groups;
  std::vector<std::string> candidates;
  std::vector<std::string> warnings;
  bool degraded = false;
  engine::Trace trace;
};

ConsultationResult run_consultation(const kb::TankState& tank, const kb::KnowledgeBase& kb,
                                    const dsl::RuleSet& rules, double threshold,
                                    const AdvisorConfig& config = {});

class NotCandidateError : public std::invalid_argument {
public:
  explicit NotCandidateError(const std::string& species)
      : std::invalid_argument(species + " is not a current candidate") {}
};

/// The tank after adding one fish of `species`.
kb::TankState with_resident(const kb::TankState& tank, const std::string& species);

/// Re-runs the consultation with `species` added to the residents. Throws
/// NotCandidateError when `species` is in no current group.
ConsultationResult whatif_add(const ConsultationResult& result, const std::string& species,
                              const kb::KnowledgeBase& kb, const dsl::RuleSet& rules,
                              const AdvisorConfig& config = {});

/// Resolves a user-typed species (id or display name, case-insensitive).
const kb::FishProfile* resolve_species(const kb::ProfileSet& profiles, std::string_view text);

}  // namespace aqua::advisor
