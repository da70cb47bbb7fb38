// Forward-chaining inference over a working memory of facts, with
// certainty factors and a complete trace for the explanation facility.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "aqua/rules.hpp"

namespace aqua::engine {

// Certainty factors --------------------------------------------------------

class CfError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// a + b(1 - a). Both inputs must lie in [0, 1].
double cf_combine(double a, double b);
/// Minimum of a non-empty list of CFs.
double cf_conjunction(std::span<const double> cfs);

// Facts ------------------------------------------------------------------

using FactId = std::uint64_t;
using Value = std::variant<double, std::string>;
using Slots = std::map<std::string, Value>;

std::string to_string(const Value& v);

struct Fact {
  FactId id = 0;
  std::string templ;
  bool ordered = false;
  Slots slots;
  double cf = 1.0;

  bool operator==(const Fact&) const = default;
};

/// `(aqua-temp 60)` or `(fish (name Molly) (tempmin 65))`.
std::string render_fact(const Fact& fact);

// Trace ------------------------------------------------------------------

enum class EventKind { Fire, Assert, Retract, Print, CfUpdate };

std::string_view to_string(EventKind kind);

inline constexpr std::string_view kExternal = "external";

struct TraceEvent {
  std::uint64_t ordinal = 0;
  EventKind kind = EventKind::Fire;
  std::string rule;                  // rule name, or the external caller
  std::optional<Fact> fact;          // snapshot after the event (before removal for retracts)
  std::string text;                  // human-readable rendering
  std::optional<std::uint64_t> fire; // ordinal of the Fire event that caused this one
  std::vector<FactId> matched;       // Fire only: fact ids in pattern order
  bool redundant = false;            // Retract only: target was already retracted
  double previous_cf = 0;            // CfUpdate only
};

using Trace = std::vector<TraceEvent>;

/// One JSON object per line with fields ordinal, kind, rule, fact, text.
std::string trace_to_jsonl(std::span<const TraceEvent> trace);

// Working memory -----------------------------------------------------------

class WorkingMemory {
public:
  struct AssertResult {
    FactId id;
    bool merged;  // an identical fact existed; its cf was combined
  };

  /// Throws CfError when cf is outside [0, 1].
  AssertResult assert_fact(std::string templ, Slots slots, std::optional<double> cf = std::nullopt,
                           bool ordered = false, std::string_view cause = kExternal);

  enum class RetractResult { Removed, AlreadyRetracted };

  /// Throws std::out_of_range for an id that was never issued.
  RetractResult retract_fact(FactId id, std::string_view cause = kExternal);

  const Fact* find(FactId id) const;
  /// Live facts in ascending id order.
  std::vector<const Fact*> facts() const;
  std::size_t size() const noexcept { return live_.size(); }
  FactId next_id() const noexcept { return next_id_; }
  const std::vector<FactId>& retraction_log() const noexcept { return retracted_; }

  const Trace& trace() const noexcept { return trace_; }

  // Used by the engine to tag mutations made while a rule fires.
  void set_current_fire(std::optional<std::uint64_t> ordinal) { current_fire_ = ordinal; }
  std::uint64_t record(TraceEvent event);

private:
  std::map<FactId, Fact> live_;
  FactId next_id_ = 1;
  std::vector<FactId> retracted_;
  Trace trace_;
  std::optional<std::uint64_t> current_fire_;
};

// Matching ---------------------------------------------------------------

struct Activation {
  std::size_t rule_index = 0;
  std::map<std::string, Value> values;
  std::map<std::string, FactId> facts;
  std::vector<FactId> matched;  // pattern order
  FactId timestamp = 0;         // max matched id
};

/// Produces every activation of the rule set against the live facts.
class Matcher {
public:
  virtual ~Matcher() = default;
  virtual std::vector<Activation> match(const WorkingMemory& wm, const dsl::RuleSet& rules) const = 0;
};

/// Re-scans all live facts for every rule on each call.
class NaiveMatcher final : public Matcher {
public:
  std::vector<Activation> match(const WorkingMemory& wm, const dsl::RuleSet& rules) const override;
};

/// Conflict resolution: higher timestamp, then earlier rule, then ascending fact ids.
bool precedes(const Activation& a, const Activation& b);

// Running ----------------------------------------------------------------

class EngineError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::size_t max_cycles = 100000;
  std::ostream* output = nullptr;  // receives printout text for router `t`
  const Matcher* matcher = nullptr;
};

struct RunResult {
  std::size_t fired = 0;
  bool interrupted = false;  // budget exhausted with activations still pending
  std::uint64_t first_ordinal = 0;
  Trace trace;               // events recorded during this run
};

/// Throws std::invalid_argument when max_cycles is 0, EngineError on a
/// non-numeric comparison.
RunResult run(WorkingMemory& wm, const dsl::RuleSet& rules, const RunOptions& options = {});

// Explanation ------------------------------------------------------------

struct ExplainTarget {
  enum class Kind { Fact, Retraction, Message };
  Kind kind = Kind::Fact;
  FactId fact = 0;
  std::string message;

  static ExplainTarget of_fact(FactId id) { return {Kind::Fact, id, {}}; }
  static ExplainTarget of_retraction(FactId id) { return {Kind::Retraction, id, {}}; }
  static ExplainTarget of_message(std::string text) { return {Kind::Message, 0, std::move(text)}; }
};

struct ExplanationNode {
  enum class Kind { Given, Derived, Retracted, Printed };
  Kind kind = Kind::Given;
  std::string rule;             // empty for given facts
  std::optional<Fact> fact;
  std::string message;          // printed text for Printed nodes
  std::vector<std::string> printed;  // messages emitted by the same firing
  std::vector<ExplanationNode> children;

  std::size_t depth() const;
};

class ExplainError : public std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Throws ExplainError when the target does not appear in the trace.
ExplanationNode explain(std::span<const TraceEvent> trace, const ExplainTarget& target);

std::string render_explanation(const ExplanationNode& node);

}  // namespace aqua::engine
