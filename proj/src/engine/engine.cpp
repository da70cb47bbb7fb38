#include "aqua/engine.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>
#include <set>
#include <sstream>

#include "aqua/text.hpp"

namespace aqua::engine {

// Certainty factors --------------------------------------------------------

namespace {
void require_cf(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw CfError(std::string(what) + " must lie in [0, 1], got " + format_number(v));
}
}  // namespace

double cf_combine(double a, double b) {
  require_cf(a, "cf_combine: first argument");
  require_cf(b, "cf_combine: second argument");
  return std::clamp(a + b * (1.0 - a), 0.0, 1.0);
}

double cf_conjunction(std::span<const double> cfs) {
  if (cfs.empty()) throw CfError("cf_conjunction: empty list");
  for (double v : cfs) require_cf(v, "cf_conjunction: element");
  return *std::min_element(cfs.begin(), cfs.end());
}

// Facts ------------------------------------------------------------------

std::string to_string(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  return std::get<std::string>(v);
}

namespace {

std::string display_value(const Value& v) {
  if (const auto* d = std::get_if<double>(&v)) return format_number(*d);
  const auto& s = std::get<std::string>(v);
  bool bare = !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != '"' && c != ';';
  });
  if (bare && !parse_number(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_fact(const Fact& fact) {
  std::string out = "(" + fact.templ;
  for (const auto& [name, value] : fact.slots) {
    if (fact.ordered) out += " " + display_value(value);
    else out += " (" + name + " " + display_value(value) + ")";
  }
  out += ")";
  if (fact.cf != 1.0) out += " cf " + format_number(fact.cf);
  return out;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Fire: return "fire";
    case EventKind::Assert: return "assert";
    case EventKind::Retract: return "retract";
    case EventKind::Print: return "print";
    case EventKind::CfUpdate: return "cf-update";
  }
  return "?";
}

// Working memory -----------------------------------------------------------

std::uint64_t WorkingMemory::record(TraceEvent event) {
  event.ordinal = trace_.size() + 1;
  if (!event.fire && event.kind != EventKind::Fire) event.fire = current_fire_;
  trace_.push_back(std::move(event));
  return trace_.back().ordinal;
}

WorkingMemory::AssertResult WorkingMemory::assert_fact(std::string templ, Slots slots, std::optional<double> cf,
                                                       bool ordered, std::string_view cause) {
  double belief = cf.value_or(1.0);
  if (!(belief >= 0.0 && belief <= 1.0))
    throw CfError("assert_fact: cf must lie in [0, 1], got " + format_number(belief));

  for (auto& [id, fact] : live_) {
    if (fact.templ == templ && fact.ordered == ordered && fact.slots == slots) {
      double before = fact.cf;
      fact.cf = cf_combine(fact.cf, belief);
      TraceEvent e;
      e.kind = EventKind::CfUpdate;
      e.rule = std::string(cause);
      e.fact = fact;
      e.previous_cf = before;
      e.text = "cf f-" + std::to_string(id) + " " + format_number(before) + " -> " + format_number(fact.cf);
      record(std::move(e));
      return {id, true};
    }
  }

  Fact fact{next_id_++, std::move(templ), ordered, std::move(slots), belief};
  TraceEvent e;
  e.kind = EventKind::Assert;
  e.rule = std::string(cause);
  e.fact = fact;
  e.text = "==> f-" + std::to_string(fact.id) + " " + render_fact(fact);
  FactId id = fact.id;
  live_.emplace(id, std::move(fact));
  record(std::move(e));
  return {id, false};
}

WorkingMemory::RetractResult WorkingMemory::retract_fact(FactId id, std::string_view cause) {
  if (id == 0 || id >= next_id_) throw std::out_of_range("retract: fact f-" + std::to_string(id) + " was never asserted");
  TraceEvent e;
  e.kind = EventKind::Retract;
  e.rule = std::string(cause);
  auto it = live_.find(id);
  if (it == live_.end()) {
    e.redundant = true;
    e.text = "<== f-" + std::to_string(id) + " already retracted";
    record(std::move(e));
    return RetractResult::AlreadyRetracted;
  }
  e.fact = it->second;
  e.text = "<== f-" + std::to_string(id) + " " + render_fact(it->second);
  live_.erase(it);
  retracted_.push_back(id);
  record(std::move(e));
  return RetractResult::Removed;
}

const Fact* WorkingMemory::find(FactId id) const {
  auto it = live_.find(id);
  return it == live_.end() ? nullptr : &it->second;
}

std::vector<const Fact*> WorkingMemory::facts() const {
  std::vector<const Fact*> out;
  out.reserve(live_.size());
  for (const auto& [id, fact] : live_) out.push_back(&fact);
  return out;
}

// Matching ---------------------------------------------------------------

namespace {

Value literal_value(const dsl::Operand& op) {
  if (const auto* d = std::get_if<double>(&op)) return *d;
  if (const auto* s = std::get_if<std::string>(&op)) return *s;
  return std::get<dsl::Symbol>(op).name;
}

bool unify(const dsl::Pattern& pattern, const Fact& fact, std::map<std::string, Value>& values) {
  const auto& shape = pattern.shape;
  if (fact.templ != shape.templ) return false;
  if (shape.ordered && fact.slots.size() != shape.slots.size()) return false;
  for (const auto& c : shape.slots) {
    auto it = fact.slots.find(c.slot);
    if (it == fact.slots.end()) return false;
    if (const auto* var = std::get_if<dsl::Variable>(&c.value)) {
      auto [bound, inserted] = values.emplace(var->name, it->second);
      if (!inserted && bound->second != it->second) return false;
    } else if (literal_value(c.value) != it->second) {
      return false;
    }
  }
  return true;
}

void match_from(const dsl::Rule& rule, std::size_t rule_index, std::size_t pattern_index,
                const std::vector<const Fact*>& facts, Activation& partial, std::vector<Activation>& out) {
  if (pattern_index == rule.patterns.size()) {
    partial.rule_index = rule_index;
    partial.timestamp = *std::max_element(partial.matched.begin(), partial.matched.end());
    out.push_back(partial);
    return;
  }
  const auto& pattern = rule.patterns[pattern_index];
  for (const Fact* fact : facts) {
    auto values = partial.values;
    if (!unify(pattern, *fact, values)) continue;
    Activation next = partial;
    next.values = std::move(values);
    next.matched.push_back(fact->id);
    if (pattern.binder) next.facts[*pattern.binder] = fact->id;
    match_from(rule, rule_index, pattern_index + 1, facts, next, out);
  }
}

}  // namespace

std::vector<Activation> NaiveMatcher::match(const WorkingMemory& wm, const dsl::RuleSet& rules) const {
  std::vector<Activation> out;
  auto facts = wm.facts();
  for (std::size_t r = 0; r < rules.size(); ++r) {
    Activation start;
    match_from(rules.rules()[r], r, 0, facts, start, out);
  }
  return out;
}

bool precedes(const Activation& a, const Activation& b) {
  if (a.timestamp != b.timestamp) return a.timestamp > b.timestamp;
  if (a.rule_index != b.rule_index) return a.rule_index < b.rule_index;
  return a.matched < b.matched;
}

// Running ----------------------------------------------------------------

namespace {

class Firing {
public:
  Firing(WorkingMemory& wm, const dsl::Rule& rule, const Activation& act, const RunOptions& options)
      : wm_(wm), rule_(rule), act_(act), options_(options) {
    std::vector<double> cfs;
    for (FactId id : act.matched) cfs.push_back(wm.find(id)->cf);
    premise_cf_ = cf_conjunction(cfs);
  }

  void execute(const std::vector<dsl::Action>& actions) {
    for (const auto& a : actions) std::visit([this](const auto& node) { (*this)(node); }, a.node);
  }

  void operator()(const dsl::Printout& p) {
    std::string text;
    for (const auto& item : p.items) {
      if (std::holds_alternative<dsl::Crlf>(item)) {
        text += '\n';
      } else if (const auto* var = std::get_if<dsl::Variable>(&item)) {
        text += to_string(value_of(*var));
      } else if (const auto* d = std::get_if<double>(&item)) {
        text += format_number(*d);
      } else if (const auto* s = std::get_if<std::string>(&item)) {
        text += *s;
      } else {
        text += std::get<dsl::Symbol>(item).name;
      }
    }
    if (options_.output && p.router == "t") *options_.output << text;
    TraceEvent e;
    e.kind = EventKind::Print;
    e.rule = rule_.name;
    e.text = std::move(text);
    wm_.record(std::move(e));
  }

  void operator()(const dsl::Retract& r) { wm_.retract_fact(act_.facts.at(r.binder), rule_.name); }

  void operator()(const dsl::AssertFact& a) {
    Slots slots;
    for (const auto& s : a.fact.slots) slots[s.slot] = operand(s.value);
    wm_.assert_fact(a.fact.templ, std::move(slots), premise_cf_, a.fact.ordered, rule_.name);
  }

  void operator()(const dsl::If& node) {
    double lhs = numeric(node.test.lhs);
    double rhs = numeric(node.test.rhs);
    execute(dsl::compare(node.test.op, lhs, rhs) ? node.then_actions : node.else_actions);
  }

private:
  const Value& value_of(const dsl::Variable& var) const {
    auto it = act_.values.find(var.name);
    if (it == act_.values.end()) throw EngineError(rule_.name + ": unbound variable ?" + var.name);
    return it->second;
  }

  Value operand(const dsl::Operand& op) const {
    if (const auto* var = std::get_if<dsl::Variable>(&op)) return value_of(*var);
    return literal_value(op);
  }

  double numeric(const dsl::Operand& op) const {
    Value v = operand(op);
    if (const auto* d = std::get_if<double>(&v)) return *d;
    throw EngineError(rule_.name + ": comparison needs a number, got '" + std::get<std::string>(v) + "'");
  }

  WorkingMemory& wm_;
  const dsl::Rule& rule_;
  const Activation& act_;
  const RunOptions& options_;
  double premise_cf_ = 1.0;
};

std::string fire_text(const dsl::Rule& rule, const Activation& act) {
  std::string text = "FIRE " + rule.name + ":";
  for (std::size_t i = 0; i < act.matched.size(); ++i) text += (i ? ",f-" : " f-") + std::to_string(act.matched[i]);
  return text;
}

}  // namespace

RunResult run(WorkingMemory& wm, const dsl::RuleSet& rules, const RunOptions& options) {
  if (options.max_cycles == 0) throw std::invalid_argument("run: max_cycles must be at least 1");
  static const NaiveMatcher kDefaultMatcher;
  const Matcher& matcher = options.matcher ? *options.matcher : kDefaultMatcher;

  RunResult result;
  const std::size_t start = wm.trace().size();
  result.first_ordinal = start + 1;
  std::set<std::pair<std::size_t, std::vector<FactId>>> fired;

  auto next_activation = [&]() -> std::optional<Activation> {
    std::optional<Activation> best;
    for (auto& act : matcher.match(wm, rules)) {
      if (fired.contains({act.rule_index, act.matched})) continue;
      if (!best || precedes(act, *best)) best = std::move(act);
    }
    return best;
  };

  while (true) {
    auto act = next_activation();
    if (!act) break;
    if (result.fired == options.max_cycles) {
      result.interrupted = true;
      break;
    }
    fired.insert({act->rule_index, act->matched});
    const auto& rule = rules.rules()[act->rule_index];

    TraceEvent e;
    e.kind = EventKind::Fire;
    e.rule = rule.name;
    e.matched = act->matched;
    e.text = fire_text(rule, *act);
    auto ordinal = wm.record(std::move(e));

    wm.set_current_fire(ordinal);
    try {
      Firing(wm, rule, *act, options).execute(rule.actions);
    } catch (...) {
      wm.set_current_fire(std::nullopt);
      throw;
    }
    wm.set_current_fire(std::nullopt);
    ++result.fired;
  }

  result.trace.assign(wm.trace().begin() + static_cast<std::ptrdiff_t>(start), wm.trace().end());
  return result;
}

// Explanation ------------------------------------------------------------

std::size_t ExplanationNode::depth() const {
  std::size_t deepest = 0;
  for (const auto& c : children) deepest = std::max(deepest, c.depth());
  return deepest + 1;
}

namespace {

class Explainer {
public:
  explicit Explainer(std::span<const TraceEvent> trace) : trace_(trace) {}

  ExplanationNode fact(FactId id) const {
    const TraceEvent* created = find([&](const TraceEvent& e) {
      return e.kind == EventKind::Assert && e.fact && e.fact->id == id;
    });
    if (!created) {
      ExplanationNode leaf;
      leaf.kind = ExplanationNode::Kind::Given;
      return leaf;
    }
    ExplanationNode node;
    node.fact = created->fact;
    const TraceEvent* cause = fire_of(*created);
    if (!cause) {
      node.kind = ExplanationNode::Kind::Given;
      return node;
    }
    node.kind = ExplanationNode::Kind::Derived;
    fill_from_fire(node, *cause);
    return node;
  }

  const TraceEvent* creation(FactId id) const {
    return find([&](const TraceEvent& e) { return e.kind == EventKind::Assert && e.fact && e.fact->id == id; });
  }

  const TraceEvent* retraction(FactId id) const {
    return find([&](const TraceEvent& e) {
      return e.kind == EventKind::Retract && !e.redundant && e.fact && e.fact->id == id;
    });
  }

  ExplanationNode retracted(const TraceEvent& event) const {
    ExplanationNode node;
    node.kind = ExplanationNode::Kind::Retracted;
    node.fact = event.fact;
    node.rule = event.rule;
    if (const TraceEvent* cause = fire_of(event)) fill_from_fire(node, *cause);
    return node;
  }

  const TraceEvent* message(const std::string& text) const {
    auto stripped = [](const std::string& s) {
      std::string out = s;
      while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
      return out;
    };
    if (const auto* exact = find([&](const TraceEvent& e) {
          return e.kind == EventKind::Print && stripped(e.text) == stripped(text);
        }))
      return exact;
    if (text.empty()) return nullptr;
    return find([&](const TraceEvent& e) { return e.kind == EventKind::Print && e.text.starts_with(text); });
  }

  ExplanationNode printed(const TraceEvent& event) const {
    ExplanationNode node;
    node.kind = ExplanationNode::Kind::Printed;
    node.message = event.text;
    node.rule = event.rule;
    if (const TraceEvent* cause = fire_of(event)) {
      for (FactId id : cause->matched) node.children.push_back(fact(id));
    }
    return node;
  }

private:
  template <typename Pred>
  const TraceEvent* find(Pred pred) const {
    for (const auto& e : trace_)
      if (pred(e)) return &e;
    return nullptr;
  }

  const TraceEvent* fire_of(const TraceEvent& event) const {
    if (!event.fire) return nullptr;
    return find([&](const TraceEvent& e) { return e.kind == EventKind::Fire && e.ordinal == *event.fire; });
  }

  void fill_from_fire(ExplanationNode& node, const TraceEvent& fire) const {
    node.rule = fire.rule;
    for (const auto& e : trace_)
      if (e.kind == EventKind::Print && e.fire == fire.ordinal) node.printed.push_back(e.text);
    for (FactId id : fire.matched) node.children.push_back(fact(id));
  }

  std::span<const TraceEvent> trace_;
};

}  // namespace

ExplanationNode explain(std::span<const TraceEvent> trace, const ExplainTarget& target) {
  Explainer ex(trace);
  switch (target.kind) {
    case ExplainTarget::Kind::Fact:
      if (!ex.creation(target.fact)) throw ExplainError("f-" + std::to_string(target.fact) + " does not appear in the trace");
      return ex.fact(target.fact);
    case ExplainTarget::Kind::Retraction: {
      const TraceEvent* e = ex.retraction(target.fact);
      if (!e) throw ExplainError("no retraction of f-" + std::to_string(target.fact) + " in the trace");
      return ex.retracted(*e);
    }
    case ExplainTarget::Kind::Message: {
      const TraceEvent* e = ex.message(target.message);
      if (!e) throw ExplainError("message '" + target.message + "' was never printed");
      return ex.printed(*e);
    }
  }
  throw ExplainError("unknown target");
}

namespace {

std::string chomp(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

void render_node(std::ostringstream& out, const ExplanationNode& node, int indent) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  std::string subject = node.fact ? "f-" + std::to_string(node.fact->id) + " " + render_fact(*node.fact) : "(unknown fact)";
  switch (node.kind) {
    case ExplanationNode::Kind::Given: out << pad << subject << " [given]\n"; break;
    case ExplanationNode::Kind::Derived: out << pad << subject << " [derived by " << node.rule << "]\n"; break;
    case ExplanationNode::Kind::Retracted: out << pad << subject << " [retracted by " << node.rule << "]\n"; break;
    case ExplanationNode::Kind::Printed:
      out << pad << '"' << chomp(node.message) << "\" [printed by " << node.rule << "]\n";
      break;
  }
  for (const auto& p : node.printed) out << pad << "  printed \"" << chomp(p) << "\"\n";
  for (const auto& c : node.children) render_node(out, c, indent + 1);
}

}  // namespace

std::string render_explanation(const ExplanationNode& node) {
  std::ostringstream out;
  render_node(out, node, 0);
  return out.str();
}

}  // namespace aqua::engine
