#include <algorithm>
#include <iostream>
#include <sstream>

#include "aqua/cli.hpp"
#include "aqua/text.hpp"

namespace aqua::cli {

namespace {

struct Question {
  std::string_view field;     // TankState field the answer fills
  std::string_view templ;     // working-memory fact carrying it, if any
  std::string_view prompt;
};

constexpr Question kQuestions[] = {
    {"temperature_f", "aqua-temp", "Water temperature (F)"},
    {"ph", "aqua-ph", "pH"},
    {"hardness_dgh", "aqua-hardness", "Hardness (dGH)"},
    {"tank_size_gal", "aqua-size", "Tank size (gallons)"},
    {"has_hiding_places", "", "Hiding places (y/n)"},
    {"stocking_ratio", "", "Stocking ratio (blank: residents per gallon)"},
    {"residents", "", "Residents (comma-separated, blank for none)"},
};

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string why_text(const Question& q, const dsl::RuleSet& rules, std::span<const kb::CfModifier> modifiers) {
  std::ostringstream os;
  std::vector<std::string> users;
  if (!q.templ.empty()) {
    for (const auto& r : rules.rules()) {
      auto t = dsl::consumed_templates(r);
      if (std::find(t.begin(), t.end(), q.templ) != t.end()) users.push_back("rule " + r.name);
    }
  }
  for (const auto& m : modifiers) {
    if (m.when.field == q.field) users.push_back("modifier " + m.id + (m.description.empty() ? "" : " (" + m.description + ")"));
  }
  if (users.empty()) {
    os << "No rule or modifier reads " << q.field << ".\n";
  } else {
    os << q.field << " is read by:\n";
    for (const auto& u : users) os << "  " << u << '\n';
  }
  return os.str();
}

// Checks one answer in isolation; returns an error message or empty.
std::string check_answer(const Question& q, std::string_view answer, kb::TankState& tank, bool& ratio_given) {
  const auto f = q.field;
  if (f == "has_hiding_places") {
    const auto a = lower(answer);
    if (a == "y" || a == "yes") tank.has_hiding_places = true;
    else if (a == "n" || a == "no") tank.has_hiding_places = false;
    else return "Please answer y or n.";
    return {};
  }
  if (f == "residents") {
    tank.residents.clear();
    std::string item;
    std::istringstream is{std::string(answer)};
    while (std::getline(is, item, ',')) {
      auto t = trim(item);
      if (!t.empty()) tank.residents.emplace_back(t);
    }
    return {};
  }
  if (f == "stocking_ratio" && answer.empty()) {
    ratio_given = false;
    return {};
  }
  auto v = parse_number(answer);
  if (!v) return "Please enter a number.";
  if (f == "temperature_f") tank.temperature_f = *v;
  else if (f == "ph") {
    if (*v <= 0 || *v > 14) return "pH must be above 0 and at most 14.";
    tank.ph = *v;
  } else if (f == "hardness_dgh") {
    if (*v < 0) return "Hardness cannot be negative.";
    tank.hardness_dgh = *v;
  } else if (f == "tank_size_gal") {
    if (*v <= 0) return "Tank size must be positive.";
    tank.tank_size_gal = *v;
  } else if (f == "stocking_ratio") {
    if (*v < 0) return "Stocking ratio cannot be negative.";
    tank.stocking_ratio = *v;
    ratio_given = true;
  }
  return {};
}

// "too-cold" -> "too cold"
std::string reason_words(aqua::advisor::Reason r) {
  std::string s(aqua::advisor::to_string(r));
  std::replace(s.begin(), s.end(), '-', ' ');
  return s;
}

std::string display_name(const kb::ProfileSet& profiles, const std::string& id) {
  const auto* p = profiles.find(id);
  return p ? p->name : id;
}

}  // namespace

std::string render_result(const advisor::ConsultationResult& r, const kb::ProfileSet& profiles) {
  std::ostringstream os;
  os << "\nSuitable for these conditions (" << r.adequate.size() << "):\n";
  for (const auto& id : r.adequate) os << "  " << display_name(profiles, id) << '\n';
  if (!r.eliminated.empty()) {
    os << "Eliminated (" << r.eliminated.size() << "):\n";
    for (const auto& e : r.eliminated) {
      os << "  " << display_name(profiles, e.species) << ": " << reason_words(e.reason) << " (tank "
         << format_number(e.value) << ", limit " << format_number(e.bound) << ")\n";
    }
  }
  for (const auto& w : r.warnings) os << "warning: " << w << '\n';
  if (r.degraded) os << "warning: too many combinations, groups are approximate\n";
  if (r.groups.empty()) {
    os << "No group clears threshold " << format_number(r.threshold) << ".\n";
  } else {
    os << "Suggested groups (threshold " << format_number(r.threshold) << "):\n";
    std::size_t n = 0;
    for (const auto& g : r.groups) {
      os << "  " << ++n << ". ";
      for (std::size_t i = 0; i < g.names.size(); ++i) os << (i ? ", " : "") << g.names[i];
      os << "  [score " << format_number(g.score) << "]\n";
    }
  }
  return os.str();
}

int run_interactive(const kb::KnowledgeBase& kb, const dsl::RuleSet& rules, double threshold, std::istream& in,
                    std::ostream& out, const advisor::AdvisorConfig& config) {
  kb::TankState tank;
  bool ratio_given = false;
  std::string line;

  out << "Aquarium advisor. Type 'why' at any prompt to see what uses the answer.\n";
  for (const auto& q : kQuestions) {
    for (;;) {
      out << q.prompt << "? " << std::flush;
      if (!std::getline(in, line)) {
        out << "\ninput ended before the consultation finished\n";
        return kExitInterrupted;
      }
      auto answer = trim(line);
      if (lower(answer) == "why") {
        out << why_text(q, rules, kb.modifiers);
        continue;
      }
      auto problem = check_answer(q, answer, tank, ratio_given);
      if (problem.empty()) break;
      out << problem << '\n';
    }
  }
  for (auto& r : tank.residents) {
    if (const auto* p = advisor::resolve_species(kb.profiles, r)) r = p->id;
  }
  if (!ratio_given) tank.stocking_ratio = static_cast<double>(tank.residents.size()) / tank.tank_size_gal;

  auto result = advisor::run_consultation(tank, kb, rules, threshold, config);
  out << render_result(result, kb.profiles);

  out << "\nCommands: how <species>, add <species>, quit\n";
  for (;;) {
    out << "> " << std::flush;
    if (!std::getline(in, line)) return kExitOk;
    auto cmd = trim(line);
    if (cmd.empty()) continue;
    const auto space = cmd.find(' ');
    const auto verb = lower(cmd.substr(0, space));
    const auto arg = space == std::string_view::npos ? std::string_view{} : trim(cmd.substr(space + 1));
    if (verb == "quit" || verb == "exit") return kExitOk;
    if ((verb == "how" || verb == "add") && arg.empty()) {
      out << "usage: " << verb << " <species>\n";
      continue;
    }
    if (verb == "how") {
      const auto* p = advisor::resolve_species(kb.profiles, arg);
      if (!p) {
        out << "unknown species: " << arg << '\n';
        continue;
      }
      auto e = std::find_if(result.eliminated.begin(), result.eliminated.end(),
                            [&](const advisor::EliminationRecord& r) { return r.species == p->id; });
      if (e == result.eliminated.end()) {
        out << p->name << " was not eliminated; it suits the entered conditions.\n";
        continue;
      }
      out << engine::render_explanation(engine::explain(result.trace, engine::ExplainTarget::of_retraction(e->fact)));
    } else if (verb == "add") {
      const auto* p = advisor::resolve_species(kb.profiles, arg);
      const std::string id = p ? p->id : std::string(arg);
      try {
        result = advisor::whatif_add(result, id, kb, rules, config);
      } catch (const advisor::NotCandidateError& e) {
        out << e.what() << '\n';
        continue;
      }
      out << "Added " << display_name(kb.profiles, id) << " to the residents.\n";
      out << render_result(result, kb.profiles);
    } else {
      out << "unknown command: " << verb << " (try how, add or quit)\n";
    }
  }
}

}  // namespace aqua::cli
