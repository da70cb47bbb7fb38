#include <array>
#include <sstream>

#include "aqua/advisor.hpp"
#include "aqua/text.hpp"

namespace aqua::advisor {

namespace {

struct Constraint {
  std::string_view rule;
  std::string_view reading;   // tank fact template
  std::string_view var;       // tank reading variable
  std::string_view low_slot;  // fish slot holding the lower bound
  std::string_view high_slot; // empty when only a minimum applies
  std::string_view low_reason;
  std::string_view high_reason;
  std::string_view low_message;
  std::string_view high_message;
};

constexpr std::array<Constraint, 4> kConstraints = {{
    {"MAIN::check-temp", "aqua-temp", "temp", "tempmin", "tempmax", "too-cold", "too-hot",
     "Your aqua is too cold for ", "Your aqua is too hot for "},
    {"MAIN::check-ph", "aqua-ph", "ph", "phmin", "phmax", "ph-low", "ph-high", "Your aqua's pH is too low for ",
     "Your aqua's pH is too high for "},
    {"MAIN::check-hardness", "aqua-hardness", "hard", "hardmin", "hardmax", "hardness-low", "hardness-high",
     "Your aqua's water is too soft for ", "Your aqua's water is too hard for "},
    {"MAIN::check-tank-size", "aqua-size", "size", "mintank", "", "tank-too-small", "",
     "Your aqua is too small for ", ""},
}};

void emit_branch(std::ostringstream& out, std::string_view op, std::string_view bound_slot, std::string_view var,
                 std::string_view message, std::string_view reason) {
  std::string bound = "?f" + std::string(bound_slot);
  out << "  (if (" << op << ' ' << bound << " ?" << var << ")\n"
      << "    then\n"
      << "    (printout t \"" << message << "\" ?fname crlf)\n"
      << "    (assert (eliminated (species ?fid) (reason " << reason << ") (value ?" << var << ") (bound " << bound
      << ")))\n"
      << "    (retract ?cfish))";
}

}  // namespace

std::string constraint_rules_text() {
  std::ostringstream out;
  for (std::size_t i = 0; i < kConstraints.size(); ++i) {
    const auto& c = kConstraints[i];
    if (i) out << '\n';
    out << "(defrule " << c.rule << '\n'
        << "  (" << c.reading << " ?" << c.var << ")\n"
        << "  ?cfish <- (fish (id ?fid) (name ?fname) (" << c.low_slot << " ?f" << c.low_slot << ")";
    if (!c.high_slot.empty()) out << " (" << c.high_slot << " ?f" << c.high_slot << ")";
    out << ")\n  =>\n";
    emit_branch(out, ">", c.low_slot, c.var, c.low_message, c.low_reason);
    if (!c.high_slot.empty()) {
      out << '\n';
      emit_branch(out, "<", c.high_slot, c.var, c.high_message, c.high_reason);
    }
    out << ")\n";
  }
  return out.str();
}

dsl::RuleSet constraint_rules() {
  static const dsl::RuleSet rules = dsl::parse_rules(constraint_rules_text());
  return rules;
}

void seed_working_memory(engine::WorkingMemory& wm, const kb::TankState& tank, const kb::ProfileSet& profiles) {
  for (const auto& p : profiles) {
    engine::Slots slots{
        {"id", p.id},
        {"name", p.name},
        {"family", p.family},
        {"lifespan", p.life_span_years},
        {"mintank", p.min_tank_gal},
        {"tempmin", p.temp_min_f},
        {"tempmax", p.temp_max_f},
        {"phmin", p.ph_min},
        {"phmax", p.ph_max},
        {"hardmin", p.hardness_min_dgh},
        {"hardmax", p.hardness_max_dgh},
    };
    wm.assert_fact("fish", std::move(slots));
  }
  auto reading = [&wm](std::string templ, double value) {
    wm.assert_fact(std::move(templ), {{dsl::positional_slot(0), value}}, std::nullopt, true);
  };
  reading("aqua-temp", tank.temperature_f);
  reading("aqua-ph", tank.ph);
  reading("aqua-hardness", tank.hardness_dgh);
  reading("aqua-size", tank.tank_size_gal);
}

}  // namespace aqua::advisor
