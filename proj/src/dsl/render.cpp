#include <sstream>

#include "aqua/rules.hpp"
#include "aqua/text.hpp"

namespace aqua::dsl {

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  out += '"';
  return out;
}

struct OperandText {
  std::string operator()(const Variable& v) const { return "?" + v.name; }
  std::string operator()(double d) const { return format_number(d); }
  std::string operator()(const std::string& s) const { return quote(s); }
  std::string operator()(const Symbol& s) const { return s.name; }
  std::string operator()(const Crlf&) const { return "crlf"; }
};

std::string render_shape(const FactShape& shape) {
  std::string out = "(" + shape.templ;
  for (const auto& s : shape.slots) {
    if (shape.ordered) out += " " + std::visit(OperandText{}, s.value);
    else out += " (" + s.slot + " " + std::visit(OperandText{}, s.value) + ")";
  }
  return out + ")";
}

void render_actions(std::ostringstream& out, const std::vector<Action>& actions, int indent);

void render_action(std::ostringstream& out, const Action& action, int indent) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Printout>) {
          out << pad << "(printout " << node.router;
          for (const auto& item : node.items) out << ' ' << std::visit(OperandText{}, item);
          out << ")";
        } else if constexpr (std::is_same_v<T, Retract>) {
          out << pad << "(retract ?" << node.binder << ")";
        } else if constexpr (std::is_same_v<T, AssertFact>) {
          out << pad << "(assert " << render_shape(node.fact) << ")";
        } else {
          out << pad << "(if (" << to_string(node.test.op) << ' ' << std::visit(OperandText{}, node.test.lhs) << ' '
              << std::visit(OperandText{}, node.test.rhs) << ")\n"
              << pad << "  then";
          if (!node.then_actions.empty()) out << '\n';
          render_actions(out, node.then_actions, indent + 2);
          if (!node.else_actions.empty()) {
            out << '\n' << pad << "  else\n";
            render_actions(out, node.else_actions, indent + 2);
          }
          out << ")";
        }
      },
      action.node);
}

void render_actions(std::ostringstream& out, const std::vector<Action>& actions, int indent) {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) out << '\n';
    render_action(out, actions[i], indent);
  }
}

}  // namespace

std::string render_rule(const Rule& rule) {
  std::ostringstream out;
  out << "(defrule " << rule.name << '\n';
  for (const auto& p : rule.patterns) {
    out << "  ";
    if (p.binder) out << '?' << *p.binder << " <- ";
    out << render_shape(p.shape) << '\n';
  }
  out << "  =>";
  if (!rule.actions.empty()) out << '\n';
  render_actions(out, rule.actions, 2);
  out << ")\n";
  return out.str();
}

std::string render_rules(const RuleSet& rules) {
  std::string out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (i) out += '\n';
    out += render_rule(rules.rules()[i]);
  }
  return out;
}

}  // namespace aqua::dsl
