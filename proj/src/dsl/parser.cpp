#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "aqua/rules.hpp"

namespace aqua::dsl {

std::string positional_slot(std::size_t index) { return "$" + std::to_string(index + 1); }

std::string_view to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
  }
  return "?";
}

std::optional<CompareOp> parse_compare_op(std::string_view text) {
  if (text == "<") return CompareOp::Lt;
  if (text == ">") return CompareOp::Gt;
  if (text == "<=") return CompareOp::Le;
  if (text == ">=") return CompareOp::Ge;
  if (text == "=") return CompareOp::Eq;
  if (text == "!=" || text == "<>") return CompareOp::Ne;
  return std::nullopt;
}

bool compare(CompareOp op, double lhs, double rhs) {
  switch (op) {
    case CompareOp::Lt: return lhs < rhs;
    case CompareOp::Gt: return lhs > rhs;
    case CompareOp::Le: return lhs <= rhs;
    case CompareOp::Ge: return lhs >= rhs;
    case CompareOp::Eq: return lhs == rhs;
    case CompareOp::Ne: return lhs != rhs;
  }
  return false;
}

bool If::operator==(const If& other) const {
  return test == other.test && then_actions == other.then_actions && else_actions == other.else_actions;
}

RuleSet::RuleSet(std::vector<Rule> rules) {
  for (auto& r : rules) add(std::move(r));
}

void RuleSet::add(Rule rule) {
  if (find(rule.name)) throw SemanticError({}, rule.name, "duplicate rule " + rule.name);
  rules_.push_back(std::move(rule));
}

const Rule* RuleSet::find(std::string_view name) const {
  auto it = std::find_if(rules_.begin(), rules_.end(), [&](const Rule& r) { return r.name == name; });
  return it == rules_.end() ? nullptr : &*it;
}

std::vector<std::string> consumed_templates(const Rule& rule) {
  std::vector<std::string> out;
  for (const auto& p : rule.patterns)
    if (std::find(out.begin(), out.end(), p.shape.templ) == out.end()) out.push_back(p.shape.templ);
  return out;
}

// Binding checks --------------------------------------------------------------

namespace {

enum class Use { Value, Retract };

// Visits every variable occurrence in actions, in textual order.
void walk_action_vars(const std::vector<Action>& actions, const std::function<void(const std::string&, Use)>& f) {
  auto operand = [&](const auto& v) {
    if (const auto* var = std::get_if<Variable>(&v)) f(var->name, Use::Value);
  };
  for (const auto& a : actions) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Printout>) {
            for (const auto& item : node.items) operand(item);
          } else if constexpr (std::is_same_v<T, Retract>) {
            f(node.binder, Use::Retract);
          } else if constexpr (std::is_same_v<T, AssertFact>) {
            for (const auto& s : node.fact.slots) operand(s.value);
          } else {
            operand(node.test.lhs);
            operand(node.test.rhs);
            walk_action_vars(node.then_actions, f);
            walk_action_vars(node.else_actions, f);
          }
        },
        a.node);
  }
}

void check_rule_impl(const Rule& rule, Position rule_pos, const std::vector<Position>* action_var_pos) {
  if (rule.patterns.empty()) throw SemanticError(rule_pos, rule.name, "rule " + rule.name + " has no patterns");

  std::set<std::string> values;
  std::set<std::string> binders;
  for (const auto& p : rule.patterns) {
    std::set<std::string> slots;
    for (const auto& s : p.shape.slots) {
      if (!slots.insert(s.slot).second)
        throw SemanticError(rule_pos, s.slot, "duplicate slot " + s.slot + " in pattern " + p.shape.templ);
      if (const auto* var = std::get_if<Variable>(&s.value)) {
        if (binders.contains(var->name))
          throw SemanticError(rule_pos, var->name, "?" + var->name + " is a fact binding, not a value");
        values.insert(var->name);
      }
    }
    if (p.binder) {
      if (values.contains(*p.binder) || !binders.insert(*p.binder).second)
        throw SemanticError(rule_pos, *p.binder, "?" + *p.binder + " is bound more than once");
    }
  }

  std::size_t index = 0;
  walk_action_vars(rule.actions, [&](const std::string& name, Use use) {
    Position pos = action_var_pos && index < action_var_pos->size() ? (*action_var_pos)[index] : rule_pos;
    ++index;
    if (use == Use::Retract) {
      if (binders.contains(name)) return;
      if (values.contains(name)) throw SemanticError(pos, name, "?" + name + " is not a fact binding");
      throw SemanticError(pos, name, "unbound variable ?" + name);
    }
    if (values.contains(name)) return;
    if (binders.contains(name)) throw SemanticError(pos, name, "fact binding ?" + name + " used as a value");
    throw SemanticError(pos, name, "unbound variable ?" + name);
  });
}

// Parser -------------------------------------------------------------------

class Parser {
public:
  explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

  RuleSet run() {
    check_balance();
    RuleSet out;
    while (!at_end()) {
      Position start = peek().pos;
      var_positions_.clear();
      Rule rule = parse_defrule();
      check_rule_impl(rule, start, &var_positions_);
      if (out.find(rule.name)) throw SemanticError(start, rule.name, "duplicate rule " + rule.name);
      out.add(std::move(rule));
    }
    return out;
  }

private:
  void check_balance() const {
    std::vector<Position> open;
    for (const auto& t : tokens_) {
      if (t.kind == TokenKind::LParen) open.push_back(t.pos);
      else if (t.kind == TokenKind::RParen) {
        if (open.empty()) throw ParseError(t.pos, "unbalanced ')'");
        open.pop_back();
      }
    }
    if (!open.empty()) throw ParseError(open.back(), "unbalanced '(' is never closed");
  }

  bool at_end() const { return i_ >= tokens_.size(); }
  const Token& peek() const { return tokens_[i_]; }
  Position here() const { return at_end() ? (tokens_.empty() ? Position{} : tokens_.back().pos) : peek().pos; }

  const Token& expect(TokenKind kind, std::string_view what) {
    if (at_end()) throw ParseError(here(), "expected " + std::string(what) + " but input ended");
    const Token& t = tokens_[i_];
    if (t.kind != kind)
      throw ParseError(t.pos, "expected " + std::string(what) + ", found " + std::string(to_string(t.kind)) +
                                  (t.text.empty() ? "" : " '" + t.text + "'"));
    ++i_;
    return t;
  }

  const Token& expect_symbol(std::string_view word) {
    const Token& t = expect(TokenKind::Symbol, "'" + std::string(word) + "'");
    if (t.text != word) throw ParseError(t.pos, "expected '" + std::string(word) + "', found '" + t.text + "'");
    return t;
  }

  bool next_is(TokenKind kind) const { return !at_end() && peek().kind == kind; }
  bool next_is_symbol(std::string_view word) const {
    return next_is(TokenKind::Symbol) && peek().text == word;
  }

  Rule parse_defrule() {
    expect(TokenKind::LParen, "'(' starting a defrule");
    expect_symbol("defrule");
    Rule rule;
    rule.name = expect(TokenKind::Symbol, "rule name").text;
    while (!next_is(TokenKind::Arrow)) {
      if (next_is(TokenKind::RParen)) throw ParseError(peek().pos, "expected '=>' before end of rule");
      rule.patterns.push_back(parse_pattern());
    }
    expect(TokenKind::Arrow, "'=>'");
    while (!next_is(TokenKind::RParen)) rule.actions.push_back(parse_action());
    expect(TokenKind::RParen, "')'");
    return rule;
  }

  Pattern parse_pattern() {
    Pattern p;
    if (next_is(TokenKind::Variable)) {
      p.binder = tokens_[i_++].text;
      expect(TokenKind::Binder, "'<-'");
    }
    p.shape = parse_fact_shape(false);
    return p;
  }

  // `(tmpl (slot v) ...)` or `(tmpl v ...)`
  FactShape parse_fact_shape(bool record_vars) {
    expect(TokenKind::LParen, "'(' starting a fact");
    FactShape shape;
    shape.templ = expect(TokenKind::Symbol, "template name").text;
    if (next_is(TokenKind::LParen)) {
      std::set<std::string> seen;
      while (next_is(TokenKind::LParen)) {
        ++i_;
        const Token& slot = expect(TokenKind::Symbol, "slot name");
        if (!seen.insert(slot.text).second)
          throw SemanticError(slot.pos, slot.text, "duplicate slot " + slot.text + " in pattern " + shape.templ);
        Operand value = parse_operand(record_vars);
        expect(TokenKind::RParen, "')' closing slot " + slot.text);
        shape.slots.push_back({slot.text, std::move(value)});
      }
    } else {
      while (!next_is(TokenKind::RParen)) {
        shape.ordered = true;
        shape.slots.push_back({positional_slot(shape.slots.size()), parse_operand(record_vars)});
      }
    }
    expect(TokenKind::RParen, "')' closing fact " + shape.templ);
    return shape;
  }

  Operand parse_operand(bool record_vars) {
    if (at_end()) throw ParseError(here(), "expected a value but input ended");
    const Token& t = tokens_[i_];
    switch (t.kind) {
      case TokenKind::Variable:
        ++i_;
        if (record_vars) var_positions_.push_back(t.pos);
        return Variable{t.text};
      case TokenKind::Number: ++i_; return t.number;
      case TokenKind::String: ++i_; return t.text;
      case TokenKind::Symbol: ++i_; return Symbol{t.text};
      default:
        throw ParseError(t.pos, "expected a value, found " + std::string(to_string(t.kind)));
    }
  }

  Action parse_action() {
    expect(TokenKind::LParen, "'(' starting an action");
    const Token& head = expect(TokenKind::Symbol, "action name");
    if (head.text == "printout") {
      Printout p;
      p.router = expect(TokenKind::Symbol, "printout router").text;
      while (!next_is(TokenKind::RParen)) {
        if (next_is(TokenKind::Crlf)) {
          ++i_;
          p.items.emplace_back(Crlf{});
          continue;
        }
        std::visit([&](auto&& v) { p.items.emplace_back(std::move(v)); }, parse_operand(true));
      }
      expect(TokenKind::RParen, "')' closing printout");
      return {std::move(p)};
    }
    if (head.text == "retract") {
      const Token& var = expect(TokenKind::Variable, "fact binding variable");
      var_positions_.push_back(var.pos);
      expect(TokenKind::RParen, "')' closing retract");
      return {Retract{var.text}};
    }
    if (head.text == "assert") {
      AssertFact a{parse_fact_shape(true)};
      expect(TokenKind::RParen, "')' closing assert");
      return {std::move(a)};
    }
    if (head.text == "if") {
      If node;
      expect(TokenKind::LParen, "'(' starting a comparison");
      const Token& op = expect(TokenKind::Symbol, "comparison operator");
      auto parsed = parse_compare_op(op.text);
      if (!parsed) throw ParseError(op.pos, "unknown comparison operator '" + op.text + "'");
      node.test.op = *parsed;
      node.test.lhs = parse_operand(true);
      node.test.rhs = parse_operand(true);
      expect(TokenKind::RParen, "')' closing comparison");
      expect_symbol("then");
      while (!next_is(TokenKind::RParen) && !next_is_symbol("else")) node.then_actions.push_back(parse_action());
      if (next_is_symbol("else")) {
        ++i_;
        while (!next_is(TokenKind::RParen)) node.else_actions.push_back(parse_action());
      }
      expect(TokenKind::RParen, "')' closing if");
      return {std::move(node)};
    }
    throw ParseError(head.pos, "unknown action '" + head.text + "'");
  }

  std::vector<Token> tokens_;
  std::size_t i_ = 0;
  std::vector<Position> var_positions_;
};

}  // namespace

void check_rule(const Rule& rule, Position pos) { check_rule_impl(rule, pos, nullptr); }

RuleSet parse_rules(std::string_view text) { return Parser(tokenize(text)).run(); }

RuleSet parse_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str());
}

}  // namespace aqua::dsl
