// The rule language: a small paren-based production-rule notation.
//
//   (defrule MAIN::check-temp
//     (aqua-temp ?temp)
//     ?cfish <- (fish (name ?fname) (tempmin ?ftempmin))
//     =>
//     (if (> ?ftempmin ?temp)
//       then
//       (printout t "Your aqua is too cold for " ?fname crlf)
//       (retract ?cfish)))
//
// Patterns are either slotted `(tmpl (slot value) ...)` or ordered
// `(tmpl value ...)`. Actions are printout, retract, assert and if/then/else
// over binary numeric comparisons.

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace aqua::dsl {

struct Position {
  int line = 1;
  int column = 1;
  bool operator==(const Position&) const = default;
};

std::string to_string(Position pos);

class SyntaxError : public std::runtime_error {
public:
  SyntaxError(Position pos, const std::string& what);
  Position position() const noexcept { return pos_; }

private:
  Position pos_;
};

class LexError : public SyntaxError {
  using SyntaxError::SyntaxError;
};
class ParseError : public SyntaxError {
  using SyntaxError::SyntaxError;
};
class SemanticError : public SyntaxError {
public:
  SemanticError(Position pos, std::string subject, const std::string& what)
      : SyntaxError(pos, what), subject_(std::move(subject)) {}
  /// The offending variable or rule name.
  const std::string& subject() const noexcept { return subject_; }

private:
  std::string subject_;
};

// Tokens -----------------------------------------------------------------

enum class TokenKind { LParen, RParen, Symbol, Variable, Arrow, Binder, Number, String, Crlf };

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind;
  std::string text;  // symbol/variable name (without '?'), string contents, or number text
  double number = 0;
  Position pos;
};

std::vector<Token> tokenize(std::string_view text);

// AST --------------------------------------------------------------------

struct Variable {
  std::string name;
  bool operator==(const Variable&) const = default;
};
struct Symbol {
  std::string name;
  bool operator==(const Symbol&) const = default;
};
struct Crlf {
  bool operator==(const Crlf&) const = default;
};

// A quoted string literal is a plain std::string.
using Operand = std::variant<Variable, double, std::string, Symbol>;

struct SlotConstraint {
  std::string slot;
  Operand value;
  bool operator==(const SlotConstraint&) const = default;
};

/// Slot name used for positional field `index` (0-based) of an ordered fact.
std::string positional_slot(std::size_t index);

struct FactShape {
  std::string templ;
  bool ordered = false;  // positional fields, slot names from positional_slot()
  std::vector<SlotConstraint> slots;
  bool operator==(const FactShape&) const = default;
};

struct Pattern {
  std::optional<std::string> binder;  // the `?f <-` fact binding
  FactShape shape;
  bool operator==(const Pattern&) const = default;
};

using PrintItem = std::variant<Variable, double, std::string, Symbol, Crlf>;

struct Printout {
  std::string router = "t";
  std::vector<PrintItem> items;
  bool operator==(const Printout&) const = default;
};

struct Retract {
  std::string binder;
  bool operator==(const Retract&) const = default;
};

struct AssertFact {
  FactShape fact;
  bool operator==(const AssertFact&) const = default;
};

enum class CompareOp { Lt, Gt, Le, Ge, Eq, Ne };

std::string_view to_string(CompareOp op);
std::optional<CompareOp> parse_compare_op(std::string_view text);
bool compare(CompareOp op, double lhs, double rhs);

struct Test {
  CompareOp op = CompareOp::Eq;
  Operand lhs;
  Operand rhs;
  bool operator==(const Test&) const = default;
};

struct Action;

struct If {
  Test test;
  std::vector<Action> then_actions;
  std::vector<Action> else_actions;
  bool operator==(const If&) const;
};

struct Action {
  std::variant<Printout, Retract, AssertFact, If> node;
  bool operator==(const Action&) const = default;
};

struct Rule {
  std::string name;
  std::vector<Pattern> patterns;
  std::vector<Action> actions;
  bool operator==(const Rule&) const = default;
};

class RuleSet {
public:
  RuleSet() = default;
  explicit RuleSet(std::vector<Rule> rules);

  /// Throws SemanticError on a duplicate name.
  void add(Rule rule);

  const std::vector<Rule>& rules() const noexcept { return rules_; }
  const Rule* find(std::string_view name) const;
  std::size_t size() const noexcept { return rules_.size(); }
  bool empty() const noexcept { return rules_.empty(); }

  bool operator==(const RuleSet&) const = default;

private:
  std::vector<Rule> rules_;
};

/// Lexes, parses and checks a rule file. Throws LexError, ParseError or SemanticError.
RuleSet parse_rules(std::string_view text);
RuleSet parse_rules_file(const std::string& path);

/// Checks the binding invariants of a single rule (used by the parser and by
/// code that builds rules programmatically). `pos` is reported on failure.
void check_rule(const Rule& rule, Position pos = {});

std::string render_rule(const Rule& rule);
std::string render_rules(const RuleSet& rules);

/// Every template name a rule's patterns consume.
std::vector<std::string> consumed_templates(const Rule& rule);

}  // namespace aqua::dsl
