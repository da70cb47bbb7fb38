#include <cctype>

#include "aqua/rules.hpp"
#include "aqua/text.hpp"

namespace aqua::dsl {

std::string to_string(Position pos) { return std::to_string(pos.line) + ":" + std::to_string(pos.column); }

SyntaxError::SyntaxError(Position pos, const std::string& what)
    : std::runtime_error(to_string(pos) + ": " + what), pos_(pos) {}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::Symbol: return "symbol";
    case TokenKind::Variable: return "variable";
    case TokenKind::Arrow: return "'=>'";
    case TokenKind::Binder: return "'<-'";
    case TokenKind::Number: return "number";
    case TokenKind::String: return "string";
    case TokenKind::Crlf: return "crlf";
  }
  return "token";
}

namespace {

bool is_delimiter(char c) {
  return c == '(' || c == ')' || c == '"' || c == ';' || std::isspace(static_cast<unsigned char>(c));
}

bool looks_numeric(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
  if (i < s.size() && s[i] == '.') ++i;
  return i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]));
}

class Lexer {
public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == '(') {
        out.push_back({TokenKind::LParen, "(", 0, here()});
        advance();
      } else if (c == ')') {
        out.push_back({TokenKind::RParen, ")", 0, here()});
        advance();
      } else if (c == '"') {
        out.push_back(string_token());
      } else {
        out.push_back(word_token());
      }
    }
    return out;
  }

private:
  Position here() const { return {line_, column_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  Token string_token() {
    Position start = here();
    advance();  // opening quote
    std::string value;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '"') {
        advance();
        return {TokenKind::String, std::move(value), 0, start};
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) break;
        c = text_[pos_];
        if (c == 'n') value += '\n';
        else value += c;
        advance();
        continue;
      }
      value += c;
      advance();
    }
    throw LexError(start, "unterminated string");
  }

  Token word_token() {
    Position start = here();
    std::size_t begin = pos_;
    while (pos_ < text_.size() && !is_delimiter(text_[pos_])) advance();
    std::string_view word = text_.substr(begin, pos_ - begin);

    if (word == "=>") return {TokenKind::Arrow, "=>", 0, start};
    if (word == "<-") return {TokenKind::Binder, "<-", 0, start};
    if (word == "crlf") return {TokenKind::Crlf, "crlf", 0, start};
    if (word.front() == '?') {
      if (word.size() == 1) throw LexError(start, "variable name missing after '?'");
      return {TokenKind::Variable, std::string(word.substr(1)), 0, start};
    }
    if (looks_numeric(word)) {
      auto value = parse_number(word);
      if (!value) throw LexError(start, "malformed number '" + std::string(word) + "'");
      return {TokenKind::Number, std::string(word), *value, start};
    }
    return {TokenKind::Symbol, std::string(word), 0, start};
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

}  // namespace

std::vector<Token> tokenize(std::string_view text) { return Lexer(text).run(); }

}  // namespace aqua::dsl
