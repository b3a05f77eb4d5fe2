#include "apricot/parser/lexer.hpp"

#include <algorithm>
#include <iterator>
#include <cctype>

namespace apricot::parse {

namespace {

constexpr std::string_view kKeywords[] = {
    "System",     "Plant",      "Controller", "Dynamic",    "Assignment", "ParallelAssignment",
    "SequentialAssignment",     "Real",       "Integer",    "Boolean",    "real",
    "integer",    "boolean",    "Constant",   "Requires",   "Constraint", "Invariant",
    "Condition",  "Continuous", "Discrete",   "Composition", "Init",      "Interface",
    "new",        "this",       "in",         "and",        "or",         "xor",
    "Skip",       "True",       "False",      "null",       "Inf",        "start",
    "Return",     "Class"};

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::string_view to_string(TokenKind k) {
  switch (k) {
    case TokenKind::Identifier: return "identifier";
    case TokenKind::Keyword: return "keyword";
    case TokenKind::IntegerLiteral: return "integer literal";
    case TokenKind::RealLiteral: return "real literal";
    case TokenKind::Punct: return "punctuation";
    case TokenKind::Operator: return "operator";
    case TokenKind::Comment: return "comment";
    case TokenKind::End: return "end of input";
  }
  return "?";
}

bool is_keyword(std::string_view word) {
  return std::find(std::begin(kKeywords), std::end(kKeywords), word) != std::end(kKeywords);
}

TokenizeResult tokenize(std::string_view src, std::uint32_t file) {
  TokenizeResult out;
  std::uint32_t line = 1, col = 1;
  std::size_t i = 0;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto emit = [&](TokenKind kind, std::size_t start, Span span) {
    out.tokens.push_back(Token{kind, std::string(src.substr(start, i - start)), span});
  };

  while (i < src.size()) {
    char c = src[i];
    Span span{file, line, col};
    std::size_t start = i;

    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') advance(1);
      emit(TokenKind::Comment, start, span);
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      auto close = src.find("*/", i + 2);
      if (close == std::string_view::npos) {
        out.diagnostics.push_back({Severity::Error, "parse.unterminated-comment", "unterminated block comment", span,
                                   {"*/"}});
        advance(src.size() - i);
        break;
      }
      advance(close + 2 - i);
      emit(TokenKind::Comment, start, span);
      continue;
    }
    if (is_letter(c)) {
      while (i < src.size() && (is_letter(src[i]) || is_digit(src[i]))) advance(1);
      std::string_view word = src.substr(start, i - start);
      emit(is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, start, span);
      continue;
    }
    if (is_digit(c)) {
      bool real = false;
      while (i < src.size() && is_digit(src[i])) advance(1);
      if (i + 1 < src.size() && src[i] == '.' && is_digit(src[i + 1])) {
        real = true;
        advance(1);
        while (i < src.size() && is_digit(src[i])) advance(1);
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && is_digit(src[j])) {
          real = true;
          advance(j - i);
          while (i < src.size() && is_digit(src[i])) advance(1);
        }
      }
      emit(real ? TokenKind::RealLiteral : TokenKind::IntegerLiteral, start, span);
      continue;
    }

    // two-character operators first (maximal munch)
    if (i + 1 < src.size()) {
      std::string_view two = src.substr(i, 2);
      if (two == "==" || two == "!=" || two == "<=" || two == ">=" || two == "||") {
        advance(2);
        emit(TokenKind::Operator, start, span);
        continue;
      }
    }
    switch (c) {
      case '(': case ')': case '{': case '}': case '[': case ']': case ',': case ';': case '.': case ':':
        advance(1);
        emit(TokenKind::Punct, start, span);
        continue;
      case '+': case '-': case '*': case '/': case '=': case '<': case '>': case '!':
        advance(1);
        emit(TokenKind::Operator, start, span);
        continue;
      default: break;
    }

    std::string shown = (static_cast<unsigned char>(c) >= 0x20 && static_cast<unsigned char>(c) < 0x7f)
                            ? std::string(1, c)
                            : "\\x" + std::to_string(static_cast<unsigned char>(c));
    out.diagnostics.push_back(
        {Severity::Error, "parse.illegal-character", "illegal character '" + shown + "'", span, {"letter", "digit", "operator"}});
    advance(1);
  }
  out.tokens.push_back(Token{TokenKind::End, "", Span{file, line, col}});
  return out;
}

}  // namespace apricot::parse
