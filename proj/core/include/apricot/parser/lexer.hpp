#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "apricot/core/source.hpp"

namespace apricot::parse {

enum class TokenKind { Identifier, Keyword, IntegerLiteral, RealLiteral, Punct, Operator, Comment, End };

std::string_view to_string(TokenKind k);

struct Token {
  TokenKind kind = TokenKind::End;
  std::string lexeme;
  Span span;

  bool is(TokenKind k, std::string_view text) const { return kind == k && lexeme == text; }
  bool is_keyword(std::string_view kw) const { return is(TokenKind::Keyword, kw); }
  bool is_punct(std::string_view p) const { return is(TokenKind::Punct, p); }
  bool is_op(std::string_view o) const { return is(TokenKind::Operator, o); }
};

bool is_keyword(std::string_view word);

struct TokenizeResult {
  std::vector<Token> tokens;  // comments included, terminated by End
  std::vector<Diagnostic> diagnostics;
};

/// Maximal-munch scanner. Identifiers are a letter followed by letters or digits;
/// `//` and `/* */` comments become Comment tokens.
TokenizeResult tokenize(std::string_view source, std::uint32_t file = 0);

}  // namespace apricot::parse
