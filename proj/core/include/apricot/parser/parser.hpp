#pragma once

#include <string_view>
#include <vector>

#include "apricot/core/ast.hpp"
#include "apricot/core/source.hpp"
#include "apricot/parser/lexer.hpp"

namespace apricot::parse {

struct ParseResult {
  ast::CompilationUnit unit;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return !has_errors(diagnostics); }
};

/// Recursive descent over the token list (comments are skipped). Recovers at
/// statement and member boundaries so that one run reports several errors.
ParseResult parse_compilation_unit(const std::vector<Token>& tokens);

/// tokenize + parse_compilation_unit.
ParseResult parse_source(std::string_view source, std::uint32_t file = 0);

/// Tokenize every file separately and parse the concatenation as one unit.
ParseResult parse_files(const SourceManager& sources);

struct IntervalParse {
  ast::IntervalExpr interval;
  std::vector<Diagnostic> diagnostics;
};

/// Parses `⌊ e1 , e2 ⌉`. Literal bounds are validated here; expression bounds
/// are left for the analyzer once constants are folded.
IntervalParse parse_interval(const std::vector<Token>& tokens);

struct ExprParse {
  ast::ExprPtr expr;
  std::vector<Diagnostic> diagnostics;
};

/// A single expression filling the whole input (used for external bindings).
ExprParse parse_expression(std::string_view source, std::uint32_t file = 0);

}  // namespace apricot::parse
