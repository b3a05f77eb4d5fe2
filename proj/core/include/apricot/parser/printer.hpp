#pragma once

#include <string>

#include "apricot/core/ast.hpp"

namespace apricot::parse {

/// Source text that reparses to a structurally identical unit.
std::string print_unit(const ast::CompilationUnit& unit);
std::string print_class(const ast::ClassDecl& decl);

/// Minimal parentheses, derived from operator precedence.
std::string print_expr(const ast::Expr& e);

/// Compact one-line rendering used in prefix annotations, e.g. `height=h[1]`.
std::string statement_label(const ast::Stmt& s);

}  // namespace apricot::parse
