#include "apricot/parser/parser.hpp"

#include <charconv>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "apricot/core/interval.hpp"
#include "apricot/core/types.hpp"

namespace apricot::parse {

namespace {

using namespace apricot::ast;

struct ParseError : std::runtime_error {
  Diagnostic diag;
  explicit ParseError(Diagnostic d) : std::runtime_error(d.message), diag(std::move(d)) {}
};

bool is_scalar_keyword(const Token& t) {
  if (t.kind != TokenKind::Keyword) return false;
  return t.lexeme == "Real" || t.lexeme == "Integer" || t.lexeme == "Boolean" || t.lexeme == "real" ||
         t.lexeme == "integer" || t.lexeme == "boolean";
}

bool is_interface_keyword(const Token& t) {
  return t.kind == TokenKind::Keyword && builtin_interface_from(t.lexeme).has_value();
}

bool is_type_start(const Token& t) {
  return is_scalar_keyword(t) || is_interface_keyword(t) || t.kind == TokenKind::Identifier;
}

/// Literal value of a bound for early validation: numbers, Inf, -Inf.
std::optional<Value> literal_number(const ExprPtr& e) {
  if (!e) return std::nullopt;
  if (const auto* l = e->as<Literal>(); l && l->value.is_number()) return l->value;
  return std::nullopt;
}

class Parser {
 public:
  explicit Parser(const std::vector<Token>& tokens) {
    for (const auto& t : tokens)
      if (t.kind != TokenKind::Comment) toks_.push_back(t);
    if (toks_.empty() || toks_.back().kind != TokenKind::End) toks_.push_back(Token{TokenKind::End, "", {}});
  }

  ParseResult unit() {
    ParseResult r;
    while (!at_end()) {
      try {
        r.unit.classes.push_back(class_decl());
      } catch (const ParseError& e) {
        diags_.push_back(e.diag);
        synchronize_top();
      }
    }
    r.diagnostics = std::move(diags_);
    return r;
  }

  IntervalParse interval_only() {
    IntervalParse r;
    try {
      r.interval = interval();
      if (!at_end()) fail("unexpected trailing tokens after interval", {"end of input"});
    } catch (const ParseError& e) {
      diags_.push_back(e.diag);
    }
    r.diagnostics = std::move(diags_);
    return r;
  }

  ExprParse expression_only() {
    ExprParse r;
    try {
      r.expr = expr();
      if (!at_end()) fail("unexpected trailing tokens after expression", {"end of input"});
    } catch (const ParseError& e) {
      diags_.push_back(e.diag);
    }
    r.diagnostics = std::move(diags_);
    return r;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<Diagnostic> diags_;
  int anon_counter_ = 0;
  std::vector<std::string> class_stack_;

  // -- token helpers --
  const Token& peek(std::size_t k = 0) const {
    std::size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at_end() const { return peek().kind == TokenKind::End; }
  const Token& next() {
    const Token& t = peek();
    if (!at_end()) ++pos_;
    return t;
  }
  bool accept_punct(std::string_view p) {
    if (peek().is_punct(p)) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_op(std::string_view o) {
    if (peek().is_op(o)) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_keyword(std::string_view k) {
    if (peek().is_keyword(k)) {
      ++pos_;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(std::string message, std::vector<std::string> expected, std::string rule = "parse.syntax") {
    throw ParseError(Diagnostic{Severity::Error, std::move(rule), std::move(message), peek().span, std::move(expected)});
  }
  [[noreturn]] void fail_at(const Span& span, std::string message, std::string rule, std::vector<std::string> expected) {
    throw ParseError(Diagnostic{Severity::Error, std::move(rule), std::move(message), span, std::move(expected)});
  }
  void report(const Span& span, std::string message, std::string rule, std::vector<std::string> expected = {}) {
    diags_.push_back(Diagnostic{Severity::Error, std::move(rule), std::move(message), span, std::move(expected)});
  }

  std::string describe(const Token& t) const {
    if (t.kind == TokenKind::End) return "end of input";
    return "'" + t.lexeme + "'";
  }

  void expect_punct(std::string_view p) {
    if (!accept_punct(p)) fail("expected '" + std::string(p) + "' but found " + describe(peek()), {std::string(p)});
  }
  void expect_op(std::string_view o) {
    if (!accept_op(o)) fail("expected '" + std::string(o) + "' but found " + describe(peek()), {std::string(o)});
  }
  std::string expect_identifier() {
    if (peek().kind != TokenKind::Identifier) {
      if (peek().kind == TokenKind::Keyword)
        fail("keyword '" + peek().lexeme + "' cannot be used as an identifier", {"identifier"});
      fail("expected identifier but found " + describe(peek()), {"identifier"});
    }
    return next().lexeme;
  }

  // Skip to the end of the current member/statement: a ';' at depth 0 (consumed)
  // or a '}' closing the enclosing scope (left in place).
  void synchronize() {
    int depth = 0;
    while (!at_end()) {
      const Token& t = peek();
      if (t.is_punct("{")) ++depth;
      if (t.is_punct("}")) {
        if (depth == 0) return;
        --depth;
        ++pos_;
        if (depth == 0 && peek().is_punct(";")) ++pos_;
        if (depth == 0) return;
        continue;
      }
      if (t.is_punct(";") && depth == 0) {
        ++pos_;
        return;
      }
      ++pos_;
    }
  }

  void synchronize_top() {
    int depth = 0;
    while (!at_end()) {
      const Token& t = next();
      if (t.is_punct("{")) ++depth;
      if (t.is_punct("}")) {
        if (--depth <= 0) {
          accept_punct(";");
          return;
        }
      }
    }
  }

  // -- declarations --

  ClassPtr class_decl() {
    auto decl = std::make_shared<ClassDecl>();
    const Token& head = peek();
    decl->span = head.span;
    if (accept_keyword("Class")) {
      decl->form = ClassForm::TopLevel;
    } else if (is_interface_keyword(head)) {
      decl->form = ClassForm::InterfaceImpl;
      decl->parent = next().lexeme;
    } else if (head.kind == TokenKind::Identifier) {
      decl->form = ClassForm::Inheritance;
      decl->parent = next().lexeme;
    } else if (head.is_keyword("Interface")) {
      fail("interface declarations are not supported; implement a built-in interface instead", {"Class", "System", "Plant",
           "Controller", "Dynamic", "Assignment"}, "parse.interface-declaration");
    } else {
      fail("expected a class declaration but found " + describe(head),
           {"Class", "System", "Plant", "Controller", "Dynamic", "Assignment", "identifier"});
    }
    decl->name = expect_identifier();
    expect_punct("{");
    class_stack_.push_back(decl->name);
    class_body(*decl);
    class_stack_.pop_back();
    expect_punct("}");
    accept_punct(";");
    return decl;
  }

  void class_body(ClassDecl& decl) {
    while (!peek().is_punct("}") && !at_end()) {
      try {
        member(decl);
      } catch (const ParseError& e) {
        diags_.push_back(e.diag);
        synchronize();
      }
    }
  }

  TypeRef type_ref() {
    TypeRef t;
    t.span = peek().span;
    if (!is_type_start(peek())) fail("expected a type but found " + describe(peek()), {"type"});
    t.name = next().lexeme;
    if (peek().is_punct("[") && peek(1).is_punct("]")) {
      pos_ += 2;
      t.array = true;
    }
    return t;
  }

  // `Type Name {` inside a class or method body is a nested class declaration.
  bool at_nested_class() const {
    if (peek().is_keyword("Class") && peek(1).kind == TokenKind::Identifier) return true;
    return is_type_start(peek()) && peek(1).kind == TokenKind::Identifier && peek(2).is_punct("{");
  }

  void reject_nested_class() {
    Span span = peek().span;
    std::string outer = class_stack_.empty() ? "" : class_stack_.back();
    next();
    std::string name = peek().lexeme;
    next();
    // consume the nested body so recovery resumes after it
    int depth = 0;
    while (!at_end()) {
      const Token& t = next();
      if (t.is_punct("{")) ++depth;
      if (t.is_punct("}") && --depth == 0) break;
    }
    accept_punct(";");
    report(span, "class '" + name + "' is declared inside '" + outer + "'; classes cannot be nested", "class.nested",
           {"field", "method", "constructor"});
  }

  void member(ClassDecl& decl) {
    const Token& t = peek();
    Span span = t.span;
    if (t.is_punct(";")) {
      next();
      return;
    }
    if (t.is_keyword("Invariant") || t.is_keyword("Condition")) {
      BlockStmt b = block_stmt();
      decl.members.emplace_back(ClassBlock{std::move(b), span});
      return;
    }
    if (t.is_keyword("Init") || t.is_keyword("Continuous") || t.is_keyword("Discrete") || t.is_keyword("Composition")) {
      if (peek(1).is_punct("(")) {
        decl.members.emplace_back(builtin_method());
        return;
      }
    }
    if (at_nested_class()) {
      reject_nested_class();
      return;
    }
    if (t.is_keyword("Constant")) {
      next();
      VarDecl d = var_decl_after_type(type_ref());
      d.constant = true;
      expect_punct(";");
      decl.members.emplace_back(FieldDecl{std::move(d), span});
      return;
    }
    if (t.kind == TokenKind::Identifier && peek(1).is_punct("(")) {
      // constructor or untyped user method
      Method m;
      m.span = span;
      m.name = next().lexeme;
      m.kind = (m.name == decl.name) ? MethodKind::Constructor : MethodKind::User;
      m.params = params();
      m.body = block();
      accept_punct(";");
      decl.members.emplace_back(std::move(m));
      return;
    }
    if (is_type_start(t)) {
      TypeRef type = type_ref();
      if (peek().kind == TokenKind::Identifier && peek(1).is_punct("(")) {
        Method m;
        m.span = span;
        m.kind = MethodKind::User;
        m.return_type = type;
        m.name = next().lexeme;
        m.params = params();
        m.body = block();
        accept_punct(";");
        decl.members.emplace_back(std::move(m));
        return;
      }
      VarDecl d = var_decl_after_type(std::move(type));
      expect_punct(";");
      decl.members.emplace_back(FieldDecl{std::move(d), span});
      return;
    }
    if (t.is_keyword("Requires") || t.is_keyword("Constraint"))
      fail("'" + t.lexeme + "' is only meaningful inside built-in interfaces", {"field", "method"});
    fail("expected a class member but found " + describe(t),
         {"field", "constructor", "Init", "Continuous", "Discrete", "Composition", "Invariant"});
  }

  Method builtin_method() {
    Method m;
    m.span = peek().span;
    const std::string kw = next().lexeme;
    m.name = kw;
    if (kw == "Init") m.kind = MethodKind::Init;
    if (kw == "Continuous") m.kind = MethodKind::Continuous;
    if (kw == "Discrete") m.kind = MethodKind::Discrete;
    if (kw == "Composition") m.kind = MethodKind::Composition;
    m.params = params();
    if (m.kind == MethodKind::Composition) {
      m.body = composition_block();
    } else {
      m.body = block();
    }
    accept_punct(";");
    return m;
  }

  std::vector<Param> params() {
    std::vector<Param> out;
    expect_punct("(");
    if (accept_punct(")")) return out;
    do {
      Param p;
      p.span = peek().span;
      p.type = type_ref();
      p.name = expect_identifier();
      out.push_back(std::move(p));
    } while (accept_punct(","));
    expect_punct(")");
    return out;
  }

  VarDecl var_decl_after_type(TypeRef type) {
    VarDecl d;
    d.type = std::move(type);
    do {
      VarDeclarator v;
      v.span = peek().span;
      v.name = expect_identifier();
      if (peek().is_punct("[") && peek(1).is_punct("]")) {
        pos_ += 2;
        v.array = true;
      }
      if (accept_op("=")) v.init = init_expr();
      d.vars.push_back(std::move(v));
    } while (accept_punct(","));
    return d;
  }

  // -- statements --

  std::vector<StmtPtr> block() {
    expect_punct("{");
    std::vector<StmtPtr> body;
    while (!peek().is_punct("}") && !at_end()) {
      try {
        statement(body);
      } catch (const ParseError& e) {
        diags_.push_back(e.diag);
        synchronize();
      }
    }
    expect_punct("}");
    return body;
  }

  std::vector<StmtPtr> composition_block() {
    expect_punct("{");
    std::vector<StmtPtr> body;
    while (!peek().is_punct("}") && !at_end()) {
      try {
        if (peek().is_punct(";")) {
          next();
          continue;
        }
        if (peek().kind == TokenKind::Identifier && peek(1).is_punct("(")) {
          body.push_back(composition_entry());
        } else {
          statement(body);
        }
      } catch (const ParseError& e) {
        diags_.push_back(e.diag);
        synchronize();
      }
    }
    expect_punct("}");
    return body;
  }

  StmtPtr composition_entry() {
    Span span = peek().span;
    CompositionEntry entry;
    entry.name = next().lexeme;
    expect_punct("(");
    if (!peek().is_punct(")")) {
      while (true) {
        if (peek().is_punct(",") || peek().is_punct(")")) {
          entry.slots.push_back(nullptr);
        } else {
          entry.slots.push_back(expr());
        }
        if (!accept_punct(",")) break;
      }
    }
    expect_punct(")");
    if (entry.slots.size() != 3) {
      report(span,
             "composition '" + entry.name + "' has " + std::to_string(entry.slots.size()) +
                 " slots; expected (source, action, target)",
             "composition.arity", {"(source, action, target)"});
    }
    entry.body = block();
    accept_punct(";");
    return make_stmt(span, std::move(entry));
  }

  bool at_declaration() const {
    const Token& t = peek();
    if (t.is_keyword("Constant")) return true;
    if (is_scalar_keyword(t) || is_interface_keyword(t)) return true;
    if (t.kind == TokenKind::Identifier) {
      if (peek(1).kind == TokenKind::Identifier) return true;
      if (peek(1).is_punct("[") && peek(2).is_punct("]") && peek(3).kind == TokenKind::Identifier) return true;
    }
    return false;
  }

  BlockStmt block_stmt() {
    BlockStmt b;
    b.kind = next().lexeme == "Invariant" ? BlockKind::Invariant : BlockKind::Condition;
    expect_punct("{");
    while (!peek().is_punct("}") && !at_end()) {
      if (accept_punct(";")) continue;
      b.items.push_back(expr());
      if (!peek().is_punct("}")) expect_punct(";");
    }
    expect_punct("}");
    accept_punct(";");
    return b;
  }

  void statement(std::vector<StmtPtr>& body) {
    const Token& t = peek();
    Span span = t.span;
    if (accept_punct(";")) return;
    if (t.is_keyword("Invariant") || t.is_keyword("Condition")) {
      body.push_back(make_stmt(span, block_stmt()));
      return;
    }
    if (t.is_keyword("Skip") && peek(1).is_punct(";")) {
      pos_ += 2;
      body.push_back(make_stmt(span, SkipStmt{}));
      return;
    }
    if (accept_keyword("Return")) {
      ReturnStmt r;
      if (!peek().is_punct(";")) r.value = expr();
      expect_punct(";");
      body.push_back(make_stmt(span, std::move(r)));
      return;
    }
    if (at_nested_class()) {
      reject_nested_class();
      return;
    }
    if (at_declaration()) {
      bool constant = accept_keyword("Constant");
      VarDecl d = var_decl_after_type(type_ref());
      d.constant = constant;
      expect_punct(";");
      body.push_back(make_stmt(span, std::move(d)));
      return;
    }

    ExprPtr first = expr();
    if (accept_op("=")) {
      body.push_back(make_stmt(span, Assign{first, init_expr()}));
      while (accept_punct(",")) {
        Span s2 = peek().span;
        ExprPtr lhs = expr();
        expect_op("=");
        body.push_back(make_stmt(s2, Assign{lhs, init_expr()}));
      }
      expect_punct(";");
      return;
    }
    if (peek().is_op("||")) {
      ParallelStmt p;
      p.branches.push_back(first);
      while (accept_op("||")) p.branches.push_back(expr());
      expect_punct(";");
      body.push_back(make_stmt(span, std::move(p)));
      return;
    }
    expect_punct(";");
    if (const auto* c = first->as<Call>(); c && c->target && c->name == "start") {
      if (!c->args.empty()) fail_at(span, "start() takes no arguments", "parse.syntax", {"start()"});
      body.push_back(make_stmt(span, StartStmt{{c->target}}));
      return;
    }
    body.push_back(make_stmt(span, ExprStmt{first}));
  }

  // -- expressions --

  ExprPtr init_expr() {
    Span span = peek().span;
    if (peek().is_punct("{")) {
      next();
      ArrayLit a;
      if (!peek().is_punct("}")) {
        do {
          a.elems.push_back(expr());
        } while (accept_punct(","));
      }
      expect_punct("}");
      return make_expr(span, std::move(a));
    }
    return expr();
  }

  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    ExprPtr lhs = xor_expr();
    while (peek().is_keyword("or")) {
      Span s = next().span;
      lhs = make_expr(s, Binary{BinaryOp::Or, lhs, xor_expr()});
    }
    return lhs;
  }
  ExprPtr xor_expr() {
    ExprPtr lhs = and_expr();
    while (peek().is_keyword("xor")) {
      Span s = next().span;
      lhs = make_expr(s, Binary{BinaryOp::Xor, lhs, and_expr()});
    }
    return lhs;
  }
  ExprPtr and_expr() {
    ExprPtr lhs = not_expr();
    while (peek().is_keyword("and")) {
      Span s = next().span;
      lhs = make_expr(s, Binary{BinaryOp::And, lhs, not_expr()});
    }
    return lhs;
  }
  ExprPtr not_expr() {
    if (peek().is_op("!")) {
      Span s = next().span;
      return make_expr(s, Unary{UnaryOp::Not, not_expr()});
    }
    return in_expr();
  }
  ExprPtr in_expr() {
    ExprPtr value = rel_expr();
    if (peek().is_keyword("in")) {
      Span s = next().span;
      return make_expr(s, In{value, interval()});
    }
    return value;
  }

  IntervalExpr interval() {
    IntervalExpr iv;
    Span span = peek().span;
    if (accept_punct("(")) {
      iv.lo_open = true;
    } else if (!accept_punct("[")) {
      fail("expected an interval but found " + describe(peek()), {"(", "["});
    }
    iv.lo = expr();
    expect_punct(",");
    iv.hi = expr();
    if (accept_punct(")")) {
      iv.hi_open = true;
    } else if (!accept_punct("]")) {
      fail("expected ')' or ']' to close the interval but found " + describe(peek()), {")", "]"});
    }
    auto lo = literal_number(iv.lo), hi = literal_number(iv.hi);
    if (lo && hi) {
      Interval folded{*lo, *hi, iv.lo_open, iv.hi_open};
      if (auto why = folded.validate()) report(span, "invalid interval: " + *why, "interval.invalid", {"[a,b]", "(-Inf,b]", "[a,Inf)"});
    } else if ((iv.lo_open && lo && !lo->is_neg_inf()) || (iv.hi_open && hi && !hi->is_inf())) {
      report(span, "invalid interval: finite open bound", "interval.invalid", {"[a,b]", "(-Inf,b]", "[a,Inf)"});
    }
    return iv;
  }

  std::optional<BinaryOp> relop() const {
    const Token& t = peek();
    if (t.kind != TokenKind::Operator) return std::nullopt;
    if (t.lexeme == "==") return BinaryOp::Eq;
    if (t.lexeme == "!=") return BinaryOp::Ne;
    if (t.lexeme == "<") return BinaryOp::Lt;
    if (t.lexeme == "<=") return BinaryOp::Le;
    if (t.lexeme == ">") return BinaryOp::Gt;
    if (t.lexeme == ">=") return BinaryOp::Ge;
    return std::nullopt;
  }

  ExprPtr rel_expr() {
    ExprPtr lhs = add_expr();
    if (auto op = relop()) {
      Span s = next().span;
      lhs = make_expr(s, Binary{*op, lhs, add_expr()});
      if (relop()) fail("relational operators do not chain; add parentheses", {";"});
    }
    return lhs;
  }
  ExprPtr add_expr() {
    ExprPtr lhs = mul_expr();
    while (peek().is_op("+") || peek().is_op("-")) {
      const Token& t = next();
      lhs = make_expr(t.span, Binary{t.lexeme == "+" ? BinaryOp::Add : BinaryOp::Sub, lhs, mul_expr()});
    }
    return lhs;
  }
  ExprPtr mul_expr() {
    ExprPtr lhs = unary();
    while (peek().is_op("*") || peek().is_op("/")) {
      const Token& t = next();
      lhs = make_expr(t.span, Binary{t.lexeme == "*" ? BinaryOp::Mul : BinaryOp::Div, lhs, unary()});
    }
    return lhs;
  }
  ExprPtr unary() {
    if (peek().is_op("-") || peek().is_op("+")) {
      const Token& t = next();
      bool minus = t.lexeme == "-";
      ExprPtr operand = unary();
      if (minus) {
        // fold -Inf and negative numeric literals
        if (const auto* l = operand->as<Literal>()) {
          const Value& v = l->value;
          if (v.is_inf()) return make_expr(t.span, Literal{Value::neg_inf()});
          if (v.is_real()) return make_expr(t.span, Literal{Value::real(-v.as_real())});
          if (v.is_integer() && v.as_integer() != std::numeric_limits<std::int64_t>::min()) return make_expr(t.span, Literal{Value::integer(-v.as_integer())});
        }
      }
      return make_expr(t.span, Unary{minus ? UnaryOp::Minus : UnaryOp::Plus, operand});
    }
    return postfix();
  }

  std::vector<ExprPtr> call_args() {
    std::vector<ExprPtr> args;
    expect_punct("(");
    if (accept_punct(")")) return args;
    do {
      args.push_back(expr());
    } while (accept_punct(","));
    expect_punct(")");
    return args;
  }

  ExprPtr postfix() {
    ExprPtr e = primary();
    while (true) {
      if (peek().is_punct(".")) {
        Span s = next().span;
        const Token& name = peek();
        if (name.kind != TokenKind::Identifier && !name.is_keyword("start"))
          fail("expected member name after '.' but found " + describe(name), {"identifier", "start"});
        std::string member = next().lexeme;
        if (peek().is_punct("(")) {
          e = make_expr(s, Call{e, member, call_args()});
        } else {
          if (member == "start") fail("expected '(' after start", {"("});
          e = make_expr(s, Member{e, member});
        }
        continue;
      }
      if (peek().is_punct("[") && !peek(1).is_punct("]")) {
        Span s = next().span;
        ExprPtr idx = expr();
        expect_punct("]");
        e = make_expr(s, Index{e, idx});
        continue;
      }
      return e;
    }
  }

  int parse_order() {
    const Token& t = peek();
    if (t.kind != TokenKind::IntegerLiteral) fail("derivative order must be a natural number", {"natural number"});
    next();
    long v = std::strtol(t.lexeme.c_str(), nullptr, 10);
    if (v < 1) fail_at(t.span, "derivative order must be at least 1", "parse.syntax", {"natural number >= 1"});
    return static_cast<int>(v);
  }

  ExprPtr primary() {
    const Token& t = peek();
    Span span = t.span;
    switch (t.kind) {
      case TokenKind::IntegerLiteral: {
        next();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.lexeme.data(), t.lexeme.data() + t.lexeme.size(), v);
        if (ec != std::errc()) fail_at(span, "integer literal out of range", "parse.syntax", {"integer"});
        return make_expr(span, Literal{Value::integer(v)});
      }
      case TokenKind::RealLiteral: {
        next();
        return make_expr(span, Literal{Value::real(std::strtod(t.lexeme.c_str(), nullptr))});
      }
      case TokenKind::Identifier: {
        if (t.lexeme == "dot" && peek(1).is_punct("(")) return dot_expr();
        std::string name = next().lexeme;
        if (peek().is_punct("(")) return make_expr(span, Call{nullptr, name, call_args()});
        return make_expr(span, Name{name});
      }
      case TokenKind::Keyword: {
        if (accept_keyword("True")) return make_expr(span, Literal{Value::boolean(true)});
        if (accept_keyword("False")) return make_expr(span, Literal{Value::boolean(false)});
        if (accept_keyword("null")) return make_expr(span, Literal{Value::null()});
        if (accept_keyword("Inf")) return make_expr(span, Literal{Value::inf()});
        if (accept_keyword("this")) return make_expr(span, This{});
        if (accept_keyword("Skip")) return make_expr(span, SkipExpr{});
        if (t.is_keyword("new")) return new_expr();
        break;
      }
      case TokenKind::Punct: {
        if (accept_punct("(")) {
          ExprPtr inner = expr();
          expect_punct(")");
          return inner;
        }
        break;
      }
      default: break;
    }
    fail("expected an expression but found " + describe(t), {"number", "identifier", "(", "new", "True", "False"});
  }

  ExprPtr dot_expr() {
    Span span = next().span;
    expect_punct("(");
    Dot d;
    d.var = postfix();
    expect_punct(",");
    if (peek().kind == TokenKind::IntegerLiteral && peek(1).is_punct(")")) {
      d.order = parse_order();
    } else {
      d.wrt = postfix();
      expect_punct(",");
      d.order = parse_order();
    }
    expect_punct(")");
    return make_expr(span, std::move(d));
  }

  ExprPtr new_expr() {
    Span span = next().span;
    New n;
    const Token& t = peek();
    if (t.kind != TokenKind::Identifier && !is_interface_keyword(t))
      fail("expected a class or interface name after 'new' but found " + describe(t), {"class name"});
    n.type_name = next().lexeme;
    n.args = call_args();
    if (peek().is_punct("{")) {
      auto anon = std::make_shared<ClassDecl>();
      anon->span = peek().span;
      anon->anonymous = true;
      anon->name = "anonymous#" + std::to_string(++anon_counter_);
      anon->parent = n.type_name;
      anon->form = builtin_interface_from(n.type_name) ? ClassForm::InterfaceImpl : ClassForm::Inheritance;
      next();
      class_stack_.push_back(anon->name);
      class_body(*anon);
      class_stack_.pop_back();
      expect_punct("}");
      n.anonymous = anon;
    }
    return make_expr(span, std::move(n));
  }
};

}  // namespace

ParseResult parse_compilation_unit(const std::vector<Token>& tokens) { return Parser(tokens).unit(); }

ParseResult parse_source(std::string_view source, std::uint32_t file) {
  auto lexed = tokenize(source, file);
  ParseResult r = parse_compilation_unit(lexed.tokens);
  lexed.diagnostics.insert(lexed.diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
  r.diagnostics = std::move(lexed.diagnostics);
  return r;
}

ParseResult parse_files(const SourceManager& sources) {
  std::vector<Token> all;
  std::vector<Diagnostic> lex_diags;
  for (std::uint32_t f = 0; f < sources.size(); ++f) {
    auto lexed = tokenize(sources.text(f), f);
    lex_diags.insert(lex_diags.end(), lexed.diagnostics.begin(), lexed.diagnostics.end());
    lexed.tokens.pop_back();  // End marker of this file
    all.insert(all.end(), lexed.tokens.begin(), lexed.tokens.end());
  }
  Span end{sources.size() ? static_cast<std::uint32_t>(sources.size() - 1) : 0, 0, 0};
  all.push_back(Token{TokenKind::End, "", end});
  ParseResult r = parse_compilation_unit(all);
  lex_diags.insert(lex_diags.end(), r.diagnostics.begin(), r.diagnostics.end());
  r.diagnostics = std::move(lex_diags);
  return r;
}

IntervalParse parse_interval(const std::vector<Token>& tokens) { return Parser(tokens).interval_only(); }

ExprParse parse_expression(std::string_view source, std::uint32_t file) {
  auto lexed = tokenize(source, file);
  ExprParse r = Parser(lexed.tokens).expression_only();
  lexed.diagnostics.insert(lexed.diagnostics.end(), r.diagnostics.begin(), r.diagnostics.end());
  r.diagnostics = std::move(lexed.diagnostics);
  return r;
}

}  // namespace apricot::parse
