#include "apricot/analyzer/analyzer.hpp"

namespace apricot::analysis {

using namespace apricot::ast;

namespace {

ExprPtr true_literal(Span span) { return make_expr(span, Literal{Value::boolean(true)}); }

/// Conjunction of `items`, True when empty. A single item is kept as is.
ExprPtr conjunction(const std::vector<ExprPtr>& items, Span span) {
  if (items.empty()) return true_literal(span);
  ExprPtr acc = items.front();
  for (std::size_t i = 1; i < items.size(); ++i) acc = make_expr(items[i]->span, Binary{BinaryOp::And, acc, items[i]});
  return acc;
}

class Normalizer {
 public:
  explicit Normalizer(const ClassTable& ct) : ct_(ct) {}

  ClassPtr klass(const ClassDecl& c) {
    auto out = std::make_shared<ClassDecl>();
    out->name = c.name;
    out->form = c.form;
    out->parent = c.parent;
    out->anonymous = c.anonymous;
    out->span = c.span;
    const auto iface = ct_.interface_of(c.name);
    const bool system_with_starts = iface == BuiltinInterface::System && has_starts(c);
    for (const auto& m : c.members) {
      if (const auto* f = std::get_if<FieldDecl>(&m)) {
        out->members.emplace_back(FieldDecl{decl(f->decl), f->span});
      } else if (const auto* me = std::get_if<Method>(&m)) {
        out->members.emplace_back(method(*me, iface, system_with_starts));
      } else if (const auto* b = std::get_if<ClassBlock>(&m)) {
        ClassBlock nb = *b;
        if (nb.block.items.empty()) nb.block.items.push_back(true_literal(b->span));
        out->members.emplace_back(std::move(nb));
      }
    }
    if (iface == BuiltinInterface::Dynamic && ct_.invariants(c.name).empty())
      out->members.emplace_back(ClassBlock{BlockStmt{BlockKind::Invariant, {true_literal(c.span)}}, c.span});
    return out;
  }

 private:
  static bool has_starts(const ClassDecl& c) {
    const Method* init = c.method(MethodKind::Init);
    if (!init) return false;
    for (const auto& s : init->body)
      if (s->is<StartStmt>()) return true;
    return false;
  }

  ExprPtr expr(const ExprPtr& e) {
    if (!e) return e;
    if (const auto* n = e->as<New>(); n && n->anonymous) {
      New copy = *n;
      copy.anonymous = klass(*n->anonymous);
      return make_expr(e->span, std::move(copy));
    }
    return e;
  }

  VarDecl decl(const VarDecl& d) {
    VarDecl out = d;
    for (auto& v : out.vars) v.init = expr(v.init);
    return out;
  }

  StmtPtr stmt(const StmtPtr& s) {
    if (const auto* d = s->as<VarDecl>()) return make_stmt(s->span, decl(*d));
    if (const auto* a = s->as<Assign>()) return make_stmt(s->span, Assign{a->target, expr(a->value)});
    if (const auto* e = s->as<CompositionEntry>()) {
      CompositionEntry out;
      out.name = e->name;
      out.slots = e->slots;
      if (out.slots.size() == 3 && !out.slots[1]) out.slots[1] = make_expr(s->span, SkipExpr{});
      std::vector<ExprPtr> items;
      for (const auto& b : e->body)
        if (const auto* blk = b->as<BlockStmt>(); blk && blk->kind == BlockKind::Condition)
          for (const auto& i : blk->items) items.push_back(i);
      out.body.push_back(make_stmt(s->span, BlockStmt{BlockKind::Condition, {conjunction(items, s->span)}}));
      return make_stmt(s->span, std::move(out));
    }
    return s;
  }

  Method method(const Method& m, std::optional<BuiltinInterface> iface, bool system_with_starts) {
    Method out = m;
    out.body.clear();
    if (m.kind == MethodKind::Discrete)
      out.mode = iface == BuiltinInterface::SequentialAssignment ? AssignMode::Sequential : AssignMode::Parallel;
    std::optional<std::size_t> start_at;
    StartStmt starts;
    Span start_span;
    for (const auto& s : m.body) {
      if (m.kind == MethodKind::Init)
        if (const auto* st = s->as<StartStmt>()) {
          if (!start_at) {
            start_at = out.body.size();
            start_span = s->span;
            out.body.push_back(nullptr);
          }
          for (const auto& t : st->targets) starts.targets.push_back(t);
          continue;
        }
      if (m.kind == MethodKind::Constructor && system_with_starts)
        if (const auto* p = s->as<ParallelStmt>()) {
          bool components_only = true;
          for (const auto& b : p->branches) components_only = components_only && b->is<Name>();
          if (components_only) continue;
        }
      out.body.push_back(stmt(s));
    }
    if (start_at) out.body[*start_at] = make_stmt(start_span, std::move(starts));
    return out;
  }

  const ClassTable& ct_;
};

}  // namespace

CompilationUnit normalize_dbc(const CompilationUnit& unit) {
  ClassTable ct(unit);
  Normalizer n(ct);
  CompilationUnit out;
  for (const auto& c : unit.classes) out.classes.push_back(n.klass(*c));
  return out;
}

}  // namespace apricot::analysis
