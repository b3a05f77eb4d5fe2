#include "apricot/core/types.hpp"

#include <array>
#include <utility>

namespace apricot {

namespace {
constexpr std::array<std::pair<std::string_view, BuiltinInterface>, 7> kInterfaces{{
    {"System", BuiltinInterface::System},
    {"Plant", BuiltinInterface::Plant},
    {"Controller", BuiltinInterface::Controller},
    {"Dynamic", BuiltinInterface::Dynamic},
    {"Assignment", BuiltinInterface::Assignment},
    {"ParallelAssignment", BuiltinInterface::ParallelAssignment},
    {"SequentialAssignment", BuiltinInterface::SequentialAssignment},
}};

std::string_view scalar_name(Scalar s, bool primitive) {
  switch (s) {
    case Scalar::Integer: return primitive ? "integer" : "Integer";
    case Scalar::Real: return primitive ? "real" : "Real";
    case Scalar::Boolean: return primitive ? "boolean" : "Boolean";
  }
  return "?";
}
}  // namespace

std::optional<BuiltinInterface> builtin_interface_from(std::string_view name) {
  for (const auto& [n, i] : kInterfaces)
    if (n == name) return i;
  return std::nullopt;
}

std::string_view to_string(BuiltinInterface i) {
  for (const auto& [n, v] : kInterfaces)
    if (v == i) return n;
  return "?";
}

SemType SemType::class_type(std::string name) {
  SemType t(Kind::Class, Scalar::Real);
  t.name_ = std::move(name);
  return t;
}

SemType SemType::interface_type(std::string name) {
  SemType t(Kind::Interface, Scalar::Real);
  t.name_ = std::move(name);
  return t;
}

SemType SemType::array_of(SemType elem) {
  SemType t(Kind::Array, elem.scalar_);
  t.elem_ = std::make_shared<const SemType>(std::move(elem));
  return t;
}

std::optional<BuiltinInterface> SemType::builtin() const {
  if (kind_ != Kind::Interface) return std::nullopt;
  return builtin_interface_from(name_);
}

std::string SemType::to_string() const {
  switch (kind_) {
    case Kind::Primitive: return std::string(scalar_name(scalar_, true));
    case Kind::Mathematic: return std::string(scalar_name(scalar_, false));
    case Kind::Class:
    case Kind::Interface: return name_;
    case Kind::Array: return elem_->to_string() + "[]";
    case Kind::Null: return "null";
    case Kind::Unknown: return "<unknown>";
  }
  return "?";
}

bool operator==(const SemType& a, const SemType& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case SemType::Kind::Primitive:
    case SemType::Kind::Mathematic: return a.scalar_ == b.scalar_;
    case SemType::Kind::Class:
    case SemType::Kind::Interface: return a.name_ == b.name_;
    case SemType::Kind::Array: return *a.elem_ == *b.elem_;
    default: return true;
  }
}

bool is_subtype(const SemType& sub, const SemType& super, const ParentLookup& parent_of) {
  using K = SemType::Kind;
  if (sub.is_unknown() || super.is_unknown()) return true;
  if (sub.kind() == K::Null) return true;
  if (sub.is_scalar() && super.is_scalar()) {
    if (sub.scalar() == super.scalar()) return true;
    return sub.scalar() == Scalar::Integer && super.scalar() == Scalar::Real;
  }
  if (sub.kind() == K::Array && super.kind() == K::Array) return is_subtype(sub.element(), super.element(), parent_of);
  if (!sub.is_reference() || !super.is_reference()) return false;
  if (sub == super) return true;

  auto interface_le = [](const std::string& from, const std::string& to) {
    if (from == to) return true;
    return to == "Assignment" && (from == "ParallelAssignment" || from == "SequentialAssignment");
  };

  if (sub.kind() == K::Interface) {
    return super.kind() == K::Interface && interface_le(sub.name(), super.name());
  }
  if (sub.kind() != K::Class) return false;

  // Walk the nominal chain: each step yields a superclass or an interface name.
  std::string current = sub.name();
  for (int depth = 0; depth < 64; ++depth) {
    if (super.kind() == K::Class && current == super.name()) return true;
    auto parent = parent_of ? parent_of(current) : std::nullopt;
    if (!parent) return false;
    if (builtin_interface_from(*parent)) {
      return super.kind() == K::Interface && interface_le(*parent, super.name());
    }
    current = *parent;
  }
  return false;
}

}  // namespace apricot
