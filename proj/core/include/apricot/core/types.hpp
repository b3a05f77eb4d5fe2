#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace apricot {

enum class Scalar { Integer, Real, Boolean };

/// The five built-in interfaces plus the two Assignment refinements.
enum class BuiltinInterface {
  System,
  Plant,
  Controller,
  Dynamic,
  Assignment,
  ParallelAssignment,
  SequentialAssignment,
};

std::optional<BuiltinInterface> builtin_interface_from(std::string_view name);
std::string_view to_string(BuiltinInterface i);

/// Static types. Lowercase scalars (`real`) are Primitive and copied at call time;
/// capitalised scalars (`Real`) are Mathematic and passed by name.
class SemType {
 public:
  enum class Kind { Primitive, Mathematic, Class, Interface, Array, Null, Unknown };

  static SemType primitive(Scalar s) { return SemType(Kind::Primitive, s); }
  static SemType mathematic(Scalar s) { return SemType(Kind::Mathematic, s); }
  static SemType class_type(std::string name);
  static SemType interface_type(std::string name);
  static SemType array_of(SemType elem);
  static SemType null_type() { return SemType(Kind::Null, Scalar::Real); }
  static SemType unknown() { return SemType(Kind::Unknown, Scalar::Real); }

  Kind kind() const { return kind_; }
  Scalar scalar() const { return scalar_; }
  const std::string& name() const { return name_; }
  const SemType& element() const { return *elem_; }

  bool is_scalar() const { return kind_ == Kind::Primitive || kind_ == Kind::Mathematic; }
  bool is_numeric() const { return is_scalar() && scalar_ != Scalar::Boolean; }
  bool is_boolean() const { return is_scalar() && scalar_ == Scalar::Boolean; }
  bool is_reference() const { return kind_ == Kind::Class || kind_ == Kind::Interface || kind_ == Kind::Array; }
  bool is_primitive() const { return kind_ == Kind::Primitive; }
  bool is_unknown() const { return kind_ == Kind::Unknown; }
  std::optional<BuiltinInterface> builtin() const;

  std::string to_string() const;

  friend bool operator==(const SemType& a, const SemType& b);

 private:
  SemType(Kind k, Scalar s) : kind_(k), scalar_(s) {}
  Kind kind_;
  Scalar scalar_;
  std::string name_;
  std::shared_ptr<const SemType> elem_;
};

/// Answers the nominal questions the subtype relation needs: the declared
/// superclass or implemented interface of a class, if any.
using ParentLookup = std::function<std::optional<std::string>(const std::string& class_name)>;

/// Subtype relation. Scalars are related when their scalar kinds agree (Integer
/// widens to Real); a class is a subtype of its ancestors and of the interface it
/// implements; Sequential/ParallelAssignment are subtypes of Assignment.
bool is_subtype(const SemType& sub, const SemType& super, const ParentLookup& parent_of);

}  // namespace apricot
