#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "apricot/core/types.hpp"
#include "apricot/core/value.hpp"

namespace apricot {

struct Cell {
  Value value;
  SemType type = SemType::unknown();
  bool constant = false;
};

struct Object {
  std::string class_name;
  std::vector<std::pair<std::string, Location>> fields;  // declaration order
  std::optional<ObjectId> outer;                         // enclosing instance of an anonymous class
};

struct Frame {
  std::map<std::string, Location> names;
  ObjectId self;
  bool method_boundary = true;  // false for nested blocks, which see the enclosing frame
};

/// Two-level environment. Names map to locations per frame, locations map to
/// (value, type) cells, objects map field names to locations. Two names bound to
/// one location observe each other's writes. Value semantics: copying a Store
/// forks an independent branch.
class Store {
 public:
  /// New location holding Null with the given type.
  Location fresh_location(SemType type);
  std::size_t location_count() const { return heap_.size(); }

  /// Canonical location after alias merges.
  Location resolve(Location loc) const;
  const Cell& cell(Location loc) const { return heap_.at(resolve(loc).index).cell; }
  const Value& read(Location loc) const { return cell(loc).value; }
  void write(Location loc, Value v) { heap_.at(resolve(loc).index).cell.value = std::move(v); }
  void set_type(Location loc, SemType t) { heap_.at(resolve(loc).index).cell.type = std::move(t); }
  void set_constant(Location loc, bool c) { heap_.at(resolve(loc).index).cell.constant = c; }
  bool same_location(Location a, Location b) const { return resolve(a) == resolve(b); }

  /// Make every name that reached `from` observe `into` from now on. Constancy is
  /// inherited from either side; the target keeps its value unless it is Null.
  void merge(Location from, Location into);

  // -- frames --
  void push_frame(ObjectId self, bool method_boundary = true);
  void pop_frame();
  std::size_t frame_depth() const { return frames_.size(); }
  const Frame& top_frame() const { return frames_.back(); }
  /// Bind (or rebind) `name` in the innermost frame.
  void bind_alias(const std::string& name, Location loc);
  /// Innermost binding of `name`, searching outward up to the nearest method boundary.
  std::optional<Location> lookup_local(const std::string& name) const;
  /// Every name visible through `lookup_local`.
  std::vector<std::string> visible_locals() const;

  // -- objects --
  ObjectId new_object(std::string class_name, std::optional<ObjectId> outer = std::nullopt);
  const Object& object(ObjectId id) const { return objects_.at(id.index); }
  std::size_t object_count() const { return objects_.size(); }
  void add_field(ObjectId id, const std::string& name, Location loc);
  /// Field of this object only.
  std::optional<Location> own_field(ObjectId id, const std::string& name) const;
  /// Field of this object, then of the enclosing instances of anonymous classes.
  std::optional<Location> field(ObjectId id, const std::string& name) const;

  // -- derivative variables created for dot(v, n) --
  std::optional<Location> derivative_slot(Location var, int order) const;
  Location ensure_derivative_slot(Location var, int order);

 private:
  struct Slot {
    Cell cell;
    std::uint32_t forward;
  };
  std::vector<Slot> heap_;
  std::vector<Object> objects_;
  std::vector<Frame> frames_;
  std::map<std::pair<std::uint32_t, int>, Location> derivatives_;
};

}  // namespace apricot
