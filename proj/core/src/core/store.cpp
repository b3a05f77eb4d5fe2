#include "apricot/core/store.hpp"

#include <algorithm>
#include <stdexcept>

namespace apricot {

Location Store::fresh_location(SemType type) {
  auto index = static_cast<std::uint32_t>(heap_.size());
  heap_.push_back({Cell{Value::null(), std::move(type), false}, index});
  return Location{index};
}

Location Store::resolve(Location loc) const {
  std::uint32_t i = loc.index;
  if (i >= heap_.size()) throw std::out_of_range("Store: unknown location @" + std::to_string(i));
  while (heap_[i].forward != i) i = heap_[i].forward;
  return Location{i};
}

void Store::merge(Location from, Location into) {
  Location a = resolve(from), b = resolve(into);
  if (a == b) return;
  Cell& src = heap_[a.index].cell;
  Cell& dst = heap_[b.index].cell;
  if (dst.value.is_null() && !src.value.is_null()) dst.value = src.value;
  dst.constant = dst.constant || src.constant;
  heap_[a.index].forward = b.index;
}

void Store::push_frame(ObjectId self, bool method_boundary) { frames_.push_back(Frame{{}, self, method_boundary}); }

void Store::pop_frame() {
  if (frames_.empty()) throw std::logic_error("Store: pop of empty frame stack");
  frames_.pop_back();
}

void Store::bind_alias(const std::string& name, Location loc) {
  if (frames_.empty()) throw std::logic_error("Store: bind_alias without a frame");
  resolve(loc);  // validates existence
  frames_.back().names[name] = loc;
}

std::optional<Location> Store::lookup_local(const std::string& name) const {
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    if (auto f = it->names.find(name); f != it->names.end()) return f->second;
    if (it->method_boundary) break;
  }
  return std::nullopt;
}

std::vector<std::string> Store::visible_locals() const {
  std::vector<std::string> out;
  for (auto it = frames_.rbegin(); it != frames_.rend(); ++it) {
    for (const auto& [n, _] : it->names) out.push_back(n);
    if (it->method_boundary) break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ObjectId Store::new_object(std::string class_name, std::optional<ObjectId> outer) {
  objects_.push_back(Object{std::move(class_name), {}, outer});
  return ObjectId{static_cast<std::uint32_t>(objects_.size() - 1)};
}

void Store::add_field(ObjectId id, const std::string& name, Location loc) {
  auto& fields = objects_.at(id.index).fields;
  for (auto& [n, l] : fields) {
    if (n == name) {
      l = loc;
      return;
    }
  }
  fields.emplace_back(name, loc);
}

std::optional<Location> Store::own_field(ObjectId id, const std::string& name) const {
  for (const auto& [n, l] : objects_.at(id.index).fields)
    if (n == name) return l;
  return std::nullopt;
}

std::optional<Location> Store::field(ObjectId id, const std::string& name) const {
  std::optional<ObjectId> cur = id;
  while (cur) {
    if (auto l = own_field(*cur, name)) return l;
    cur = objects_.at(cur->index).outer;
  }
  return std::nullopt;
}

std::optional<Location> Store::derivative_slot(Location var, int order) const {
  auto it = derivatives_.find({resolve(var).index, order});
  if (it == derivatives_.end()) return std::nullopt;
  return it->second;
}

Location Store::ensure_derivative_slot(Location var, int order) {
  Location root = resolve(var);
  auto key = std::make_pair(root.index, order);
  if (auto it = derivatives_.find(key); it != derivatives_.end()) return it->second;
  // v_n takes the type of v and starts at null
  Location slot = fresh_location(cell(root).type);
  derivatives_.emplace(key, slot);
  return slot;
}

}  // namespace apricot
