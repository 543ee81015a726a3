#include "dragprof/heap.hpp"

#include <atomic>

#include <fmt/format.h>

#include "dragprof/errors.hpp"

namespace dragprof {

namespace {
std::atomic<std::uint64_t> g_epoch{0};
}  // namespace

SlotVisitor::SlotVisitor() : epoch_(++g_epoch) {}

void SlotVisitor::visit(Value& v) {
  if (v.is_ref()) {
    on_ref(v);
  } else if (v.is_procedure()) {
    visit_traceable(v.traceable());
  }
}

void SlotVisitor::visit_traceable(Traceable* node) {
  if (node == nullptr || node->visit_epoch_ == epoch_) return;
  node->visit_epoch_ = epoch_;
  pending_.push_back(node);
}

void SlotVisitor::drain() {
  while (!pending_.empty()) {
    Traceable* node = pending_.back();
    pending_.pop_back();
    node->trace(*this);
  }
}

SymbolId SymbolTable::intern(std::string_view name) {
  std::string key(name);
  if (auto it = index_.find(key); it != index_.end()) return SymbolId{it->second};
  auto index = static_cast<std::uint32_t>(names_.size());
  names_.push_back(key);
  index_.emplace(std::move(key), index);
  return SymbolId{index};
}

Heap::Heap(std::size_t capacity_slots) {
  for (auto& space : spaces_) space.slots.resize(capacity_slots);
}

const Heap::Location& Heap::locate(const Value& ref) const {
  if (!ref.is_ref()) throw Error("heap access through a non-reference value");
  if (ref.id() >= table_.size() || !table_[ref.id()].live) {
    throw DanglingRef(fmt::format("dangling reference to object {}", ref.id()));
  }
  return table_[ref.id()];
}

Value Heap::normalized(const Value& v) const {
  if (!v.is_ref()) return v;
  Value out = v;
  out.set_address(locate(v).address);
  return out;
}

Value Heap::place(ObjKind kind, std::size_t size) {
  Semispace& space = active();
  ObjId id = table_.size();
  auto address = static_cast<Address>(space.used);
  space.used += size;
  space.objects.push_back(id);
  table_.push_back(Location{address, static_cast<std::uint32_t>(size), kind, true, 0});
  return Value::ref(id, address);
}

Value Heap::allocate_pair(const Value& car, const Value& cdr) {
  if (!can_allocate(2)) throw OutOfMemory(2, capacity_slots());
  Value a = normalized(car);
  Value d = normalized(cdr);
  Value ref = place(ObjKind::Pair, 2);
  active().slots[ref.address()] = std::move(a);
  active().slots[ref.address() + 1] = std::move(d);
  return ref;
}

Value Heap::allocate_vector(std::int64_t length, const Value& fill) {
  if (length < 0) throw NegativeLength(fmt::format("negative vector length {}", length));
  auto size = static_cast<std::size_t>(length);
  if (!can_allocate(size)) throw OutOfMemory(size, capacity_slots());
  Value f = normalized(fill);
  Value ref = place(ObjKind::Vector, size);
  for (std::size_t i = 0; i < size; ++i) active().slots[ref.address() + i] = f;
  return ref;
}

Value Heap::read_slot(const Value& ref, std::size_t index) const {
  const Location& loc = locate(ref);
  if (index >= loc.size) {
    throw IndexOutOfBounds(
        fmt::format("index {} out of bounds for object {} of size {}", index, ref.id(), loc.size));
  }
  return active().slots[loc.address + index];
}

void Heap::write_slot(const Value& ref, std::size_t index, const Value& v) {
  const Location& loc = locate(ref);
  if (index >= loc.size) {
    throw IndexOutOfBounds(
        fmt::format("index {} out of bounds for object {} of size {}", index, ref.id(), loc.size));
  }
  active().slots[loc.address + index] = normalized(v);
}

ObjKind Heap::kind_of(const Value& ref) const { return locate(ref).kind; }

std::size_t Heap::size_of(const Value& ref) const { return locate(ref).size; }

bool Heap::is_pair(const Value& v) const {
  return v.is_ref() && kind_of(v) == ObjKind::Pair;
}

bool Heap::is_vector(const Value& v) const {
  return v.is_ref() && kind_of(v) == ObjKind::Vector;
}

bool Heap::is_live(ObjId id) const { return id < table_.size() && table_[id].live; }

Address Heap::address_of(ObjId id) const {
  if (!is_live(id)) throw DanglingRef(fmt::format("dangling reference to object {}", id));
  return table_[id].address;
}

}  // namespace dragprof
