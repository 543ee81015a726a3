#pragma once

// Object model and semispace bump allocator. Only pairs and vectors live
// in the profiled heap; everything else is an immediate or an out-of-heap
// traceable node (closures, environment frames).

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dragprof {

using ObjId = std::uint64_t;
using Address = std::uint32_t;

inline constexpr std::size_t kDefaultHeapSlots = std::size_t{1} << 16;

enum class ObjKind : std::uint8_t { Pair, Vector };

struct SymbolId {
  std::uint32_t index = 0;
  friend bool operator==(SymbolId, SymbolId) = default;
};

class Traceable;
class SlotVisitor;

/// A tagged word: an immediate or a reference to a heap object. A Ref
/// carries its stable ObjId plus a cached address in the active semispace;
/// the id is authoritative.
class Value {
 public:
  enum class Tag : std::uint8_t {
    Nil,
    Boolean,
    Number,
    Symbol,
    Ref,
    Procedure,
    Unspecified,
  };

  Value() = default;

  static Value nil() { return Value{}; }
  static Value unspecified() { return Value(Tag::Unspecified, 0); }
  static Value boolean(bool b) { return Value(Tag::Boolean, b ? 1 : 0); }
  static Value number(std::int64_t n) { return Value(Tag::Number, n); }
  static Value symbol(SymbolId s) { return Value(Tag::Symbol, s.index); }
  static Value ref(ObjId id, Address address) {
    Value v(Tag::Ref, static_cast<std::int64_t>(id));
    v.address_ = address;
    return v;
  }
  static Value procedure(std::shared_ptr<Traceable> proc) {
    Value v(Tag::Procedure, 0);
    v.proc_ = std::move(proc);
    return v;
  }

  Tag tag() const { return tag_; }
  bool is_nil() const { return tag_ == Tag::Nil; }
  bool is_boolean() const { return tag_ == Tag::Boolean; }
  bool is_number() const { return tag_ == Tag::Number; }
  bool is_symbol() const { return tag_ == Tag::Symbol; }
  bool is_ref() const { return tag_ == Tag::Ref; }
  bool is_procedure() const { return tag_ == Tag::Procedure; }
  bool is_unspecified() const { return tag_ == Tag::Unspecified; }

  /// Scheme truthiness: only #f is false.
  bool truthy() const { return !(tag_ == Tag::Boolean && bits_ == 0); }

  std::int64_t as_number() const { return bits_; }
  bool as_boolean() const { return bits_ != 0; }
  SymbolId as_symbol() const { return SymbolId{static_cast<std::uint32_t>(bits_)}; }
  ObjId id() const { return static_cast<ObjId>(bits_); }
  Address address() const { return address_; }
  void set_address(Address a) { address_ = a; }
  Traceable* traceable() const { return proc_.get(); }
  const std::shared_ptr<Traceable>& traceable_ptr() const { return proc_; }

  /// Identity comparison (eq?): Refs by id, procedures by node.
  friend bool operator==(const Value& a, const Value& b) {
    if (a.tag_ != b.tag_) return false;
    if (a.tag_ == Tag::Procedure) return a.proc_ == b.proc_;
    return a.bits_ == b.bits_;
  }

 private:
  Value(Tag t, std::int64_t bits) : tag_(t), bits_(bits) {}

  Tag tag_ = Tag::Nil;
  std::int64_t bits_ = 0;
  Address address_ = 0;
  std::shared_ptr<Traceable> proc_;
};

/// Out-of-heap node that may hold Values (closures, environment frames).
/// Never profiled, but anything it holds is reachable while it is.
class Traceable {
 public:
  virtual ~Traceable() = default;
  virtual void trace(SlotVisitor& visitor) = 0;

 private:
  friend class SlotVisitor;
  std::uint64_t visit_epoch_ = 0;
};

/// Walks Values and traceable nodes. Each traversal uses a fresh epoch so
/// a traceable node is expanded at most once per traversal; expansion is
/// worklist-driven, so deep chains do not recurse.
class SlotVisitor {
 public:
  SlotVisitor();
  virtual ~SlotVisitor() = default;

  /// Called for every Value reached (roots, heap slots, frame bindings).
  void visit(Value& v);
  void visit_traceable(Traceable* node);
  /// Expand queued traceable nodes until none remain.
  void drain();

 protected:
  virtual void on_ref(Value& ref) = 0;

 private:
  std::uint64_t epoch_;
  std::vector<Traceable*> pending_;
};

/// Enumerates the root set. Implementations call visitor.visit() for each
/// root Value and visitor.visit_traceable() for each root node.
using RootSource = std::function<void(SlotVisitor&)>;

class SymbolTable {
 public:
  SymbolId intern(std::string_view name);
  const std::string& name(SymbolId id) const { return names_.at(id.index); }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// One half of the heap. Payload slots are contiguous; `objects` lists the
/// ids resident here in allocation (copy) order.
struct Semispace {
  std::vector<Value> slots;
  std::size_t used = 0;
  std::vector<ObjId> objects;

  std::size_t capacity() const { return slots.size(); }
  std::size_t free() const { return slots.size() - used; }
};

class Heap {
 public:
  explicit Heap(std::size_t capacity_slots = kDefaultHeapSlots);

  Heap(const Heap&) = delete;
  Heap& operator=(const Heap&) = delete;

  std::size_t capacity_slots() const { return active().capacity(); }
  std::size_t used_slots() const { return active().used; }
  std::size_t free_slots() const { return active().free(); }
  std::size_t live_objects() const { return active().objects.size(); }
  bool can_allocate(std::size_t slots) const { return slots <= free_slots(); }

  /// Raw allocation; throws OutOfMemory when the active space is full.
  /// Collection-on-exhaustion is the runtime's job.
  Value allocate_pair(const Value& car, const Value& cdr);
  Value allocate_vector(std::int64_t length, const Value& fill);

  Value read_slot(const Value& ref, std::size_t index) const;
  void write_slot(const Value& ref, std::size_t index, const Value& v);

  ObjKind kind_of(const Value& ref) const;
  std::size_t size_of(const Value& ref) const;
  bool is_pair(const Value& v) const;
  bool is_vector(const Value& v) const;

  bool is_live(ObjId id) const;
  Address address_of(ObjId id) const;
  ObjId next_id() const { return table_.size(); }
  /// Ids currently resident in the active space, in address order.
  const std::vector<ObjId>& resident() const { return active().objects; }

 private:
  friend class CopyingCollector;

  struct Location {
    Address address = 0;
    std::uint32_t size = 0;
    ObjKind kind = ObjKind::Pair;
    bool live = false;
    std::uint64_t copied_cycle = 0;
  };

  Semispace& active() { return spaces_[active_index_]; }
  const Semispace& active() const { return spaces_[active_index_]; }
  Semispace& standby() { return spaces_[1 - active_index_]; }

  const Location& locate(const Value& ref) const;
  Value normalized(const Value& v) const;
  Value place(ObjKind kind, std::size_t size);

  std::vector<Location> table_;
  Semispace spaces_[2];
  int active_index_ = 0;
  std::uint64_t gc_cycle_ = 0;
};

}  // namespace dragprof
