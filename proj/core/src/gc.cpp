#include "dragprof/gc.hpp"

#include <algorithm>
#include <deque>

#include <fmt/format.h>

#include "dragprof/errors.hpp"

namespace dragprof {

const char* trigger_name(Trigger t) {
  switch (t) {
    case Trigger::Interval: return "interval";
    case Trigger::Exhaustion: return "exhaustion";
    case Trigger::Manual: return "manual";
  }
  return "?";
}

class CopyingCollector::Evacuator final : public SlotVisitor {
 public:
  explicit Evacuator(CopyingCollector& gc) : gc_(gc) {}

 protected:
  void on_ref(Value& ref) override { ref.set_address(gc_.evacuate(ref.id())); }

 private:
  CopyingCollector& gc_;
};

Address CopyingCollector::evacuate(ObjId id) {
  auto& loc = heap_.table_.at(id);
  if (!loc.live) throw DanglingRef(fmt::format("collector reached dead object {}", id));
  if (loc.copied_cycle == heap_.gc_cycle_) return loc.address;

  Semispace& from = heap_.active();
  Semispace& to = heap_.standby();
  if (to.free() < loc.size) {
    throw ToSpaceOverflow(fmt::format("to-space overflow copying object {} ({} slots, {} free)",
                                      id, loc.size, to.free()));
  }
  auto dest = static_cast<Address>(to.used);
  for (std::uint32_t i = 0; i < loc.size; ++i) {
    to.slots[dest + i] = std::move(from.slots[loc.address + i]);
  }
  to.used += loc.size;
  to.objects.push_back(id);
  loc.address = dest;
  loc.copied_cycle = heap_.gc_cycle_;
  slots_copied_ += loc.size;
  profiler_.mark_survivor(id, dest);
  return dest;
}

CollectionStats CopyingCollector::run(const RootSource& roots, Tick clock, Trigger trigger,
                                      std::vector<LifetimeRecord>* flushed) {
  Semispace& to = heap_.standby();
  if (to.used != 0 || !to.objects.empty()) {
    throw ToSpaceOverflow("standby semispace is not empty at collection start");
  }
  const std::size_t before = heap_.active().objects.size();
  ++heap_.gc_cycle_;
  slots_copied_ = 0;
  profiler_.reset_flags();

  Evacuator visitor(*this);
  if (roots) roots(visitor);
  // Cheney scan: to.objects doubles as the queue. Traceable nodes found in
  // slots are expanded between scan steps.
  std::size_t scan = 0;
  for (;;) {
    visitor.drain();
    if (scan == to.objects.size()) break;
    const auto& loc = heap_.table_[to.objects[scan++]];
    for (std::uint32_t i = 0; i < loc.size; ++i) visitor.visit(to.slots[loc.address + i]);
  }

  Semispace& from = heap_.active();
  std::vector<ObjId> dead;
  for (ObjId id : from.objects) {
    auto& loc = heap_.table_[id];
    if (loc.copied_cycle != heap_.gc_cycle_) {
      loc.live = false;
      dead.push_back(id);
    }
  }
  for (std::size_t i = 0; i < from.used; ++i) from.slots[i] = Value{};
  from.used = 0;
  from.objects.clear();
  heap_.active_index_ = 1 - heap_.active_index_;

  std::vector<LifetimeRecord> records = profiler_.flush_unflagged(clock);
  if (records.size() != dead.size()) {
    throw Error(fmt::format("collector freed {} objects but profiler flushed {}", dead.size(),
                            records.size()));
  }

  CollectionStats stats;
  stats.trigger = trigger;
  stats.tick = clock;
  stats.survivors = to.objects.size();
  stats.collected = dead.size();
  stats.slots_copied = slots_copied_;
  if (stats.survivors + stats.collected != before) {
    throw Error("collection lost track of objects");
  }
  if (flushed) *flushed = std::move(records);
  return stats;
}

CollectionStats collect(Heap& heap, Profiler& profiler, const RootSource& roots, Tick clock,
                        Trigger trigger, std::vector<LifetimeRecord>* flushed) {
  return CopyingCollector(heap, profiler).run(roots, clock, trigger, flushed);
}

namespace {

// Collects root Refs in visit order without touching them.
class RefCollector final : public SlotVisitor {
 public:
  explicit RefCollector(std::vector<Value>& out) : out_(out) {}

 protected:
  void on_ref(Value& ref) override { out_.push_back(ref); }

 private:
  std::vector<Value>& out_;
};

}  // namespace

std::vector<ObjId> reachability_oracle(const Heap& heap, const RootSource& roots) {
  std::vector<Value> frontier;
  RefCollector visitor(frontier);
  if (roots) roots(visitor);

  std::vector<bool> seen(heap.next_id(), false);
  std::vector<ObjId> out;
  for (;;) {
    visitor.drain();
    if (frontier.empty()) break;
    Value v = frontier.back();
    frontier.pop_back();
    if (seen[v.id()]) continue;
    seen[v.id()] = true;
    out.push_back(v.id());
    const std::size_t n = heap.size_of(v);
    for (std::size_t i = 0; i < n; ++i) {
      Value slot = heap.read_slot(v, i);
      visitor.visit(slot);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

class CanonicalWriter final : public SlotVisitor {
 public:
  CanonicalWriter(const Heap& heap, std::string& out) : heap_(heap), out_(out) {}

  void write_slot_value(const Value& v) {
    switch (v.tag()) {
      case Value::Tag::Nil: out_ += " ()"; break;
      case Value::Tag::Boolean: out_ += v.as_boolean() ? " #t" : " #f"; break;
      case Value::Tag::Number: fmt::format_to(std::back_inserter(out_), " {}", v.as_number()); break;
      case Value::Tag::Symbol: fmt::format_to(std::back_inserter(out_), " 's{}", v.as_symbol().index); break;
      case Value::Tag::Unspecified: out_ += " #!unspecified"; break;
      case Value::Tag::Procedure: out_ += " #proc"; break;
      case Value::Tag::Ref: fmt::format_to(std::back_inserter(out_), " @{}", number(v)); break;
    }
  }

  std::size_t number(const Value& ref) {
    auto [it, fresh] = index_.try_emplace(ref.id(), order_.size());
    if (fresh) order_.push_back(ref);
    return it->second;
  }

  void run(const RootSource& roots) {
    out_ += "roots:";
    if (roots) roots(*this);
    std::size_t next = 0;
    for (;;) {
      drain();
      if (next == order_.size()) break;
      const Value v = order_[next];
      const std::size_t n = heap_.size_of(v);
      fmt::format_to(std::back_inserter(out_), "\n{}: {}#{}[{}]", next,
                     heap_.kind_of(v) == ObjKind::Pair ? 'P' : 'V', v.id(), n);
      ++next;
      for (std::size_t i = 0; i < n; ++i) {
        Value slot = heap_.read_slot(v, i);
        write_slot_value(slot);
        if (slot.is_procedure()) visit_traceable(slot.traceable());
      }
    }
    out_ += '\n';
  }

 protected:
  void on_ref(Value& ref) override { fmt::format_to(std::back_inserter(out_), " @{}", number(ref)); }

 private:
  const Heap& heap_;
  std::string& out_;
  std::unordered_map<ObjId, std::size_t> index_;
  std::vector<Value> order_;
};

}  // namespace

std::string canonical_form(const Heap& heap, const RootSource& roots) {
  std::string out;
  CanonicalWriter(heap, out).run(roots);
  return out;
}

}  // namespace dragprof
