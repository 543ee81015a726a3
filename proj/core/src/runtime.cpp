#include "dragprof/runtime.hpp"

#include <fmt/format.h>

#include "dragprof/errors.hpp"

namespace dragprof {

class Runtime::ScratchPin {
 public:
  ScratchPin(Runtime& rt, Value& v) : rt_(rt) { rt_.scratch_.push_back(&v); }
  ~ScratchPin() { rt_.scratch_.pop_back(); }
  ScratchPin(const ScratchPin&) = delete;
  ScratchPin& operator=(const ScratchPin&) = delete;

 private:
  Runtime& rt_;
};

Runtime::Runtime(RuntimeConfig config, RootSource roots)
    : config_(config), roots_(std::move(roots)), heap_(config.heap_slots) {
  if (config_.gc_interval == 0) throw Error("gc interval must be at least 1");
}

void Runtime::trace_roots(SlotVisitor& visitor) {
  if (roots_) roots_(visitor);
  for (Value* v : scratch_) visitor.visit(*v);
}

RootSource Runtime::root_source() {
  return [this](SlotVisitor& v) { trace_roots(v); };
}

void Runtime::safepoint() {
  if (observer_) observer_->on_safepoint(*this);
  if (events_since_gc_ >= config_.gc_interval) collect(Trigger::Interval);
}

void Runtime::ensure_free(std::size_t slots) {
  if (heap_.can_allocate(slots)) return;
  collect(Trigger::Exhaustion);
  if (!heap_.can_allocate(slots)) throw OutOfMemory(slots, heap_.capacity_slots());
}

Value Runtime::alloc_pair(Value car, Value cdr) {
  ScratchPin pin_car(*this, car);
  ScratchPin pin_cdr(*this, cdr);
  safepoint();
  ensure_free(2);
  Value ref = heap_.allocate_pair(car, cdr);
  Tick t = profiler_.record_creation(ref.id(), ObjKind::Pair, 2);
  ++events_since_gc_;
  if (observer_) observer_->on_create(*this, ref.id(), t);
  return ref;
}

Value Runtime::alloc_vector(std::int64_t length, Value fill) {
  if (length < 0) throw NegativeLength(fmt::format("negative vector length {}", length));
  ScratchPin pin_fill(*this, fill);
  safepoint();
  ensure_free(static_cast<std::size_t>(length));
  Value ref = heap_.allocate_vector(length, fill);
  Tick t = profiler_.record_creation(ref.id(), ObjKind::Vector,
                                     static_cast<std::uint32_t>(length));
  ++events_since_gc_;
  if (observer_) observer_->on_create(*this, ref.id(), t);
  return ref;
}

void Runtime::use(const Value& ref) {
  if (!ref.is_ref()) throw Error("use event on a non-reference value");
  if (!heap_.is_live(ref.id())) {
    throw DanglingRef(fmt::format("use of collected object {}", ref.id()));
  }
  Value pinned = ref;
  ScratchPin pin(*this, pinned);
  safepoint();
  Tick t = profiler_.record_use(pinned.id());
  ++events_since_gc_;
  if (observer_) observer_->on_use(*this, pinned.id(), t);
}

CollectionStats Runtime::collect(Trigger trigger) {
  if (observer_) observer_->before_collection(*this, trigger);
  std::vector<LifetimeRecord> flushed;
  CollectionStats stats = dragprof::collect(
      heap_, profiler_, [this](SlotVisitor& v) { trace_roots(v); }, profiler_.now(), trigger,
      &flushed);
  events_since_gc_ = 0;
  history_.push_back(stats);
  if (observer_) observer_->after_collection(*this, stats, flushed);
  return stats;
}

TraceLog Runtime::finish(std::string source_name) {
  if (observer_) observer_->on_safepoint(*this);
  collect(Trigger::Manual);
  LogHeader header{config_.gc_interval, config_.heap_slots, std::move(source_name)};
  return profiler_.finalize(profiler_.now(), std::move(header));
}

CollectionSummary Runtime::summary() const {
  CollectionSummary s;
  for (const CollectionStats& c : history_) {
    ++s.collections;
    switch (c.trigger) {
      case Trigger::Interval: ++s.by_interval; break;
      case Trigger::Exhaustion: ++s.by_exhaustion; break;
      case Trigger::Manual: ++s.manual; break;
    }
    s.objects_collected += c.collected;
    s.slots_copied += c.slots_copied;
  }
  return s;
}

}  // namespace dragprof
