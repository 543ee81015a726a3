#pragma once

// The mutator-facing allocator: owns heap, profiler and trigger policy.
// Every allocation and every use event passes through a safepoint where a
// collection may run; the interval trigger fires once `gc_interval` events
// have been recorded since the previous collection.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dragprof/gc.hpp"
#include "dragprof/heap.hpp"
#include "dragprof/profiler.hpp"

namespace dragprof {

struct RuntimeConfig {
  std::size_t heap_slots = kDefaultHeapSlots;
  std::uint64_t gc_interval = 16;
};

class Runtime;

/// Test and tooling hooks. All callbacks run on the mutator thread.
class RuntimeObserver {
 public:
  virtual ~RuntimeObserver() = default;
  /// Before the trigger decision at each safepoint; the root set is complete.
  virtual void on_safepoint(Runtime&) {}
  virtual void before_collection(Runtime&, Trigger) {}
  virtual void after_collection(Runtime&, const CollectionStats&,
                                std::span<const LifetimeRecord> /*flushed*/) {}
  virtual void on_create(Runtime&, ObjId, Tick) {}
  virtual void on_use(Runtime&, ObjId, Tick) {}
};

struct CollectionSummary {
  std::size_t collections = 0;
  std::size_t by_interval = 0;
  std::size_t by_exhaustion = 0;
  std::size_t manual = 0;
  std::size_t objects_collected = 0;
  std::size_t slots_copied = 0;
};

class Runtime {
 public:
  Runtime(RuntimeConfig config, RootSource roots);

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  const RuntimeConfig& config() const { return config_; }

  Value alloc_pair(Value car, Value cdr);
  Value alloc_vector(std::int64_t length, Value fill);
  /// Records a use of the heap object `ref` refers to.
  void use(const Value& ref);

  // Event-free heap access.
  Value read_slot(const Value& ref, std::size_t index) const { return heap_.read_slot(ref, index); }
  void write_slot(const Value& ref, std::size_t index, const Value& v) {
    heap_.write_slot(ref, index, v);
  }

  CollectionStats collect(Trigger trigger = Trigger::Manual);

  /// Final collection, then finalize. The runtime accepts no events after.
  TraceLog finish(std::string source_name);

  Tick now() const { return profiler_.now(); }
  const Heap& heap() const { return heap_; }
  const Profiler& profiler() const { return profiler_; }
  const std::vector<CollectionStats>& collections() const { return history_; }
  CollectionSummary summary() const;

  /// Root set including values pinned by an in-flight allocation or use.
  RootSource root_source();

  void set_observer(RuntimeObserver* observer) { observer_ = observer; }

 private:
  class ScratchPin;

  void safepoint();
  void ensure_free(std::size_t slots);
  void trace_roots(SlotVisitor& visitor);

  RuntimeConfig config_;
  RootSource roots_;
  Heap heap_;
  Profiler profiler_;
  std::vector<Value*> scratch_;
  std::uint64_t events_since_gc_ = 0;
  std::vector<CollectionStats> history_;
  RuntimeObserver* observer_ = nullptr;
};

}  // namespace dragprof
