#pragma once

// Cheney-style stop-and-copy collection wired to the profiler's
// reset/mark/flush protocol, plus read-only traversals used to check it.

#include <string>
#include <vector>

#include "dragprof/heap.hpp"
#include "dragprof/profiler.hpp"

namespace dragprof {

enum class Trigger { Interval, Exhaustion, Manual };

const char* trigger_name(Trigger t);

struct CollectionStats {
  Trigger trigger = Trigger::Manual;
  Tick tick = 0;
  std::size_t survivors = 0;
  std::size_t collected = 0;
  std::size_t slots_copied = 0;
};

/// Copies everything reachable from `roots` into the standby space, swaps
/// spaces, and flushes every profiler record that was not copied with
/// collect_tick = clock. Root and slot Refs are rewritten in place.
/// `flushed`, when non-null, receives the finalized records.
CollectionStats collect(Heap& heap, Profiler& profiler, const RootSource& roots, Tick clock,
                        Trigger trigger, std::vector<LifetimeRecord>* flushed = nullptr);

/// Ids reachable from `roots`, sorted. Independent of collect(): a plain
/// breadth-first walk over the heap's public accessors.
std::vector<ObjId> reachability_oracle(const Heap& heap, const RootSource& roots);

/// Canonical text form of the graph reachable from `roots`. Objects are
/// numbered in discovery order and shared or cyclic structure is written
/// as a back-reference, so two heaps print the same iff the rooted graphs
/// are isomorphic with the same object ids.
std::string canonical_form(const Heap& heap, const RootSource& roots);

class CopyingCollector {
 public:
  CopyingCollector(Heap& heap, Profiler& profiler) : heap_(heap), profiler_(profiler) {}

  CollectionStats run(const RootSource& roots, Tick clock, Trigger trigger,
                      std::vector<LifetimeRecord>* flushed);

 private:
  class Evacuator;

  Address evacuate(ObjId id);

  Heap& heap_;
  Profiler& profiler_;
  std::size_t slots_copied_ = 0;
};

}  // namespace dragprof
