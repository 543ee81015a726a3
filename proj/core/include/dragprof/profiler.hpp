#pragma once

// Lifetime registry and logical clock. Each profiled object gets a record
// holding its creation tick, most recent use tick and a survival flag that
// the collector sets while copying; records left unflagged after a
// collection are finalized and appended to the trace log.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dragprof/heap.hpp"

namespace dragprof {

/// Logical time: one step per allocation or use event.
using Tick = std::uint64_t;

struct LifetimeRecord {
  ObjId id = 0;
  ObjKind kind = ObjKind::Pair;
  std::uint32_t size_slots = 0;
  Tick create_tick = 0;
  std::optional<Tick> last_use_tick;  // nullopt: never used (-1 on disk)
  bool survived = false;              // meaningful only mid-collection
  Tick collect_tick = 0;
  bool censored = false;              // still reachable at program end

  bool used() const { return last_use_tick.has_value(); }
  friend bool operator==(const LifetimeRecord&, const LifetimeRecord&) = default;
};

struct LogHeader {
  std::uint64_t gc_interval = 0;
  std::uint64_t heap_slots = 0;
  std::string source;
  friend bool operator==(const LogHeader&, const LogHeader&) = default;
};

/// Finalized records sorted by (collect_tick, id); every id appears once.
struct TraceLog {
  LogHeader header;
  std::vector<LifetimeRecord> records;
  Tick end_tick = 0;
  friend bool operator==(const TraceLog&, const TraceLog&) = default;
};

class Profiler {
 public:
  Profiler() = default;

  Tick now() const { return clock_; }
  std::size_t registered() const { return live_.size(); }
  std::size_t finalized() const { return finished_.size(); }
  bool closed() const { return phase_ == Phase::Closed; }

  Tick record_creation(ObjId id, ObjKind kind, std::uint32_t size_slots);
  Tick record_use(ObjId id);

  /// Registered record for `id`, or nullptr.
  const LifetimeRecord* find(ObjId id) const;

  // Collector protocol: reset_flags, then mark_survivor for each copy, then
  // flush_unflagged. Anything else in between is a ProtocolViolation.
  void reset_flags();
  void mark_survivor(ObjId id, Address new_address);
  std::vector<LifetimeRecord> flush_unflagged(Tick clock);

  /// Emits every remaining record as censored at `end_tick` and closes the
  /// profiler. A second call is a ProtocolViolation.
  TraceLog finalize(Tick end_tick, LogHeader header);

 private:
  enum class Phase { Mutating, Collecting, Closed };

  struct Entry {
    LifetimeRecord record;
    Address address = 0;
  };

  static constexpr std::uint32_t kNoSlot = 0xffffffffu;

  Entry& entry(ObjId id);
  void require(Phase expected, const char* op) const;

  Tick clock_ = 0;
  Phase phase_ = Phase::Mutating;
  std::vector<Entry> live_;
  std::vector<std::uint32_t> position_;  // id -> index into live_, or kNoSlot
  std::vector<LifetimeRecord> finished_;
};

}  // namespace dragprof
