#include "dragprof/profiler.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "dragprof/errors.hpp"

namespace dragprof {

namespace {

const char* phase_name(bool collecting) { return collecting ? "collecting" : "mutating"; }

}  // namespace

void Profiler::require(Phase expected, const char* op) const {
  if (phase_ == expected) return;
  if (phase_ == Phase::Closed) {
    throw ProtocolViolation(fmt::format("{} after finalize", op));
  }
  throw ProtocolViolation(fmt::format("{} while {}", op, phase_name(phase_ == Phase::Collecting)));
}

Profiler::Entry& Profiler::entry(ObjId id) {
  if (id >= position_.size() || position_[id] == kNoSlot) {
    throw UnknownId(fmt::format("object {} is not registered", id));
  }
  return live_[position_[id]];
}

const LifetimeRecord* Profiler::find(ObjId id) const {
  if (id >= position_.size() || position_[id] == kNoSlot) return nullptr;
  return &live_[position_[id]].record;
}

Tick Profiler::record_creation(ObjId id, ObjKind kind, std::uint32_t size_slots) {
  require(Phase::Mutating, "record_creation");
  if (id < position_.size() && position_[id] != kNoSlot) {
    throw DuplicateId(fmt::format("object {} registered twice", id));
  }
  if (id >= position_.size()) position_.resize(id + 1, kNoSlot);
  ++clock_;
  LifetimeRecord rec;
  rec.id = id;
  rec.kind = kind;
  rec.size_slots = size_slots;
  rec.create_tick = clock_;
  position_[id] = static_cast<std::uint32_t>(live_.size());
  live_.push_back(Entry{rec, 0});
  return clock_;
}

Tick Profiler::record_use(ObjId id) {
  require(Phase::Mutating, "record_use");
  Entry& e = entry(id);
  ++clock_;
  e.record.last_use_tick = clock_;
  return clock_;
}

void Profiler::reset_flags() {
  require(Phase::Mutating, "reset_flags");
  for (Entry& e : live_) e.record.survived = false;
  phase_ = Phase::Collecting;
}

void Profiler::mark_survivor(ObjId id, Address new_address) {
  require(Phase::Collecting, "mark_survivor");
  Entry& e = entry(id);
  e.record.survived = true;
  e.address = new_address;
}

std::vector<LifetimeRecord> Profiler::flush_unflagged(Tick clock) {
  require(Phase::Collecting, "flush_unflagged");
  std::vector<LifetimeRecord> flushed;
  std::vector<Entry> kept;
  kept.reserve(live_.size());
  for (Entry& e : live_) {
    if (e.record.survived) {
      position_[e.record.id] = static_cast<std::uint32_t>(kept.size());
      kept.push_back(std::move(e));
      continue;
    }
    position_[e.record.id] = kNoSlot;
    e.record.collect_tick = clock;
    e.record.censored = false;
    flushed.push_back(e.record);
    finished_.push_back(e.record);
  }
  live_ = std::move(kept);
  phase_ = Phase::Mutating;
  return flushed;
}

TraceLog Profiler::finalize(Tick end_tick, LogHeader header) {
  require(Phase::Mutating, "finalize");
  for (Entry& e : live_) {
    position_[e.record.id] = kNoSlot;
    e.record.collect_tick = end_tick;
    e.record.censored = true;
    e.record.survived = false;
    finished_.push_back(e.record);
  }
  live_.clear();
  phase_ = Phase::Closed;

  TraceLog log;
  log.header = std::move(header);
  log.end_tick = end_tick;
  log.records = std::move(finished_);
  finished_.clear();
  for (LifetimeRecord& r : log.records) r.survived = false;
  std::sort(log.records.begin(), log.records.end(), [](const auto& a, const auto& b) {
    return a.collect_tick != b.collect_tick ? a.collect_tick < b.collect_tick : a.id < b.id;
  });
  return log;
}

}  // namespace dragprof
