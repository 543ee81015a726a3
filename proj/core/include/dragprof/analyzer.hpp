#pragma once

// Drag analytics over a finalized TraceLog. Everything here is a pure
// function of its inputs, so separate logs can be analyzed concurrently.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dragprof/profiler.hpp"

namespace dragprof {

struct DragRecord {
  ObjId id = 0;
  Tick drag_ticks = 0;    // collect - last_use, or collect - create if never used
  double drag_pct = 0.0;  // relative to end_tick; 0 when end_tick is 0
  bool censored = false;
};

struct CurvePoint {
  Tick tick = 0;
  std::uint64_t reachable = 0;  // create <= tick <= collect
  std::uint64_t live = 0;       // create <= tick <= last_use
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Samples at 0, s, 2s, ... below end_tick; a lone sample at 0 if end_tick is 0.
struct CurveSeries {
  Tick sample_interval = 1;
  std::vector<CurvePoint> points;
};

struct SpaceTime {
  std::uint64_t reachable_integral = 0;  // R, object x ticks
  std::uint64_t live_integral = 0;       // L
  double savings_pct = 0.0;
};

struct DragSummary {
  Tick max_drag = 0;
  double max_pct = 0.0;
  double avg_drag = 0.0;
  double avg_pct = 0.0;
};

struct DeadObjects {
  std::size_t allocated = 0;
  std::size_t dead_count = 0;
  double dead_pct = 0.0;
};

inline constexpr std::size_t kHistogramBins = 20;
using Histogram = std::array<std::uint64_t, kHistogramBins>;

DragRecord drag(const LifetimeRecord& record, Tick end_tick);
std::vector<DragRecord> drags(const TraceLog& log);

/// Throws std::invalid_argument when sample_interval is 0.
CurveSeries curves(const TraceLog& log, Tick sample_interval);
SpaceTime space_time(const CurveSeries& series);
/// (R - L) / R x 100, or 0 when R is 0.
double savings_pct(double reachable_integral, double live_integral);

DragSummary drag_summary(std::span<const DragRecord> drags, Tick end_tick);
DeadObjects dead_objects(std::span<const DragRecord> drags, Tick threshold_ticks);
/// Bin b counts 5b <= drag_pct < 5(b+1); drag_pct = 100 lands in the last bin.
Histogram histogram(std::span<const DragRecord> drags, Tick end_tick);

Tick default_sample_interval(Tick end_tick);

struct AnalyzeOptions {
  std::optional<Tick> sample_interval;  // default: default_sample_interval
  std::optional<Tick> dead_threshold;   // default: the log's gc_interval
};

struct DragReport {
  std::string source;
  std::uint64_t gc_interval = 0;
  Tick end_tick = 0;
  std::size_t censored = 0;
  Tick dead_threshold = 0;
  DeadObjects dead;
  DragSummary summary;
  SpaceTime space_time;
  Histogram histogram{};
  CurveSeries curves;
};

DragReport analyze(const TraceLog& log, const AnalyzeOptions& options = {});

}  // namespace dragprof
