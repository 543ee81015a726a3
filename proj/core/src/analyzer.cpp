#include "dragprof/analyzer.hpp"

#include <algorithm>
#include <stdexcept>

namespace dragprof {

namespace {

double pct(double part, double whole) { return whole > 0 ? part / whole * 100.0 : 0.0; }

// Sample indices k with lo <= k*s <= hi, clipped to [0, n).
std::pair<std::size_t, std::size_t> sample_range(Tick lo, Tick hi, Tick s, std::size_t n) {
  std::size_t first = static_cast<std::size_t>((lo + s - 1) / s);
  std::size_t last = static_cast<std::size_t>(hi / s) + 1;  // exclusive
  return {first, std::min(last, n)};
}

}  // namespace

DragRecord drag(const LifetimeRecord& record, Tick end_tick) {
  Tick from = record.last_use_tick.value_or(record.create_tick);
  Tick d = record.collect_tick - from;
  return DragRecord{record.id, d, pct(static_cast<double>(d), static_cast<double>(end_tick)),
                    record.censored};
}

std::vector<DragRecord> drags(const TraceLog& log) {
  std::vector<DragRecord> out;
  out.reserve(log.records.size());
  for (const LifetimeRecord& r : log.records) out.push_back(drag(r, log.end_tick));
  return out;
}

CurveSeries curves(const TraceLog& log, Tick sample_interval) {
  if (sample_interval == 0) throw std::invalid_argument("sample interval must be >= 1");
  const Tick s = sample_interval;
  const std::size_t n =
      log.end_tick == 0 ? 1 : static_cast<std::size_t>((log.end_tick - 1) / s) + 1;

  // Difference arrays over sample indices: O(records + samples).
  std::vector<std::int64_t> reach(n + 1, 0);
  std::vector<std::int64_t> live(n + 1, 0);
  for (const LifetimeRecord& r : log.records) {
    auto [a, b] = sample_range(r.create_tick, r.collect_tick, s, n);
    if (a < b) {
      ++reach[a];
      --reach[b];
    }
    if (r.last_use_tick) {
      auto [c, d] = sample_range(r.create_tick, *r.last_use_tick, s, n);
      if (c < d) {
        ++live[c];
        --live[d];
      }
    }
  }

  CurveSeries series;
  series.sample_interval = s;
  series.points.reserve(n);
  std::int64_t rc = 0;
  std::int64_t lc = 0;
  for (std::size_t k = 0; k < n; ++k) {
    rc += reach[k];
    lc += live[k];
    series.points.push_back(CurvePoint{k * s, static_cast<std::uint64_t>(rc),
                                       static_cast<std::uint64_t>(lc)});
  }
  return series;
}

double savings_pct(double reachable_integral, double live_integral) {
  if (reachable_integral <= 0) return 0.0;
  return (reachable_integral - live_integral) / reachable_integral * 100.0;
}

SpaceTime space_time(const CurveSeries& series) {
  SpaceTime st;
  for (const CurvePoint& p : series.points) {
    st.reachable_integral += p.reachable * series.sample_interval;
    st.live_integral += p.live * series.sample_interval;
  }
  st.savings_pct = savings_pct(static_cast<double>(st.reachable_integral),
                               static_cast<double>(st.live_integral));
  return st;
}

DragSummary drag_summary(std::span<const DragRecord> drags, Tick end_tick) {
  DragSummary s;
  if (drags.empty()) return s;
  double total = 0;
  for (const DragRecord& d : drags) {
    s.max_drag = std::max(s.max_drag, d.drag_ticks);
    total += static_cast<double>(d.drag_ticks);
  }
  s.avg_drag = total / static_cast<double>(drags.size());
  s.max_pct = pct(static_cast<double>(s.max_drag), static_cast<double>(end_tick));
  s.avg_pct = pct(s.avg_drag, static_cast<double>(end_tick));
  return s;
}

DeadObjects dead_objects(std::span<const DragRecord> drags, Tick threshold_ticks) {
  DeadObjects d;
  d.allocated = drags.size();
  d.dead_count = static_cast<std::size_t>(std::count_if(
      drags.begin(), drags.end(), [&](const DragRecord& r) { return r.drag_ticks > threshold_ticks; }));
  d.dead_pct = pct(static_cast<double>(d.dead_count), static_cast<double>(d.allocated));
  return d;
}

Histogram histogram(std::span<const DragRecord> drags, Tick end_tick) {
  Histogram h{};
  for (const DragRecord& d : drags) {
    // Integer binning: floor(20 * drag / end) avoids rounding at bin edges.
    std::size_t bin = end_tick == 0 ? 0 : static_cast<std::size_t>(d.drag_ticks * kHistogramBins / end_tick);
    ++h[std::min(bin, kHistogramBins - 1)];
  }
  return h;
}

Tick default_sample_interval(Tick end_tick) { return std::max<Tick>(1, end_tick / 500); }

DragReport analyze(const TraceLog& log, const AnalyzeOptions& options) {
  DragReport report;
  report.source = log.header.source;
  report.gc_interval = log.header.gc_interval;
  report.end_tick = log.end_tick;
  report.censored = static_cast<std::size_t>(std::count_if(
      log.records.begin(), log.records.end(), [](const LifetimeRecord& r) { return r.censored; }));
  report.dead_threshold = options.dead_threshold.value_or(log.header.gc_interval);

  std::vector<DragRecord> ds = drags(log);
  report.dead = dead_objects(ds, report.dead_threshold);
  report.summary = drag_summary(ds, log.end_tick);
  report.histogram = histogram(ds, log.end_tick);
  report.curves =
      curves(log, options.sample_interval.value_or(default_sample_interval(log.end_tick)));
  report.space_time = space_time(report.curves);
  return report;
}

}  // namespace dragprof
