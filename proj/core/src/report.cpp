#include "dragprof/report.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

namespace dragprof {

std::string format_fixed2(double v) { return fmt::format("{:.2f}", v); }

void write_curves_csv(std::ostream& out, const CurveSeries& series) {
  out << "tick,reachable,live\n";
  for (const CurvePoint& p : series.points) {
    out << fmt::format("{},{},{}\n", p.tick, p.reachable, p.live);
  }
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  out << "bin_lo,bin_hi,count\n";
  const std::size_t width = 100 / kHistogramBins;
  for (std::size_t b = 0; b < hist.size(); ++b) {
    out << fmt::format("{},{},{}\n", b * width, (b + 1) * width, hist[b]);
  }
}

void write_report_csv(std::ostream& out, std::span<const DragReport> reports) {
  out << "source,gc_interval,end_tick,allocated,censored,dead_threshold,dead_count,dead_pct,"
         "max_drag,max_drag_pct,avg_drag,avg_drag_pct,sample_interval,reachable_integral,"
         "live_integral,savings_pct\n";
  for (const DragReport& r : reports) {
    out << fmt::format("{},{},{},{},{},{},{},{:.2f},{},{:.2f},{:.2f},{:.2f},{},{},{},{:.2f}\n",
                       r.source, r.gc_interval, r.end_tick, r.dead.allocated, r.censored,
                       r.dead_threshold, r.dead.dead_count, r.dead.dead_pct, r.summary.max_drag,
                       r.summary.max_pct, r.summary.avg_drag, r.summary.avg_pct,
                       r.curves.sample_interval, r.space_time.reachable_integral,
                       r.space_time.live_integral, r.space_time.savings_pct);
  }
}

void write_text_report(std::ostream& out, std::span<const DragReport> reports) {
  std::size_t name_w = 7;
  for (const DragReport& r : reports) name_w = std::max(name_w, r.source.size());

  out << "Space time product for reachable and live objects (object x ticks)\n";
  out << fmt::format("{:<{}}  {:>16}  {:>16}  {:>9}\n", "program", name_w, "reachable", "live",
                     "savings %");
  for (const DragReport& r : reports) {
    out << fmt::format("{:<{}}  {:>16}  {:>16}  {:>9.2f}\n", r.source, name_w,
                       r.space_time.reachable_integral, r.space_time.live_integral,
                       r.space_time.savings_pct);
  }

  out << "\nStatistics of dead objects (percentages of runtime)\n";
  out << fmt::format("{:<{}}  {:>10}  {:>10}  {:>7}  {:>10}  {:>7}  {:>9}  {:>7}  {:>7}\n",
                     "program", name_w, "runtime", "max drag", "max %", "avg drag", "avg %",
                     "allocated", "dead", "dead %");
  for (const DragReport& r : reports) {
    out << fmt::format(
        "{:<{}}  {:>10}  {:>10}  {:>7.2f}  {:>10.2f}  {:>7.2f}  {:>9}  {:>7}  {:>7.2f}\n",
        r.source, name_w, r.end_tick, r.summary.max_drag, r.summary.max_pct, r.summary.avg_drag,
        r.summary.avg_pct, r.dead.allocated, r.dead.dead_count, r.dead.dead_pct);
  }
  out << fmt::format("\nthreshold: drag > dead_threshold ticks; censored records are included "
                     "in every statistic\n");
  for (const DragReport& r : reports) {
    out << fmt::format("{:<{}}  K={} threshold={} sample_interval={} censored={}\n", r.source,
                       name_w, r.gc_interval, r.dead_threshold, r.curves.sample_interval,
                       r.censored);
  }
}

}  // namespace dragprof
