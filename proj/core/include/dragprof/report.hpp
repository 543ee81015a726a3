#pragma once

// Serializers for analyzer output: three CSVs and a plain-text report laid
// out like the space-time and dead-object tables. All numbers are printed
// with fixed precision so identical inputs give identical bytes.

#include <iosfwd>
#include <span>
#include <string>

#include "dragprof/analyzer.hpp"

namespace dragprof {

/// tick,reachable,live
void write_curves_csv(std::ostream& out, const CurveSeries& series);
/// bin_lo,bin_hi,count (bounds in percent of runtime)
void write_histogram_csv(std::ostream& out, const Histogram& hist);
/// Header plus one row per report.
void write_report_csv(std::ostream& out, std::span<const DragReport> reports);

void write_text_report(std::ostream& out, std::span<const DragReport> reports);

/// Percentages and averages: two decimals.
std::string format_fixed2(double v);

}  // namespace dragprof
