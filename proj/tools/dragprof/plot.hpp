#pragma once

// Plot emitters for analyzer CSVs. Curves: solid reachable line, dashed
// live line. Histogram: log-scale counts, empty bins drawn at 0.5.

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "dragprof/analyzer.hpp"
#include "dragprof/errors.hpp"

namespace dragprof::cli {

enum class PlotFormat { Svg, Gnuplot };

enum class CsvKind { Curves, Histogram };

/// Malformed CSV; carries the 1-based line number.
class CsvFormatError : public Error {
 public:
  CsvFormatError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr double kEmptyBinFloor = 0.5;

/// Reads the header line only.
CsvKind detect_csv_kind(std::istream& in);
std::vector<CurvePoint> read_curves_csv(std::istream& in);
Histogram read_histogram_csv(std::istream& in);

void plot_curves(std::ostream& out, std::span<const CurvePoint> points, PlotFormat format,
                 std::string_view title);
void plot_histogram(std::ostream& out, const Histogram& hist, PlotFormat format,
                    std::string_view title);

}  // namespace dragprof::cli
