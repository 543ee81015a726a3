#include "dragprof/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "dragprof/version.hpp"

namespace dragprof::cli {

CsvFormatError::CsvFormatError(std::size_t line, const std::string& what)
    : Error(fmt::format("line {}: {}", line, what)), line_(line) {}

namespace {

constexpr std::string_view kCurvesHeader = "tick,reachable,live";
constexpr std::string_view kHistogramHeader = "bin_lo,bin_hi,count";

std::vector<std::uint64_t> parse_row(const std::string& line, std::size_t lineno,
                                     std::size_t fields) {
  std::vector<std::uint64_t> out;
  const char* p = line.data();
  const char* end = line.data() + line.size();
  while (true) {
    std::uint64_t v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{}) throw CsvFormatError(lineno, fmt::format("bad number in '{}'", line));
    out.push_back(v);
    p = next;
    if (p == end) break;
    if (*p != ',') throw CsvFormatError(lineno, fmt::format("unexpected '{}'", *p));
    ++p;
  }
  if (out.size() != fields) {
    throw CsvFormatError(lineno, fmt::format("expected {} fields, got {}", fields, out.size()));
  }
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

void expect_header(std::istream& in, std::string_view header) {
  std::string line;
  if (!std::getline(in, line)) throw CsvFormatError(1, "empty file");
  if (strip_cr(line) != header) {
    throw CsvFormatError(1, fmt::format("expected header '{}'", header));
  }
}

// Geometry shared by both SVG plots.
struct Frame {
  double width = 800, height = 420;
  double left = 70, right = 20, top = 40, bottom = 50;
  double plot_w() const { return width - left - right; }
  double plot_h() const { return height - top - bottom; }
};

void svg_open(std::ostream& out, const Frame& f, std::string_view title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << fmt::format("<!-- dragprof {} -->\n", kVersion);
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      f.width, f.height, f.width, f.height);
  out << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", f.width, f.height);
  out << fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
                     f.width / 2, title);
  out << fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
      f.left, f.top, f.plot_w(), f.plot_h());
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void curves_svg(std::ostream& out, std::span<const CurvePoint> points, std::string_view title) {
  Frame f;
  svg_open(out, f, escape(title));

  std::uint64_t t0 = points.empty() ? 0 : points.front().tick;
  std::uint64_t t1 = points.empty() ? 1 : points.back().tick;
  if (t1 <= t0) t1 = t0 + 1;
  std::uint64_t ymax = 1;
  for (const CurvePoint& p : points) ymax = std::max({ymax, p.reachable, p.live});

  auto x = [&](std::uint64_t t) {
    return f.left + static_cast<double>(t - t0) / static_cast<double>(t1 - t0) * f.plot_w();
  };
  auto y = [&](std::uint64_t v) {
    return f.top + f.plot_h() - static_cast<double>(v) / static_cast<double>(ymax) * f.plot_h();
  };

  for (int i = 0; i <= 4; ++i) {
    std::uint64_t tv = t0 + (t1 - t0) * i / 4;
    std::uint64_t yv = ymax * i / 4;
    out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", x(tv),
                       f.height - f.bottom + 16, tv);
    out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n",
                       f.left - 6, y(yv) + 4, yv);
  }
  out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">tick</text>\n",
                     f.left + f.plot_w() / 2, f.height - 12);
  out << fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">"
      "objects</text>\n",
      f.top + f.plot_h() / 2, f.top + f.plot_h() / 2);

  auto polyline = [&](const char* cls, const char* color, const char* dash, auto field) {
    out << fmt::format("<polyline class=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} "
                       "points=\"",
                       cls, color, dash);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i > 0) out << ' ';
      out << fmt::format("{:.2f},{:.2f}", x(points[i].tick), y(field(points[i])));
    }
    out << "\"/>\n";
  };
  polyline("reachable", "#1f4e99", "", [](const CurvePoint& p) { return p.reachable; });
  polyline("live", "#c0392b", " stroke-dasharray=\"6,4\"",
           [](const CurvePoint& p) { return p.live; });

  double lx = f.left + f.plot_w() - 150;
  double ly = f.top + 14;
  out << "<g class=\"legend\">\n";
  out << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#1f4e99\" "
                     "stroke-width=\"1.5\"/>\n",
                     lx, ly, lx + 30);
  out << fmt::format("<text x=\"{}\" y=\"{}\">reachable</text>\n", lx + 36, ly + 4);
  out << fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#c0392b\" "
                     "stroke-width=\"1.5\" stroke-dasharray=\"6,4\"/>\n",
                     lx, ly + 18, lx + 30);
  out << fmt::format("<text x=\"{}\" y=\"{}\">live</text>\n", lx + 36, ly + 22);
  out << "</g>\n</svg>\n";
}

void histogram_svg(std::ostream& out, const Histogram& hist, std::string_view title) {
  Frame f;
  svg_open(out, f, escape(title));

  // Log axis from one decade below the floor to the next power of ten.
  std::uint64_t peak = *std::max_element(hist.begin(), hist.end());
  double lo = std::log10(kEmptyBinFloor) - 0.5;
  double hi = std::max(1.0, std::ceil(std::log10(static_cast<double>(std::max<std::uint64_t>(peak, 1))) + 1e-9));
  auto y = [&](double v) {
    return f.top + f.plot_h() - (std::log10(v) - lo) / (hi - lo) * f.plot_h();
  };

  for (int d = 0; d <= static_cast<int>(hi); ++d) {
    double v = std::pow(10.0, d);
    out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n",
                       f.left - 6, y(v) + 4, static_cast<std::uint64_t>(v));
  }

  double bw = f.plot_w() / static_cast<double>(hist.size());
  for (std::size_t b = 0; b < hist.size(); ++b) {
    bool empty = hist[b] == 0;
    double v = empty ? kEmptyBinFloor : static_cast<double>(hist[b]);
    double top = y(v);
    out << fmt::format(
        "<rect class=\"bin\" data-count=\"{}\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" "
        "height=\"{:.2f}\" fill=\"{}\" stroke=\"black\"/>\n",
        hist[b], f.left + b * bw + 1, top, bw - 2, f.top + f.plot_h() - top,
        empty ? "#dddddd" : "#1f4e99");
    if (b % 2 == 0) {
      out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                         f.left + b * bw, f.height - f.bottom + 16, b * 5);
    }
  }
  out << fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">100</text>\n",
                     f.left + f.plot_w(), f.height - f.bottom + 16);
  out << fmt::format(
      "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">drag (% of runtime)</text>\n",
      f.left + f.plot_w() / 2, f.height - 12);
  out << fmt::format(
      "<text x=\"16\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2f})\">"
      "objects (log scale)</text>\n",
      f.top + f.plot_h() / 2, f.top + f.plot_h() / 2);
  out << "</svg>\n";
}

void curves_gnuplot(std::ostream& out, std::span<const CurvePoint> points, std::string_view title) {
  out << fmt::format("# dragprof {}\n", kVersion);
  out << "$curves << EOD\n";
  for (const CurvePoint& p : points) out << fmt::format("{} {} {}\n", p.tick, p.reachable, p.live);
  out << "EOD\n";
  out << fmt::format("set title \"{}\"\n", title);
  out << "set xlabel \"tick\"\nset ylabel \"objects\"\nset key top right\n";
  out << "plot $curves using 1:2 with lines dashtype 1 linewidth 2 title \"reachable\", \\\n"
         "     $curves using 1:3 with lines dashtype 2 linewidth 2 title \"live\"\n";
}

void histogram_gnuplot(std::ostream& out, const Histogram& hist, std::string_view title) {
  out << fmt::format("# dragprof {}\n", kVersion);
  out << "# empty bins are drawn at 0.5 so they remain visible on the log axis\n";
  out << "$hist << EOD\n";
  for (std::size_t b = 0; b < hist.size(); ++b) {
    double v = hist[b] == 0 ? kEmptyBinFloor : static_cast<double>(hist[b]);
    out << fmt::format("{:.1f} {} {}\n", b * 5 + 2.5, v, hist[b]);
  }
  out << "EOD\n";
  out << fmt::format("set title \"{}\"\n", title);
  out << "set xlabel \"drag (% of runtime)\"\nset ylabel \"objects (log scale)\"\n";
  out << "set logscale y\nset yrange [0.25:*]\nset xrange [0:100]\nset boxwidth 4.5\n"
         "set style fill solid 0.6\n";
  out << "plot $hist using 1:2 with boxes notitle\n";
}

}  // namespace

CsvKind detect_csv_kind(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CsvFormatError(1, "empty file");
  line = strip_cr(line);
  if (line == kCurvesHeader) return CsvKind::Curves;
  if (line == kHistogramHeader) return CsvKind::Histogram;
  throw CsvFormatError(1, fmt::format("unrecognized header '{}'", line));
}

std::vector<CurvePoint> read_curves_csv(std::istream& in) {
  expect_header(in, kCurvesHeader);
  std::vector<CurvePoint> points;
  std::string line;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto v = parse_row(line, lineno, 3);
    if (!points.empty() && v[0] <= points.back().tick) {
      throw CsvFormatError(lineno, "ticks must be strictly increasing");
    }
    points.push_back(CurvePoint{v[0], v[1], v[2]});
  }
  if (points.empty()) throw CsvFormatError(2, "no data rows");
  return points;
}

Histogram read_histogram_csv(std::istream& in) {
  expect_header(in, kHistogramHeader);
  Histogram h{};
  std::size_t b = 0;
  std::string line;
  for (std::size_t lineno = 2; std::getline(in, line); ++lineno) {
    line = strip_cr(line);
    if (line.empty()) continue;
    auto v = parse_row(line, lineno, 3);
    if (b >= h.size()) throw CsvFormatError(lineno, "more than 20 bins");
    if (v[0] != b * 5 || v[1] != (b + 1) * 5) {
      throw CsvFormatError(lineno, fmt::format("bin {} must span [{}, {})", b, b * 5, (b + 1) * 5));
    }
    h[b++] = v[2];
  }
  if (b != h.size()) throw CsvFormatError(b + 2, fmt::format("expected 20 bins, got {}", b));
  return h;
}

void plot_curves(std::ostream& out, std::span<const CurvePoint> points, PlotFormat format,
                 std::string_view title) {
  if (format == PlotFormat::Svg) {
    curves_svg(out, points, title);
  } else {
    curves_gnuplot(out, points, title);
  }
}

void plot_histogram(std::ostream& out, const Histogram& hist, PlotFormat format,
                    std::string_view title) {
  if (format == PlotFormat::Svg) {
    histogram_svg(out, hist, title);
  } else {
    histogram_gnuplot(out, hist, title);
  }
}

}  // namespace dragprof::cli
