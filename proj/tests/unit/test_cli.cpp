#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "dragprof/commands.hpp"
#include "dragprof/draglog.hpp"
#include "dragprof/plot.hpp"
#include "dragprof/version.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace dragprof;
using namespace dragprof::cli;

namespace {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("dragprof-cli-" + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "dragprof");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

std::string slurp(const fs::path& p) { return testing::read_file(p); }

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

bool has_tmp(const fs::path& dir) {
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.path().extension() == ".tmp") return true;
  }
  return false;
}

std::string program(const std::string& name) { return (testing::programs_dir() / name).string(); }

}  // namespace

TEST_CASE("usage errors") {
  CHECK(invoke({}).code == kUsage);
  CHECK(invoke({"frobnicate"}).code == kUsage);
  CHECK(invoke({"run"}).code == kUsage);
  CHECK(invoke({"run", "x.scm", "--gc-interval", "0"}).code == kUsage);
  CHECK(invoke({"run", "x.scm", "--heap-slots", "8"}).code == kUsage);
  CHECK(invoke({"analyze", "x.draglog", "--sample-interval", "0"}).code == kUsage);
  auto v = invoke({"--version"});
  CHECK(v.code == kOk);
  CHECK(v.out.find(kVersion) != std::string::npos);
}

TEST_CASE("run writes a log and reports a summary") {
  TempDir dir;
  auto log = dir / "traversal.draglog";
  auto r = invoke({"run", program("traversal.scm"), "--gc-interval", "1", "--log", log.string()});
  REQUIRE(r.code == kOk);
  CHECK(r.out.find("result: ") != std::string::npos);
  CHECK(r.out.find("end tick: ") != std::string::npos);
  auto parsed = read_draglog_file(log);
  CHECK(parsed.records.size() == 3);
  CHECK(parsed.header.gc_interval == 1);
  CHECK_FALSE(has_tmp(dir.path()));
}

TEST_CASE("run failures map to distinct exit codes and leave no log") {
  TempDir dir;
  auto log = dir / "out.draglog";
  auto missing = invoke({"run", (dir / "missing.scm").string(), "--log", log.string()});
  CHECK(missing.code == kInputError);
  CHECK_FALSE(fs::exists(log));

  write(dir / "bad.scm", "(define x 1)\n(car");
  auto syntax = invoke({"run", (dir / "bad.scm").string(), "--log", log.string()});
  CHECK(syntax.code == kInputError);
  CHECK(syntax.err.find("bad.scm:2:") != std::string::npos);
  CHECK_FALSE(fs::exists(log));

  write(dir / "rt.scm", "(define x 1)\n(car x)\n");
  auto runtime = invoke({"run", (dir / "rt.scm").string(), "--log", log.string()});
  CHECK(runtime.code == kRuntimeError);
  CHECK(runtime.err.find("rt.scm:2:1") != std::string::npos);
  CHECK(runtime.err.find("(car x)") != std::string::npos);
  CHECK_FALSE(fs::exists(log));

  write(dir / "oom.scm", "(define (mk n) (if (= n 0) '() (cons n (mk (- n 1)))))\n(define big (mk 100))\n");
  auto oom = invoke({"run", (dir / "oom.scm").string(), "--heap-slots", "64", "--log", log.string()});
  CHECK(oom.code == kOutOfMemory);
  CHECK(oom.err.find("oom.scm:2:1") != std::string::npos);
  CHECK_FALSE(fs::exists(log));

  write(dir / "deep.scm", "(define (f n) (if (= n 0) 0 (+ 1 (f (- n 1)))))\n(f 100000)\n");
  auto deep = invoke({"run", (dir / "deep.scm").string(), "--log", log.string()});
  CHECK(deep.code == kRuntimeError);
  CHECK(deep.err.find("recursion") != std::string::npos);
}

TEST_CASE("unwritable outputs give the write error code") {
  TempDir dir;
  auto r = invoke({"run", program("traversal.scm"), "--log", (dir / "no/such/dir/x.draglog").string()});
  CHECK(r.code == kWriteError);
}

TEST_CASE("analyze writes all outputs and rejects malformed logs") {
  TempDir dir;
  auto log = dir / "traversal.draglog";
  REQUIRE(invoke({"run", program("traversal.scm"), "--gc-interval", "1", "--log", log.string()}).code == kOk);
  auto out = dir / "out";
  auto a = invoke({"analyze", log.string(), "--out-dir", out.string()});
  REQUIRE(a.code == kOk);
  for (const char* name : {"report.csv", "curves.csv", "histogram.csv", "report.txt"}) {
    CHECK(fs::exists(out / name));
  }
  CHECK(a.out.find("Space time product") != std::string::npos);
  CHECK_FALSE(has_tmp(dir.path()));

  std::string text = slurp(log);
  write(dir / "trunc.draglog", text.substr(0, text.rfind("END")));
  auto t = invoke({"analyze", (dir / "trunc.draglog").string(), "--out-dir", (dir / "t").string()});
  CHECK(t.code == kInputError);
  CHECK(t.err.find("line") != std::string::npos);

  write(dir / "garbage.draglog", "DRAGLOG 1 gc_interval=1 heap_slots=64 source=x\nOBJ zero\nEND 0\n");
  auto g = invoke({"analyze", (dir / "garbage.draglog").string(), "--out-dir", (dir / "g").string()});
  CHECK(g.code == kInputError);
  CHECK(g.err.find("line 2") != std::string::npos);

  CHECK(invoke({"analyze", (dir / "nope.draglog").string()}).code == kInputError);
}

TEST_CASE("an empty-body log analyzes to an all-zero report") {
  TempDir dir;
  write(dir / "empty.draglog", "DRAGLOG 1 gc_interval=4 heap_slots=64 source=empty\nEND 0\n");
  auto r = invoke({"analyze", (dir / "empty.draglog").string(), "--out-dir", dir.path().string()});
  REQUIRE(r.code == kOk);
  std::string csv = slurp(dir / "report.csv");
  CHECK(csv.find("empty,4,0,0,0,4,0,0.00,0,0.00,0.00,0.00,1,0,0,0.00") != std::string::npos);
}

TEST_CASE("analyzing several logs writes one directory each plus a combined report") {
  TempDir dir;
  for (const char* name : {"traversal", "list-stress"}) {
    REQUIRE(invoke({"run", program(std::string(name) + ".scm"), "--log", (dir / (std::string(name) + ".draglog")).string()})
                .code == kOk);
  }
  auto r = invoke({"analyze", (dir / "traversal.draglog").string(), (dir / "list-stress.draglog").string(),
                "--out-dir", (dir / "out").string()});
  REQUIRE(r.code == kOk);
  CHECK(fs::exists(dir / "out/traversal/curves.csv"));
  CHECK(fs::exists(dir / "out/list-stress/histogram.csv"));
  std::string combined = slurp(dir / "out/report.csv");
  CHECK(count(combined, "\n") == 3);
}

TEST_CASE("plot emits svg with two polylines, a legend and a dashed live line") {
  TempDir dir;
  auto log = dir / "motiv.draglog";
  REQUIRE(invoke({"run", program("motiv.scm"), "--gc-interval", "1", "--log", log.string()}).code == kOk);
  REQUIRE(invoke({"analyze", log.string(), "--out-dir", dir.path().string()}).code == kOk);
  // end tick 11003 at the default interval of 22 gives 501 samples.
  CHECK(count(slurp(dir / "curves.csv"), "\n") == 502);
  auto p = invoke({"plot", (dir / "curves.csv").string(), (dir / "histogram.csv").string()});
  REQUIRE(p.code == kOk);
  std::string svg = slurp(dir / "curves.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg.find("class=\"reachable\"") != std::string::npos);
  CHECK(svg.find("class=\"live\"") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("class=\"legend\"") != std::string::npos);
  std::string hist = slurp(dir / "histogram.svg");
  CHECK(count(hist, "class=\"bin") == 20);
  CHECK_FALSE(has_tmp(dir.path()));
}

TEST_CASE("empty histogram bins are drawn at the floor") {
  Histogram h{};
  h[0] = 1000;
  h[3] = 1;
  std::ostringstream svg;
  plot_histogram(svg, h, PlotFormat::Svg, "h");
  std::string s = svg.str();
  CHECK(count(s, "data-count=\"0\"") == 18);
  CHECK(s.find("0.5") != std::string::npos);
  std::ostringstream gp;
  plot_histogram(gp, h, PlotFormat::Gnuplot, "h");
  CHECK(gp.str().find("set logscale y") != std::string::npos);
  CHECK(gp.str().find("0.5") != std::string::npos);
}

TEST_CASE("gnuplot output for curves") {
  TempDir dir;
  write(dir / "c.csv", "tick,reachable,live\n0,1,1\n5,2,1\n10,2,0\n");
  auto r = invoke({"plot", (dir / "c.csv").string(), "--plot-format", "gnuplot", "--out-dir", (dir / "p").string()});
  REQUIRE(r.code == kOk);
  std::string gp = slurp(dir / "p/c.gp");
  CHECK(gp.find("$curves") != std::string::npos);
  CHECK(gp.find("dashtype 2") != std::string::npos);
}

TEST_CASE("malformed csv is an input error naming the line") {
  TempDir dir;
  write(dir / "bad.csv", "tick,reachable,live\n0,1,1\n5,x,1\n");
  auto r = invoke({"plot", (dir / "bad.csv").string()});
  CHECK(r.code == kInputError);
  CHECK(r.err.find("line 3") != std::string::npos);
  write(dir / "order.csv", "tick,reachable,live\n5,1,1\n5,1,1\n");
  CHECK(invoke({"plot", (dir / "order.csv").string()}).code == kInputError);
  write(dir / "short.csv", "bin_lo,bin_hi,count\n0,5,1\n");
  CHECK(invoke({"plot", (dir / "short.csv").string()}).code == kInputError);
  write(dir / "what.csv", "a,b\n1,2\n");
  CHECK(invoke({"plot", (dir / "what.csv").string()}).code == kInputError);
  CHECK_FALSE(fs::exists(dir / "bad.svg"));
}

TEST_CASE("run, analyze and plot are byte-reproducible") {
  TempDir a, b;
  for (const TempDir* d : {&a, &b}) {
    REQUIRE(invoke({"run", program("tree-stress.scm"), "--gc-interval", "3", "--log", (*d / "t.draglog").string()}).code == kOk);
    REQUIRE(invoke({"analyze", (*d / "t.draglog").string(), "--out-dir", d->path().string()}).code == kOk);
    REQUIRE(invoke({"plot", (*d / "curves.csv").string(), (*d / "histogram.csv").string()}).code == kOk);
  }
  for (const char* name : {"t.draglog", "report.csv", "curves.csv", "histogram.csv", "report.txt",
                           "curves.svg", "histogram.svg"}) {
    CAPTURE(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
}
