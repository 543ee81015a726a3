#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <benchmark/benchmark.h>

#include "dragprof/analyzer.hpp"
#include "dragprof/draglog.hpp"
#include "dragprof/interp.hpp"

using namespace dragprof;

namespace {

std::string program(const std::string& name) {
  std::ifstream in(std::string(DRAGPROF_PROGRAMS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EvalConfig config(std::uint64_t k) {
  EvalConfig c;
  c.runtime.gc_interval = k;
  return c;
}

// Interpretation plus profiling; K controls how often the collector runs.
void BM_RunProgram(benchmark::State& state, const char* name) {
  std::string source = program(name);
  auto k = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) {
    EvalResult r = evaluate(source, config(k));
    benchmark::DoNotOptimize(r.log.records.size());
  }
}
BENCHMARK_CAPTURE(BM_RunProgram, list_stress, "list-stress.scm")->Arg(1)->Arg(16)->Arg(256);
BENCHMARK_CAPTURE(BM_RunProgram, tree_stress, "tree-stress.scm")->Arg(16)->Arg(256);
BENCHMARK_CAPTURE(BM_RunProgram, motiv, "motiv.scm")->Arg(16)->Arg(256);

void BM_TailLoop(benchmark::State& state) {
  std::string source = "(let loop ((i 0)) (if (= i " + std::to_string(state.range(0)) + ") i (loop (+ i 1))))";
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(source, config(16)).log.end_tick);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TailLoop)->Arg(100000);

TraceLog synthetic(std::size_t n) {
  std::mt19937_64 rng(42);
  TraceLog log;
  log.header = {16, 65536, "synthetic"};
  log.end_tick = 10 * n;
  std::uniform_int_distribution<Tick> tick(0, log.end_tick);
  for (std::size_t i = 0; i < n; ++i) {
    Tick a = tick(rng), b = tick(rng), c = tick(rng);
    Tick lo = std::min({a, b, c}), hi = std::max({a, b, c});
    LifetimeRecord r;
    r.id = i;
    r.size_slots = 2;
    r.create_tick = lo;
    r.last_use_tick = a + b + c - lo - hi;
    r.collect_tick = hi;
    log.records.push_back(r);
  }
  std::sort(log.records.begin(), log.records.end(), [](const auto& x, const auto& y) {
    return std::pair(x.collect_tick, x.id) < std::pair(y.collect_tick, y.id);
  });
  return log;
}

void BM_Analyze(benchmark::State& state) {
  TraceLog log = synthetic(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analyze(log).space_time.savings_pct);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Analyze)->Arg(10000)->Arg(1000000);

void BM_DraglogRoundTrip(benchmark::State& state) {
  TraceLog log = synthetic(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    std::istringstream in(to_draglog(log));
    benchmark::DoNotOptimize(read_draglog(in).records.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DraglogRoundTrip)->Arg(100000);

}  // namespace

BENCHMARK_MAIN();
