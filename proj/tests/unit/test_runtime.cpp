#include <doctest.h>

#include <random>

#include "dragprof/errors.hpp"
#include "dragprof/runtime.hpp"
#include "oracles.hpp"

using namespace dragprof;

namespace {

struct Rooted {
  std::vector<Value> roots;
  RootSource source() {
    return [this](SlotVisitor& v) {
      for (Value& r : roots) v.visit(r);
    };
  }
};

}  // namespace

TEST_CASE("gc_interval must be positive") {
  Rooted r;
  CHECK_THROWS_AS(Runtime(RuntimeConfig{64, 0}, r.source()), Error);
}

TEST_CASE("interval trigger fires every K events, uses included") {
  Rooted r;
  Runtime rt(RuntimeConfig{256, 3}, r.source());
  r.roots.push_back(rt.alloc_pair(Value::nil(), Value::nil()));  // event 1
  rt.use(r.roots[0]);                                              // event 2
  rt.use(r.roots[0]);                                              // event 3
  CHECK(rt.collections().empty());
  rt.use(r.roots[0]);  // safepoint sees 3 events: collect at tick 3, then tick 4
  REQUIRE(rt.collections().size() == 1);
  CHECK(rt.collections()[0].tick == 3);
  CHECK(rt.collections()[0].trigger == Trigger::Interval);
  CHECK(rt.now() == 4);
}

TEST_CASE("with K = 1 every safepoint after an event collects") {
  Rooted r;
  Runtime rt(RuntimeConfig{256, 1}, r.source());
  for (int i = 0; i < 5; ++i) rt.alloc_pair(Value::nil(), Value::nil());
  CHECK(rt.collections().size() == 4);
  TraceLog log = rt.finish("k1");
  // Each unrooted pair is collected at its own creation tick: drag 0.
  for (const auto& rec : log.records) CHECK(rec.collect_tick == rec.create_tick);
}

TEST_CASE("exhaustion triggers a collection before failing") {
  Rooted r;
  Runtime rt(RuntimeConfig{4, 1000}, r.source());
  for (int i = 0; i < 10; ++i) rt.alloc_pair(Value::nil(), Value::nil());
  CHECK(rt.summary().by_exhaustion > 0);
  CHECK(rt.summary().by_interval == 0);
}

TEST_CASE("out of memory when live data exceeds the semispace") {
  Rooted r;
  Runtime rt(RuntimeConfig{4, 1000}, r.source());
  r.roots.push_back(rt.alloc_pair(Value::nil(), Value::nil()));
  r.roots.push_back(rt.alloc_pair(Value::nil(), Value::nil()));
  CHECK_THROWS_AS(rt.alloc_pair(Value::nil(), Value::nil()), OutOfMemory);
  CHECK_THROWS_AS(rt.alloc_vector(5, Value::nil()), OutOfMemory);
}

TEST_CASE("allocation arguments survive a collection they trigger") {
  Rooted r;
  Runtime rt(RuntimeConfig{6, 1}, r.source());
  Value a = rt.alloc_pair(Value::number(1), Value::nil());
  // `a` is only held by this local; the alloc pins it across the safepoint.
  Value b = rt.alloc_pair(a, Value::nil());
  r.roots.push_back(b);
  rt.collect();
  Value a2 = rt.read_slot(r.roots[0], 0);
  CHECK(a2.id() == a.id());
  CHECK(rt.read_slot(a2, 0).as_number() == 1);
}

TEST_CASE("use of a collected object is a dangling reference") {
  Rooted r;
  Runtime rt(RuntimeConfig{64, 100}, r.source());
  Value a = rt.alloc_pair(Value::nil(), Value::nil());
  rt.collect();
  CHECK_THROWS_AS(rt.use(a), DanglingRef);
}

TEST_CASE("finish runs a final collection and censors only survivors") {
  Rooted r;
  Runtime rt(RuntimeConfig{64, 100}, r.source());
  r.roots.push_back(rt.alloc_pair(Value::nil(), Value::nil()));
  rt.alloc_pair(Value::nil(), Value::nil());
  TraceLog log = rt.finish("fin");
  REQUIRE(log.records.size() == 2);
  CHECK(log.end_tick == 2);
  CHECK(log.header.gc_interval == 100);
  CHECK(log.header.heap_slots == 64);
  CHECK(log.header.source == "fin");
  // Both end at tick 2, so id breaks the tie.
  CHECK(log.records[0].id == 0);
  CHECK(log.records[0].censored);
  CHECK(log.records[1].id == 1);
  CHECK_FALSE(log.records[1].censored);
  CHECK(rt.summary().manual == 1);
  CHECK_THROWS_AS(rt.alloc_pair(Value::nil(), Value::nil()), ProtocolViolation);
}

TEST_CASE("collect trails unreachability by at most K events") {
  for (std::uint64_t k : {1, 2, 4, 16}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      std::vector<Value> roots(6);
      RootSource src = [&roots](SlotVisitor& v) {
        for (Value& x : roots) v.visit(x);
      };
      Runtime rt(RuntimeConfig{8192, k}, src);
      testing::UnreachabilityTracker tracker(rt.root_source());
      rt.set_observer(&tracker);
      std::mt19937_64 rng(seed);
      for (int step = 0; step < 300; ++step) {
        std::size_t i = rng() % roots.size();
        switch (rng() % 4) {
          case 0: roots[i] = rt.alloc_pair(roots[rng() % roots.size()], Value::nil()); break;
          case 1: if (roots[i].is_ref()) rt.use(roots[i]); break;
          case 2: roots[i] = Value::nil(); break;
          case 3: roots[i] = rt.alloc_vector(static_cast<std::int64_t>(rng() % 4), roots[i]); break;
        }
      }
      TraceLog log = rt.finish("bound");
      for (const auto& rec : log.records) {
        if (rec.censored) continue;
        auto it = tracker.first_unreachable.find(rec.id);
        REQUIRE(it != tracker.first_unreachable.end());
        CHECK(rec.collect_tick >= it->second);
        CHECK(rec.collect_tick - it->second <= k);
      }
    }
  }
}
