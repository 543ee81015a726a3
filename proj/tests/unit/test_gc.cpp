#include <doctest.h>

#include <algorithm>

#include "dragprof/errors.hpp"
#include "dragprof/gc.hpp"
#include "oracles.hpp"

using namespace dragprof;

namespace {

struct Fixture {
  Heap heap{64};
  Profiler profiler;
  std::vector<Value> roots;
  RootSource source = [this](SlotVisitor& v) {
    for (Value& r : roots) v.visit(r);
  };

  Value pair(Value a, Value b) {
    Value p = heap.allocate_pair(a, b);
    profiler.record_creation(p.id(), ObjKind::Pair, 2);
    return p;
  }
  Value vec(std::int64_t n, Value fill) {
    Value v = heap.allocate_vector(n, fill);
    profiler.record_creation(v.id(), ObjKind::Vector, static_cast<std::uint32_t>(n));
    return v;
  }
  CollectionStats gc(std::vector<LifetimeRecord>* flushed = nullptr) {
    return collect(heap, profiler, source, profiler.now(), Trigger::Manual, flushed);
  }
};

std::vector<ObjId> sorted_resident(const Heap& h) {
  auto ids = h.resident();
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

TEST_CASE("unrooted objects are collected and flushed at the clock") {
  Fixture f;
  Value keep = f.pair(Value::number(1), Value::nil());
  f.pair(Value::number(2), Value::nil());
  f.roots.push_back(keep);
  std::vector<LifetimeRecord> flushed;
  CollectionStats s = f.gc(&flushed);
  CHECK(s.survivors == 1);
  CHECK(s.collected == 1);
  CHECK(s.slots_copied == 2);
  REQUIRE(flushed.size() == 1);
  CHECK(flushed[0].id == 1);
  CHECK(flushed[0].collect_tick == 2);
  CHECK(f.heap.used_slots() == 2);
  CHECK_FALSE(f.heap.is_live(1));
  CHECK(f.heap.read_slot(f.roots[0], 0).as_number() == 1);
}

TEST_CASE("cycles and shared structure survive intact") {
  Fixture f;
  Value a = f.pair(Value::nil(), Value::nil());
  Value b = f.pair(a, Value::nil());
  f.heap.write_slot(a, 1, b);  // a <-> b cycle
  Value shared = f.vec(2, a);  // both slots point at a
  f.roots = {shared, b};
  std::string before = canonical_form(f.heap, f.source);
  f.gc();
  CHECK(canonical_form(f.heap, f.source) == before);
  CHECK(sorted_resident(f.heap) == std::vector<ObjId>{0, 1, 2});
  Value a2 = f.heap.read_slot(f.roots[0], 0);
  CHECK(a2 == f.heap.read_slot(f.roots[0], 1));
  CHECK(f.heap.read_slot(f.heap.read_slot(a2, 1), 0) == a2);
}

TEST_CASE("roots are rewritten to the new addresses") {
  Fixture f;
  f.pair(Value::nil(), Value::nil());  // garbage ahead of the survivor
  Value p = f.pair(Value::number(9), Value::nil());
  f.roots = {p};
  Address before = f.roots[0].address();
  f.gc();
  CHECK(f.roots[0].address() != before);
  CHECK(f.roots[0].address() == f.heap.address_of(p.id()));
  CHECK(f.heap.read_slot(f.roots[0], 0).as_number() == 9);
}

TEST_CASE("zero-length vectors are copied") {
  Fixture f;
  Value e = f.vec(0, Value::nil());
  Value holder = f.pair(e, e);
  f.roots = {holder};
  f.gc();
  CHECK(f.heap.is_live(e.id()));
  CHECK(f.heap.size_of(f.heap.read_slot(f.roots[0], 0)) == 0);
}

TEST_CASE("repeated collections keep survivors and reuse both spaces") {
  Fixture f;
  Value list = Value::nil();
  for (int i = 0; i < 10; ++i) list = f.pair(Value::number(i), list);
  f.roots = {list};
  for (int round = 0; round < 5; ++round) {
    f.pair(Value::nil(), Value::nil());
    f.gc();
    CHECK(f.heap.live_objects() == 10);
    CHECK(f.heap.used_slots() == 20);
  }
}

TEST_CASE("reachability oracle follows refs through vectors and pairs") {
  Fixture f;
  Value inner = f.pair(Value::number(1), Value::nil());
  Value v = f.vec(3, Value::number(0));
  f.heap.write_slot(v, 2, inner);
  f.pair(Value::nil(), Value::nil());
  f.roots = {v};
  CHECK(reachability_oracle(f.heap, f.source) == std::vector<ObjId>{0, 1});
}

TEST_CASE("canonical form distinguishes different graphs") {
  Fixture f;
  Value a = f.pair(Value::number(1), Value::nil());
  f.roots = {a};
  std::string one = canonical_form(f.heap, f.source);
  f.heap.write_slot(a, 0, Value::number(2));
  CHECK(canonical_form(f.heap, f.source) != one);
}

TEST_CASE("randomized mutation programs match the oracle") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    testing::MutationConfig cfg;
    cfg.seed = seed;
    cfg.max_objects = 200;
    cfg.gc_interval = 1 + seed % 16;
    cfg.heap_slots = 512 + (seed % 4) * 512;
    auto run = testing::run_random_mutation(cfg);
    INFO("seed " << seed);
    CHECK(run.failures.empty());
    CHECK(run.collections > 0);
  }
}

TEST_CASE("small heaps force exhaustion collections") {
  std::size_t exhaustion = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    testing::MutationConfig cfg;
    cfg.seed = seed;
    cfg.gc_interval = 1000000;
    cfg.heap_slots = 160;
    cfg.max_objects = 300;
    auto run = testing::run_random_mutation(cfg);
    INFO("seed " << seed);
    CHECK(run.failures.empty());
    exhaustion += run.exhaustion_collections;
  }
  CHECK(exhaustion > 0);
}
