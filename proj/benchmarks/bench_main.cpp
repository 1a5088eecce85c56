#include <benchmark/benchmark.h>

#include <vector>

#include "lipmab/env.hpp"
#include "lipmab/harness.hpp"
#include "lipmab/instances.hpp"
#include "lipmab/orchestrator.hpp"
#include "lipmab/phase3.hpp"
#include "lipmab/rng.hpp"
#include "lipmab/seating.hpp"

using namespace lipmab;

namespace {

void BM_ResolveRound(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const PartitionGeometry g(2, 0.125);
  const Instance inst = linear_instance(2);
  Rng rng(1);
  std::vector<Point> actions(n, Point(2));
  for (auto _ : state) {
    for (Point& a : actions) {
      a[0] = rng.uniform01();
      a[1] = rng.uniform01();
    }
    benchmark::DoNotOptimize(resolve_round(CollisionModel::partition(), &g, inst, actions, rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ResolveRound)->Arg(2)->Arg(8)->Arg(64);

void BM_ZoomStep(benchmark::State& state) {
  const Arena arena = Arena::from_partition(PartitionGeometry(1, 0.25));
  const Instance inst = suite_cone_instance();
  ZoomLearner zl(arena.region(1), inst.lipschitz(), 0.25, 0.5);
  Rng rng(2);
  for (auto _ : state) {
    const std::size_t i = zl.choose();
    zl.update(i, PlayerOutcome{false, rng.bernoulli(inst.mean(zl.point(i))) ? 1.0 : 0.0});
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ZoomStep);

void BM_Seating(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<std::size_t> targets(n);
  for (std::size_t i = 0; i < n; ++i) targets[i] = i;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_until_seated(targets, ++seed));
}
BENCHMARK(BM_Seating)->Arg(8)->Arg(64);

// Whole runs, so the per-round cost of each phase shows up in items/s.
void BM_RunLinear(benchmark::State& state) {
  ProtocolConfig c;
  c.n_players = static_cast<std::size_t>(state.range(0));
  c.d = 1;
  c.h = 0.25;
  c.instance.kind = "linear";
  c.epsilon = 0.5;
  c.dither = false;
  c.horizon = 200'000;
  c.ledger_stride = 1000;
  for (auto _ : state) {
    ++c.seed;
    benchmark::DoNotOptimize(run_protocol(c));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.horizon));
}
BENCHMARK(BM_RunLinear)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AggregatedPhase2(benchmark::State& state) {
  ProtocolConfig c;
  c.n_players = 1;
  c.d = 1;
  c.h = 0.5;
  c.instance.kind = "pathology";
  c.epsilon = 0.02;
  c.dither = false;
  c.horizon = std::uint64_t{1} << 40;
  RunOptions o;
  o.stop_after = StopAfter::Selection;
  o.aggregate_solo_phase2 = true;
  for (auto _ : state) {
    ++c.seed;
    benchmark::DoNotOptimize(run_protocol(c, o));
  }
}
BENCHMARK(BM_AggregatedPhase2)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mc_oracle("drift", {{"u", 8}, {"N", 16}}, 10'000, ++seed));
  }
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
