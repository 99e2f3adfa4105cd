#include <benchmark/benchmark.h>

#include "tda/harness.hpp"

using namespace tda;

namespace {

MarketContext d1_context(std::size_t n) {
  const double horizon = 2000.0, lambda = static_cast<double>(n) / horizon;
  const auto curve = DiscountCurve::preset(CurveKind::D1, horizon, lambda);
  return MarketContext::build(curve, 2.0, lambda, horizon, 1.0, preset_distribution(ValuationPreset::Uni, n));
}

// One replication of a mechanism on a D1 / Uni stream.
void run_mechanism_once(benchmark::State& state, const char* name) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ctx = d1_context(n);
  const auto factory = make_mechanism_factory(name, ctx);
  auto mech = factory();
  const auto values = sample_valuations(ValuationPreset::Uni, n, 1);
  const auto stream = make_stream(values, ctx.grid_t, ctx.grid_d);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    RandomCoins coins(++seed);
    benchmark::DoNotOptimize(run_mechanism(*mech, stream, coins, false).revenue);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_MR(benchmark::State& s) { run_mechanism_once(s, "m_r"); }
void BM_MW(benchmark::State& s) { run_mechanism_once(s, "m_w"); }
void BM_MD(benchmark::State& s) { run_mechanism_once(s, "m_d"); }
void BM_Vickrey(benchmark::State& s) { run_mechanism_once(s, "vickrey"); }

void BM_ExpectedMR(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ctx = d1_context(n);
  auto mech = make_mechanism_factory("m_r", ctx)();
  const auto values = sample_valuations(ValuationPreset::Uni, n, 1);
  const auto stream = make_stream(values, ctx.grid_t, ctx.grid_d);
  for (auto _ : state) benchmark::DoNotOptimize(expected_revenue(*mech, stream));
}

void BM_DynamicSchedule(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto ctx = d1_context(n);
  const auto dist = ValuationDistribution::normal(100.0, 20.0);
  for (auto _ : state) benchmark::DoNotOptimize(dynamic_reservation_schedule(dist, ctx.grid_t, ctx.grid_d).R.back());
}

void BM_Partition(benchmark::State& state) {
  const auto n = static_cast<double>(state.range(0));
  const auto curve = DiscountCurve::preset(CurveKind::D2, 2000.0, n / 2000.0);
  for (auto _ : state) benchmark::DoNotOptimize(partition_curve(curve, 2.0, n / 2000.0).reserved);
}

void BM_ExperimentCell(benchmark::State& state) {
  ExperimentConfig cfg;
  cfg.mechanisms = {"m_r", "m_w"};
  cfg.n_values = {static_cast<std::size_t>(state.range(0))};
  cfg.reps = 100;
  cfg.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg).cells.size());
}

}  // namespace

BENCHMARK(BM_MR)->Arg(1000)->Arg(5000);
BENCHMARK(BM_MW)->Arg(1000)->Arg(5000);
BENCHMARK(BM_MD)->Arg(1000)->Arg(5000);
BENCHMARK(BM_Vickrey)->Arg(1000)->Arg(5000);
BENCHMARK(BM_ExpectedMR)->Arg(1000)->Arg(5000);
BENCHMARK(BM_DynamicSchedule)->Arg(1000)->Arg(5000);
BENCHMARK(BM_Partition)->Arg(1000)->Arg(5000);
BENCHMARK(BM_ExperimentCell)->Arg(1000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
