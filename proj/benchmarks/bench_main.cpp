#include "synthetic.hpp"

#include <putput/putput.hpp>

#include <benchmark/benchmark.h>

#include <map>

using namespace putput;

namespace {

struct Fixture {
  testing::Synthetic syn;
  ProbCircuit pc;
};

// One learned mixture per (rows, k), built once per process.
const Fixture& fixture(std::size_t rows, std::size_t k) {
  static std::map<std::pair<std::size_t, std::size_t>, Fixture> cache;
  auto [it, fresh] = cache.try_emplace({rows, k});
  if (fresh) {
    testing::SyntheticOptions o;
    o.rows = rows;
    o.rows_per_concept = rows / 5;
    it->second.syn = testing::make_synthetic(77, o);
    MixtureConfig mc;
    mc.k = k;
    mc.em_iters = 20;
    it->second.pc = learn_mixture(it->second.syn.db, it->second.syn.positives, mc);
  }
  return it->second;
}

void BM_LogLikelihoods(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(log_likelihoods(f.pc, f.syn.db));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogLikelihoods)->Arg(500)->Arg(5000);

void BM_CoveredRows(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)), 8);
  for (auto _ : state) benchmark::DoNotOptimize(covered_rows(f.pc, f.syn.db.columns()));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CoveredRows)->Arg(500)->Arg(5000);

void BM_FlowScores(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)), 8);
  const ExampleSet all = f.syn.db.all();
  for (auto _ : state) benchmark::DoNotOptimize(flow_scores(f.pc, f.syn.db, all));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FlowScores)->Arg(500)->Arg(5000);

void BM_Step1Flows(benchmark::State& state) {
  const auto& f = fixture(500, 8);
  for (auto _ : state)
    benchmark::DoNotOptimize(step1_search(f.pc, f.syn.db, f.syn.concept_rows, PruneMethod::Flows));
}
BENCHMARK(BM_Step1Flows)->Unit(benchmark::kMillisecond);

void BM_FitMixture(benchmark::State& state) {
  const auto& f = fixture(500, 8);
  MixtureConfig mc;
  mc.k = static_cast<std::size_t>(state.range(0));
  mc.em_iters = 20;
  const ExampleSet all = f.syn.db.all();
  for (auto _ : state) benchmark::DoNotOptimize(fit_mixture(f.syn.db, all, mc));
}
BENCHMARK(BM_FitMixture)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
