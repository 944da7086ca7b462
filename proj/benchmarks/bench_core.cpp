#include <benchmark/benchmark.h>

#include "ssmc/graph.hpp"
#include "ssmc/gww.hpp"
#include "ssmc/linalg.hpp"
#include "ssmc/process.hpp"
#include "ssmc/qa.hpp"
#include "ssmc/walkers.hpp"

namespace {

void BM_Expm(benchmark::State& state) {
  auto g = ssmc::make_full_tree(static_cast<int>(state.range(0)));
  std::vector<ssmc::VertexId> support;
  Eigen::MatrixXd h = ssmc::stage_generator(g, 100.0, g.max_depth(), support);
  for (auto _ : state) benchmark::DoNotOptimize(ssmc::expm(-h));
  state.SetLabel(std::to_string(h.rows()) + " vertices");
}
BENCHMARK(BM_Expm)->DenseRange(3, 6);

void BM_StagedExact(benchmark::State& state) {
  auto g = ssmc::make_waterfall(static_cast<int>(state.range(0)));
  auto psi0 = ssmc::Distribution::delta(g.size(), *g.root());
  for (auto _ : state) benchmark::DoNotOptimize(ssmc::run_staged_exact(g, 1e3, psi0));
}
BENCHMARK(BM_StagedExact)->Arg(8)->Arg(12);

void BM_StagedSsmcTrial(benchmark::State& state) {
  auto g = ssmc::make_waterfall(12);
  ssmc::StagedSsmcOptions opts;
  opts.walkers = static_cast<std::size_t>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ssmc::run_staged_ssmc(g, opts, ++seed));
}
BENCHMARK(BM_StagedSsmcTrial)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_NaiveSsmcTrial(benchmark::State& state) {
  auto g = ssmc::make_waterfall(6);
  ssmc::StagedSsmcOptions opts;
  opts.walkers = 16;
  opts.energy = 100.0;
  opts.advance.mode = ssmc::StepMode::naive;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ssmc::run_staged_ssmc(g, opts, ++seed));
}
BENCHMARK(BM_NaiveSsmcTrial)->Unit(benchmark::kMicrosecond);

void BM_GwwTrial(benchmark::State& state) {
  auto g = ssmc::make_comb(24);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        ssmc::run_gww(g, static_cast<std::size_t>(state.range(0)), ssmc::GwwRule::walker_uniform,
                      ++seed));
  }
}
BENCHMARK(BM_GwwTrial)->Arg(64)->Arg(256);

void BM_QaStage(benchmark::State& state) {
  auto g = ssmc::make_comb(static_cast<int>(state.range(0)));
  ssmc::QaOptions opts;
  opts.energy = 10.0;
  opts.stages = 1;
  for (auto _ : state) benchmark::DoNotOptimize(ssmc::qa_staged_run(g, opts));
}
BENCHMARK(BM_QaStage)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
