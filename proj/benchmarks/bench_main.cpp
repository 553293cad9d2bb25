#include <benchmark/benchmark.h>

#include "pcdm/datagen.hpp"
#include "pcdm/eso.hpp"
#include "pcdm/sampling.hpp"
#include "pcdm/solver.hpp"

using namespace pcdm;

namespace {

const CompositeProblem& bench_lasso() {
  static const CompositeProblem p = [] {
    LassoOptions opt;
    opt.n = 20000;
    opt.m = 40000;
    opt.nnz_per_col = 20;
    opt.support_size = 2000;
    opt.lambda = 0.1;
    opt.seed = 11;
    return make_lasso_problem(generate_lasso(opt));
  }();
  return p;
}

SamplingLaw law_for(int kind, std::size_t tau) {
  switch (kind) {
    case 0: return SamplingLaw::serial();
    case 1: return SamplingLaw::nice(tau);
    case 2: return SamplingLaw::independent(tau);
    case 3: return SamplingLaw::binomial(tau, 0.5);
    default: return SamplingLaw::fully_parallel();
  }
}

void BM_Draw(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto tau = static_cast<std::size_t>(state.range(2));
  const auto law = law_for(static_cast<int>(state.range(1)), tau);
  Sampler sampler(law, n);
  std::vector<std::size_t> out;
  std::uint64_t k = 0;
  for (auto _ : state) {
    Rng rng(1, k++);
    sampler.draw(rng, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetLabel(law.describe());
}
BENCHMARK(BM_Draw)
    ->Args({1000000, 0, 1})
    ->Args({1000000, 1, 16})
    ->Args({1000000, 1, 4096})
    ->Args({1000000, 2, 16})
    ->Args({1000000, 3, 16})
    ->Args({10000, 4, 1});

void BM_Step(benchmark::State& state) {
  const auto& p = bench_lasso();
  SolverConfig cfg{SamplingLaw::nice(static_cast<std::size_t>(state.range(0)))};
  cfg.threads = static_cast<std::size_t>(state.range(1));
  cfg.variant = state.range(2) ? Variant::Pcdm2 : Variant::Pcdm1;
  Solver solver(p, cfg);
  for (auto _ : state) solver.step();
  state.counters["blocks/s"] =
      benchmark::Counter(static_cast<double>(state.iterations() * state.range(0)), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Step)
    ->ArgNames({"tau", "threads", "pcdm2"})
    ->Args({1, 0, 0})
    ->Args({16, 0, 0})
    ->Args({256, 0, 0})
    ->Args({256, 2, 0})
    ->Args({256, 4, 0})
    ->Args({256, 0, 1})
    ->Args({4096, 0, 0})
    ->Args({4096, 4, 0});

void BM_EsoCheck(benchmark::State& state) {
  const auto& p = bench_lasso();
  const auto law = SamplingLaw::nice(64);
  const auto eso = eso_for(law, p);
  const std::vector<double> x(p.num_coords(), 0.0), h(p.num_coords(), 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(check_eso_at(p, law, eso, x, h, 1000, 3));
}
BENCHMARK(BM_EsoCheck)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
