#include <benchmark/benchmark.h>

#include "unishrink/precision_gibbs.hpp"
#include "unishrink/priors.hpp"
#include "unishrink/sim_bench.hpp"
#include "unishrink/truncated.hpp"

using namespace unishrink;

namespace {

void BM_Sweep(benchmark::State& state) {
  const auto p = static_cast<std::size_t>(state.range(0));
  const bool fresh = state.range(1) != 0;
  const TruthModel truth = generate_truth(ModelSpec{1, p, -1.0, 1});
  const SuffStats stats = SuffStats::from_data(sample_data(truth.sigma, 2 * p, 1));
  ConstraintLedger ledger(p);
  ledger.set_graph(Graph::complete(p));
  SweepOptions options;
  options.solver = fresh ? BlockSolver::FreshCholesky : BlockSolver::RunningInverse;
  PrecisionSampler sampler(ledger, PriorSpec::exponential_power(0.2), GammaOnInversePowerQ{1.0, 0.1},
                           options);
  Rng rng = make_stream(1);
  GibbsState gibbs = sampler.initial_state(stats, std::nullopt, rng);
  for (auto _ : state) {
    sampler.sweep(gibbs, rng);
    benchmark::DoNotOptimize(gibbs.omega.data());
  }
  state.SetLabel(fresh ? "fresh cholesky" : "running inverse");
}
BENCHMARK(BM_Sweep)->Args({10, 0})->Args({30, 0})->Args({10, 1})->Args({30, 1})->Unit(benchmark::kMicrosecond);

void BM_TruncatedNormalCentral(benchmark::State& state) {
  Rng rng = make_stream(2);
  const IntervalSet region(Interval{-0.5, 1.0});
  for (auto _ : state) benchmark::DoNotOptimize(truncated_normal(0.0, 1.0, region, rng));
}
BENCHMARK(BM_TruncatedNormalCentral);

void BM_TruncatedNormalTail(benchmark::State& state) {
  Rng rng = make_stream(3);
  const IntervalSet region(Interval{6.0, std::numeric_limits<double>::infinity()});
  for (auto _ : state) benchmark::DoNotOptimize(truncated_normal(0.0, 1.0, region, rng));
}
BENCHMARK(BM_TruncatedNormalTail);

void BM_TruncatedGamma(benchmark::State& state) {
  Rng rng = make_stream(4);
  for (auto _ : state) benchmark::DoNotOptimize(truncated_gamma(17.0, 9.0, Interval{0.5, 2.5}, rng));
}
BENCHMARK(BM_TruncatedGamma);

void BM_LatentScale(benchmark::State& state) {
  const PriorSpec specs[] = {PriorSpec::exponential_power(0.2), PriorSpec::student_t(3.0),
                             PriorSpec::generalized_double_pareto(1.0), PriorSpec::logarithmic()};
  const PriorSpec& spec = specs[state.range(0)];
  Rng rng = make_stream(5);
  for (auto _ : state) benchmark::DoNotOptimize(sample_latent_scale(spec, 0.3, rng));
  state.SetLabel(spec.label());
}
BENCHMARK(BM_LatentScale)->DenseRange(0, 3);

}  // namespace

BENCHMARK_MAIN();
