#include <benchmark/benchmark.h>

#include <gcsit/channel.hpp>
#include <gcsit/harness.hpp>
#include <gcsit/ia.hpp>
#include <gcsit/perturbation.hpp>
#include <gcsit/quantizer.hpp>

using namespace gcsit;

static void BM_QuantizeStack(benchmark::State& state) {
  const int bits = static_cast<int>(state.range(0));
  const Codebook cb = build_rvq_codebook(6, 5, bits, 1);
  Rng rng(2);
  const GrassmannPoint f = haar_truncated_unitary(6, 5, rng);
  for (auto _ : state) benchmark::DoNotOptimize(quantize(f, cb).index);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cb.size()));
}
BENCHMARK(BM_QuantizeStack)->Arg(10)->Arg(15);

static void BM_QuantizePrecoder(benchmark::State& state) {
  const Codebook cb = build_rvq_codebook(5, 2, static_cast<int>(state.range(0)), 1);
  Rng rng(3);
  const GrassmannPoint v = haar_truncated_unitary(5, 2, rng);
  for (auto _ : state) benchmark::DoNotOptimize(quantize(v, cb).index);
  state.SetItemsProcessed(state.iterations() * static_cast<long>(cb.size()));
}
BENCHMARK(BM_QuantizePrecoder)->Arg(12)->Arg(18);

static void BM_BuildCodebook(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_rvq_codebook(5, 2, static_cast<int>(state.range(0)), 4));
  }
}
BENCHMARK(BM_BuildCodebook)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_SolveIa(benchmark::State& state) {
  const SystemDims dims{3, 5, 3, 2};
  Rng rng(5);
  std::vector<std::vector<GrassmannPoint>> inputs;
  for (int t = 0; t < 16; ++t) {
    const ChannelSet cs = generate_channel_set(dims, rng);
    std::vector<GrassmannPoint> f;
    for (int j = 0; j < 3; ++j) f.push_back(qr_orthonormal_factor(stacked_interference_matrix(cs, j)).q);
    inputs.push_back(std::move(f));
  }
  SolverOptions opt;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_ia(inputs[k++ % inputs.size()], dims, opt, rng).residual);
  }
}
BENCHMARK(BM_SolveIa)->Unit(benchmark::kMicrosecond);

static void BM_Perturb(benchmark::State& state) {
  Rng rng(6);
  const GrassmannPoint f = haar_truncated_unitary(6, 5, rng);
  const GrassmannPoint v = haar_truncated_unitary(5, 2, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(perturb_subspace(f, 0.1, rng).result);
    benchmark::DoNotOptimize(perturb_subspace(v, 0.1, rng).result);
  }
}
BENCHMARK(BM_Perturb);

static void BM_TrialPerfectCsi(benchmark::State& state) {
  SimConfig cfg;
  cfg.snr_grid = {0, 10, 20, 30, 40};
  cfg.trials = 10;
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg).curve.points.size());
  state.SetItemsProcessed(state.iterations() * cfg.trials);
}
BENCHMARK(BM_TrialPerfectCsi)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
