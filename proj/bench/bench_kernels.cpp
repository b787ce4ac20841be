// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "oodlab/harness.hpp"
#include "oodlab/numerics.hpp"

using namespace oodlab;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed, "bench");
  Matrix m(r, c);
  for (auto& v : m.values) v = rng.normal();
  return m;
}

void BM_MatmulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 64, 1), b = random_matrix(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_serial(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * 64 * 64));
}

void BM_MatmulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 64, 1), b = random_matrix(64, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n * 64 * 64));
}

void BM_Forward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const std::vector<std::size_t> dims{2, 64, 64, 3};
  const MlpModel model = MlpModel::glorot(dims, 3, rng);
  const Matrix x = random_matrix(n, 2, 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward(model, x));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n));
}

void run_small_sweep(benchmark::State& state, bool parallel) {
  ExperimentConfig base = default_config();
  base.iterations = 200;
  const std::vector<MethodSpec> methods{MethodSpec::parse("aux"), MethodSpec::parse("diversemix")};
  const std::vector<std::size_t> ks{10};
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  for (auto _ : state) benchmark::DoNotOptimize(run_sweep(base, methods, ks, seeds, parallel));
}

void BM_SweepSerial(benchmark::State& state) { run_small_sweep(state, false); }
void BM_SweepParallel(benchmark::State& state) { run_small_sweep(state, true); }

}  // namespace

BENCHMARK(BM_MatmulSerial)->Arg(256)->Arg(4096)->Arg(65536);
BENCHMARK(BM_MatmulParallel)->Arg(256)->Arg(4096)->Arg(65536);
BENCHMARK(BM_Forward)->Arg(256)->Arg(65536);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond)->Iterations(1);

BENCHMARK_MAIN();
