#include <benchmark/benchmark.h>

#include <cmath>

#include "cpfsim/exec.hpp"
#include "cpfsim/qmat.hpp"
#include "cpfsim/random_ops.hpp"
#include "cpfsim/stochastic.hpp"

namespace {

using cpfsim::Exec;

void BM_Matmul(benchmark::State& state, Exec exec) {
  const auto d = static_cast<std::size_t>(state.range(0));
  cpfsim::randgen::Rng rng(1);
  const auto a = cpfsim::randgen::gaussian_matrix(d, d, rng);
  const auto b = cpfsim::randgen::gaussian_matrix(d, d, rng);
  for (auto _ : state) {
    auto c = exec == Exec::serial ? cpfsim::qmat::matmul_reference(a, b) : cpfsim::qmat::matmul(a, b, exec);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(d * d * d));
}

void BM_Ensemble(benchmark::State& state, Exec exec) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto noise = cpfsim::stochastic::NoiseModel::ou(1.0, 1.0);
  const double bps[] = {0.0, 1.0, 2.0};
  const auto grid = std::make_shared<const cpfsim::stochastic::TimeGrid>(bps, noise.default_step());
  for (auto _ : state) {
    auto stats = cpfsim::stochastic::run_ensemble(
        n, 2,
        [&](std::uint64_t i, std::span<double> row) {
          const auto traj = cpfsim::stochastic::sample_trajectory(noise, grid, 7, i);
          row[0] = std::cos(2.0 * traj.window_phase(0));
          row[1] = std::cos(2.0 * traj.window_phase(1));
        },
        exec);
    benchmark::DoNotOptimize(stats);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long long>(n));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Matmul, serial, Exec::serial)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Matmul, parallel, Exec::parallel)->Arg(64)->Arg(256);
BENCHMARK_CAPTURE(BM_Ensemble, serial, Exec::serial)->Arg(10000);
BENCHMARK_CAPTURE(BM_Ensemble, parallel, Exec::parallel)->Arg(10000);

BENCHMARK_MAIN();
