#include <benchmark/benchmark.h>

#include "opkrr/discrete_oracle.hpp"
#include "opkrr/experiments.hpp"
#include "opkrr/rkhs.hpp"

namespace {

using opkrr::Execution;

opkrr::KernelPtr bench_kernel(opkrr::Index d) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(d, d);
  t(0, d - 1) = t(d - 1, 0) = d > 1 ? 0.3 : 1.0;
  return opkrr::make_separable_kernel(opkrr::ScalarKernel(opkrr::KernelFamily::gaussian, 1.0), t);
}

opkrr::Points random_points(opkrr::Index p, opkrr::Index n, std::uint64_t seed) {
  auto rng = opkrr::make_stream(seed);
  std::normal_distribution<double> normal;
  opkrr::Points xs(p, n);
  for (opkrr::Index i = 0; i < xs.size(); ++i) xs.data()[i] = normal(rng);
  return xs;
}

opkrr::KernelExpansion random_expansion(opkrr::Index n, std::uint64_t seed) {
  const opkrr::Index d = 3;
  auto coeffs = random_points(d, n, seed + 1);
  return {bench_kernel(d), random_points(4, n, seed), coeffs};
}

Execution exec_of(const benchmark::State& state) {
  return state.range(1) == 0 ? Execution::serial : Execution::parallel;
}

void BM_GramBlocks(benchmark::State& state) {
  const auto kernel = bench_kernel(3);
  const auto xs = random_points(4, state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(opkrr::gram_blocks(*kernel, xs, exec_of(state)));
}

void BM_Evaluate(benchmark::State& state) {
  const auto f = random_expansion(state.range(0), 2);
  const auto xs = random_points(4, state.range(0), 3);
  for (auto _ : state) benchmark::DoNotOptimize(f.evaluate(xs, exec_of(state)));
}

void BM_HInner(benchmark::State& state) {
  const auto f = random_expansion(state.range(0), 4);
  const auto g = random_expansion(state.range(0), 5);
  for (auto _ : state) benchmark::DoNotOptimize(opkrr::h_inner(f, g, exec_of(state)));
}

void BM_Trials(benchmark::State& state) {
  const auto kernel = bench_kernel(2);
  auto rng = opkrr::make_stream(6);
  const auto member = opkrr::random_well_specified(kernel, 5, 2, opkrr::NoiseLaw::isotropic_gaussian(0.2), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        opkrr::excess_risk_trials(member.population, kernel, state.range(0), 0.1, 32, 7, 0, exec_of(state)));
  }
}

// Second argument: 0 = serial reference, 1 = OpenMP.
BENCHMARK(BM_GramBlocks)->ArgsProduct({{100, 400}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Evaluate)->ArgsProduct({{200, 800}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HInner)->ArgsProduct({{200, 800}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Trials)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
