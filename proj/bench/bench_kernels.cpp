// Serial reference kernels against their OpenMP counterparts.
// The second benchmark argument is the worker count (0 = serial reference).
#include <benchmark/benchmark.h>

#include "cmjlab/cmj.hpp"
#include "cmjlab/distributions.hpp"
#include "cmjlab/parallel.hpp"
#include "cmjlab/recursive_tree.hpp"
#include "cmjlab/renewal.hpp"

using namespace cmjlab;

namespace {

const IncrementDistribution& gamma22() {
  static const IncrementDistribution d = make_distribution("gamma(2,2)");
  return d;
}

void BM_RenewalGrid(benchmark::State& state) {
  const double T = static_cast<double>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  if (workers > 0) set_workers(workers);
  for (auto _ : state) {
    RenewalTable t = workers > 0 ? renewal_function_grid(gamma22(), T, 0.01)
                                 : serial::renewal_function_grid(gamma22(), T, 0.01);
    benchmark::DoNotOptimize(t.level(t.k_max()).back());
  }
}

void BM_HigherRenewal(benchmark::State& state) {
  const double T = static_cast<double>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  if (workers > 0) set_workers(workers);
  const RenewalTable base = serial::renewal_function_grid(gamma22(), T, 0.01);
  for (auto _ : state) {
    RenewalTable t = base;
    if (workers > 0) {
      higher_renewal_grid(t, 4);
    } else {
      serial::higher_renewal_grid(t, 4);
    }
    benchmark::DoNotOptimize(t.level(t.k_max()).back());
  }
}

void BM_TreeReplicates(benchmark::State& state) {
  const auto reps = static_cast<std::size_t>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  if (workers > 0) set_workers(workers);
  auto fn = [](RngStream& rng, std::size_t) {
    return profile(generate_rrt(10000, rng)).counts.size();
  };
  for (auto _ : state) {
    auto out = workers > 0 ? run_replicates(reps, 42, fn) : serial::run_replicates(reps, 42, fn);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_CmjReplicates(benchmark::State& state) {
  const auto reps = static_cast<std::size_t>(state.range(0));
  const int workers = static_cast<int>(state.range(1));
  if (workers > 0) set_workers(workers);
  auto fn = [](RngStream& rng, std::size_t) {
    return count_generation(simulate_cmj(gamma22(), 50.0, 2, rng), 2, 50.0);
  };
  for (auto _ : state) {
    auto out = workers > 0 ? run_replicates(reps, 42, fn) : serial::run_replicates(reps, 42, fn);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_RenewalGrid)->ArgsProduct({{50, 200}, {0, 1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_HigherRenewal)->ArgsProduct({{50, 200}, {0, 1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TreeReplicates)->ArgsProduct({{256}, {0, 1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CmjReplicates)->ArgsProduct({{256}, {0, 1, 2, 4}})->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
