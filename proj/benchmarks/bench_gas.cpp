#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "coulomb/coulomb_gas.hpp"
#include "coulomb/gibbs.hpp"

using namespace coulomb;

namespace {

gas::PointConfiguration random_points(int n, int d) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    gas::PointConfiguration c;
    c.dim = d;
    for (int i = 0; i < n; ++i) c.points.push_back({u(rng), u(rng), d == 3 ? u(rng) : 0.0});
    return c;
}

}  // namespace

static void BM_Hamiltonian(benchmark::State& state) {
    const auto c = random_points(static_cast<int>(state.range(0)), 2);
    const auto V = Potential::quadratic(2);
    for (auto _ : state) benchmark::DoNotOptimize(gas::hamiltonian(c, V));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Hamiltonian)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oNSquared);

static void BM_Gradient(benchmark::State& state) {
    const auto c = random_points(static_cast<int>(state.range(0)), 3);
    const auto V = Potential::quadratic(3);
    for (auto _ : state) benchmark::DoNotOptimize(gas::gradient(c, V));
}
BENCHMARK(BM_Gradient)->RangeMultiplier(4)->Range(16, 1024);

static void BM_EnergyChange(benchmark::State& state) {
    const auto c = random_points(static_cast<int>(state.range(0)), 2);
    const auto V = Potential::quadratic(2);
    const Vec3 y{0.123, -0.456, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(gibbs::energy_change(c, 0, y, V));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_EnergyChange)->RangeMultiplier(4)->Range(16, 1024)->Complexity(benchmark::oN);

static void BM_Sweep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto V = Potential::quadratic(2);
    auto s = gibbs::ChainState::make(random_points(n, 2), 2.0, 0.5 / std::sqrt(2.0 * n), 3, V);
    for (auto _ : state)
        for (int k = 0; k < n; ++k) gibbs::metropolis_step(s, V);
}
BENCHMARK(BM_Sweep)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

static void BM_Psi6(benchmark::State& state) {
    const auto c = random_points(static_cast<int>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(gibbs::psi6(c));
}
BENCHMARK(BM_Psi6)->Arg(100)->Arg(500)->Unit(benchmark::kMicrosecond);

static void BM_Fekete(benchmark::State& state) {
    gas::MinimizeOptions o;
    o.starts = 1;
    const auto V = Potential::quadratic(2);
    for (auto _ : state) benchmark::DoNotOptimize(gas::minimize_fekete(static_cast<int>(state.range(0)), V, o).energy);
}
BENCHMARK(BM_Fekete)->Arg(29)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_SplittingCheck(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.7, 0.7);
    gas::PointConfiguration c;
    for (int i = 0; i < state.range(0); ++i) c.points.push_back({u(rng), u(rng), 0.0});
    for (auto _ : state) benchmark::DoNotOptimize(gas::splitting_check(c).residual);
}
BENCHMARK(BM_SplittingCheck)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
