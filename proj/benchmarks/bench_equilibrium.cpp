#include <benchmark/benchmark.h>

#include "coulomb/equilibrium.hpp"

using namespace coulomb;

static void BM_RadialEquilibrium(benchmark::State& state) {
    eq::GridSpec g;
    g.spacing = 1.0 / static_cast<double>(state.range(0));
    const auto V = Potential::quadratic(static_cast<int>(state.range(1)));
    for (auto _ : state) benchmark::DoNotOptimize(eq::solve_equilibrium_measure(V, g).total_mass());
}
BENCHMARK(BM_RadialEquilibrium)->Args({128, 2})->Args({1024, 2})->Args({128, 3})->Unit(benchmark::kMillisecond);

static void BM_CartesianEquilibrium(benchmark::State& state) {
    eq::GridSpec g;
    g.spacing = 1.0 / static_cast<double>(state.range(0));
    g.use_radial_symmetry = false;
    const auto V = Potential::quadratic(2);
    for (auto _ : state) benchmark::DoNotOptimize(eq::solve_equilibrium_measure(V, g).total_mass());
}
BENCHMARK(BM_CartesianEquilibrium)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Meissner(benchmark::State& state) {
    eq::PlanarGrid g;
    g.spacing = 1.0 / static_cast<double>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(eq::solve_meissner_h0(eq::Domain::disk(), g).lambda_omega);
}
BENCHMARK(BM_Meissner)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

static void BM_Obstacle(benchmark::State& state) {
    eq::PlanarGrid g;
    g.spacing = 1.0 / 50.0;
    const double lambda = static_cast<double>(state.range(0)) * eq::disk_lambda_omega_exact();
    for (auto _ : state) benchmark::DoNotOptimize(eq::solve_gl_obstacle(lambda, eq::Domain::disk(), g).coverage);
}
BENCHMARK(BM_Obstacle)->Arg(2)->Arg(10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
