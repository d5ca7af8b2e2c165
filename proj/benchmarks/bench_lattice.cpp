#include <benchmark/benchmark.h>

#include "coulomb/lattice.hpp"
#include "coulomb/renormalized.hpp"

using namespace coulomb;

static void BM_GreenValue(benchmark::State& state) {
    const lattice::EwaldGreen G(state.range(0) == 2 ? lattice::Lattice::triangular() : lattice::Lattice::body_centered_cubic());
    Vec3 x{0.21, 0.37, state.range(0) == 3 ? 0.13 : 0.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(G.value(x));
        x[0] += 1e-9;
    }
}
BENCHMARK(BM_GreenValue)->Arg(2)->Arg(3);

static void BM_GreenSetup(benchmark::State& state) {
    const auto L = state.range(0) == 2 ? lattice::Lattice::square() : lattice::Lattice::face_centered_cubic();
    for (auto _ : state) benchmark::DoNotOptimize(lattice::EwaldGreen(L).self_constant());
}
BENCHMARK(BM_GreenSetup)->Arg(2)->Arg(3);

static void BM_PeriodicW(benchmark::State& state) {
    const auto L = lattice::Lattice::triangular().supercell({static_cast<int>(state.range(0)), static_cast<int>(state.range(0)), 1});
    for (auto _ : state) benchmark::DoNotOptimize(renorm::periodic_w(L).value);
}
BENCHMARK(BM_PeriodicW)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_EpsteinZeta(benchmark::State& state) {
    const auto L = lattice::Lattice::square();
    for (auto _ : state) benchmark::DoNotOptimize(lattice::epstein_zeta(L, 3.0));
}
BENCHMARK(BM_EpsteinZeta);

static void BM_LatticeScan(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(renorm::lattice_scan(1.0, static_cast<int>(state.range(0))).w_min);
}
BENCHMARK(BM_LatticeScan)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
