#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "coulomb/errors.hpp"
#include "coulomb/gibbs.hpp"

using namespace coulomb;
using namespace coulomb::gibbs;

namespace {

constexpr double kPi = std::numbers::pi;

PointConfiguration triangular_patch(double a, double radius) {
    PointConfiguration c;
    const int m = static_cast<int>(radius / a) + 2;
    for (int i = -2 * m; i <= 2 * m; ++i)
        for (int j = -m; j <= m; ++j) {
            const Vec3 p{a * (i + 0.5 * j), a * j * std::sqrt(3.0) / 2.0, 0.0};
            if (norm(p) <= radius) c.points.push_back(p);
        }
    return c;
}

PointConfiguration square_patch(double a, double radius) {
    PointConfiguration c;
    const int m = static_cast<int>(radius / a) + 1;
    for (int i = -m; i <= m; ++i)
        for (int j = -m; j <= m; ++j) {
            const Vec3 p{a * i, a * j, 0.0};
            if (norm(p) <= radius) c.points.push_back(p);
        }
    return c;
}

PointConfiguration uniform_disk(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointConfiguration c;
    for (int i = 0; i < n; ++i) {
        const double r = std::sqrt(u(rng)), t = 2.0 * kPi * u(rng);
        c.points.push_back({r * std::cos(t), r * std::sin(t), 0.0});
    }
    return c;
}

// log Z_2 for V = |x|² in the plane: centre of mass and relative coordinate separate
double log_z2(double beta) {
    return std::log(kPi * kPi / (4.0 * beta)) + std::lgamma(beta + 1.0) - (beta + 1.0) * std::log(beta);
}

}  // namespace

TEST_CASE("acceptance rule") {
    CHECK(acceptance_probability(0.0, 1e300) == 1.0);
    CHECK(acceptance_probability(0.0, std::numeric_limits<double>::infinity()) == 1.0);
    CHECK(acceptance_probability(2.0, std::numeric_limits<double>::infinity()) == 0.0);
    CHECK(acceptance_probability(2.0, -3.0) == 1.0);
    CHECK(acceptance_probability(2.0, 0.5) == doctest::Approx(std::exp(-1.0)));

    const auto V = Potential::quadratic(2);
    std::mt19937_64 rng(3);
    auto s = ChainState::make(uniform_disk(20, rng), 0.0, 0.3, 17, V);
    for (int k = 0; k < 2000; ++k) metropolis_step(s, V);
    CHECK(s.accepted == s.proposed);
    CHECK(s.acceptance() == 1.0);
}

TEST_CASE("incremental energy change") {
    const auto V = Potential::quadratic(2);
    std::mt19937_64 rng(5);
    for (int d : {2, 3}) {
        const auto Vd = Potential::quadratic(d);
        auto c = uniform_disk(40, rng);
        c.dim = d;
        if (d == 3)
            for (auto& p : c.points) p[2] = 0.3 * p[0] - 0.1;
        std::normal_distribution<double> g;
        for (int k = 0; k < 50; ++k) {
            const std::size_t i = rng() % c.size();
            Vec3 y = c.points[i];
            for (int a = 0; a < d; ++a) y[a] += 0.2 * g(rng);
            auto moved = c;
            moved.points[i] = y;
            const double full = gas::hamiltonian(moved, Vd) - gas::hamiltonian(c, Vd);
            CHECK(energy_change(c, i, y, Vd) == doctest::Approx(full).epsilon(1e-9).scale(1.0));
        }
    }
    auto c = uniform_disk(5, rng);
    CHECK(std::isinf(energy_change(c, 0, c.points[3], V)));
}

TEST_CASE("chains are reproducible from the seed") {
    const auto V = Potential::quadratic(2);
    const auto a = run_chain(30, 2.0, V, 300, 100, 42);
    const auto b = run_chain(30, 2.0, V, 300, 100, 42);
    const auto c = run_chain(30, 2.0, V, 300, 100, 43);
    CHECK(a.energy_trace == b.energy_trace);
    CHECK(a.final_config.points == b.final_config.points);
    CHECK(a.energy_trace != c.energy_trace);
    CHECK(a.energy_trace.size() == 200);
}

TEST_CASE("detailed balance on two points") {
    const auto V = Potential::quadratic(2);
    const double beta = 1.7, step = 0.4;
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    for (int k = 0; k < 200; ++k) {
        PointConfiguration x{2, {{u(rng), u(rng), 0.0}, {u(rng), u(rng), 0.0}}};
        const std::size_t i = k % 2;
        const Vec3 y{u(rng), u(rng), 0.0};
        auto xy = x;
        xy.points[i] = y;
        const double fwd = std::exp(-beta * gas::hamiltonian(x, V)) * transition_density(x, i, y, beta, step, V);
        const double bwd =
            std::exp(-beta * gas::hamiltonian(xy, V)) * transition_density(xy, i, x.points[i], beta, step, V);
        CHECK(fwd == doctest::Approx(bwd).epsilon(1e-12).scale(1e-300));
    }
    CHECK(proposal_density({0, 0, 0}, {0, 0, 0}, 1.0, 2) == doctest::Approx(1.0 / (2.0 * kPi)));
    CHECK(proposal_density({0, 0, 0}, {0, 0, 0}, 1.0, 3) == doctest::Approx(std::pow(2.0 * kPi, -1.5)));
}

TEST_CASE("psi6") {
    CHECK(psi6(triangular_patch(0.1, 1.3)) >= 0.99);
    CHECK(psi6(square_patch(0.1, 1.3)) <= 0.3);
    auto rotated = triangular_patch(0.1, 1.3);
    for (auto& p : rotated.points) p = {std::cos(0.3) * p[0] - std::sin(0.3) * p[1], std::sin(0.3) * p[0] + std::cos(0.3) * p[1], 0.0};
    CHECK(psi6(rotated) >= 0.99);

    std::mt19937_64 rng(12);
    std::vector<double> v;
    for (int k = 0; k < 100; ++k) v.push_back(psi6(uniform_disk(500, rng)));
    std::sort(v.begin(), v.end());
    CHECK(v[94] <= 0.2);

    auto few = triangular_patch(0.5, 0.6);
    few.points.pop_back();
    CHECK_THROWS_AS(psi6(few), InvalidParameter);
    Psi6Options far;
    far.centre = {5.0, 0.0, 0.0};
    CHECK_THROWS_AS(psi6(triangular_patch(0.1, 1.3), far), UndefinedObservable);
    PointConfiguration c3 = triangular_patch(0.1, 1.3);
    c3.dim = 3;
    CHECK_THROWS_AS(psi6(c3), InvalidParameter);
}

TEST_CASE("chain statistics") {
    const auto V = Potential::quadratic(2);
    const int n = 50;
    const auto s = run_chain(n, 4.0, V, 1200, 400, 7);
    double mass = 0.0;
    for (double v : s.density_histogram.values()) mass += v;
    CHECK(mass == doctest::Approx(n).epsilon(1e-12));
    CHECK(s.max_energy_drift <= 1e-8 * std::max(1.0, std::abs(s.mean_energy)));
    CHECK(s.acceptance >= 0.2);
    CHECK(s.acceptance <= 0.6);
    CHECK(s.autocorrelation_time >= 1.0);
    CHECK(s.energy_standard_error > 0.0);
    CHECK(s.psi6_trace.size() == 80);
    CHECK(s.final_config.size() == static_cast<std::size_t>(n));
    CHECK(gas::hamiltonian(s.final_config, V) == doctest::Approx(s.energy_trace.back()).epsilon(1e-9));
    // the bulk sits in the disk
    int inside = 0;
    for (const auto& p : s.final_config.points) inside += norm(p) <= 1.3 ? 1 : 0;
    CHECK(inside >= n - 2);
    CHECK_THROWS_AS(run_chain(n, -1.0, V, 100, 10, 1), InvalidParameter);
    CHECK_THROWS_AS(run_chain(n, 1.0, V, 100, 200, 1), InvalidParameter);
}

TEST_CASE("autocorrelation time of an AR(1) series") {
    // x_t = φ x_{t−1} + ε_t has τ = (1 + φ)/(1 − φ) = 19 at φ = 0.9
    std::mt19937_64 rng(99);
    std::normal_distribution<double> g;
    std::vector<double> x(400000);
    double v = 0.0;
    for (auto& e : x) e = v = 0.9 * v + g(rng);
    CHECK(integrated_autocorrelation(x) == doctest::Approx(19.0).epsilon(0.2));

    std::vector<double> white(100000);
    for (auto& e : white) e = g(rng);
    CHECK(integrated_autocorrelation(white) == doctest::Approx(1.0).epsilon(0.1));

    std::vector<double> ramp(200);
    for (std::size_t k = 0; k < ramp.size(); ++k) ramp[k] = 3.0 + static_cast<double>(k % 2);
    const auto [m, e] = batch_mean(ramp);
    CHECK(m == doctest::Approx(3.5));
    CHECK(e == doctest::Approx(0.0).scale(1.0));
    const auto [mw, ew] = batch_mean(white);
    CHECK(std::abs(mw) <= 4.0 * ew);
    CHECK(ew == doctest::Approx(1.0 / std::sqrt(100000.0)).epsilon(0.5));
}

TEST_CASE("geometric beta grid") {
    const auto g = geometric_beta_grid(1e-4, 2.0, 4);
    CHECK(g.front() == 1e-4);
    CHECK(g.back() == 2.0);
    CHECK(g.size() == 19);
    for (std::size_t k = 2; k < g.size(); ++k) CHECK(g[k] / g[k - 1] == doctest::Approx(g[1] / g[0]));
    CHECK_THROWS_AS(geometric_beta_grid(1.0, 0.5, 4), InvalidParameter);
    CHECK_THROWS_AS(geometric_beta_grid(1e-3, 1.0, 0), InvalidParameter);
}

TEST_CASE("thermodynamic integration against the two-particle partition function") {
    const auto V = Potential::quadratic(2);
    FreeEnergyOptions o;
    o.sweeps = 20000;
    o.burn_in = 2000;
    o.seed = 5;
    for (double beta : {1.0, 2.0}) {
        const auto f = free_energy_leading(2, beta, V, geometric_beta_grid(1e-3, beta, 4), o);
        CHECK(std::abs(f.log_z - log_z2(beta)) <= 4.0 * f.error + 0.02);
        // ⟨H⟩ falls as β grows
        for (std::size_t k = 1; k < f.grid.size(); ++k)
            CHECK(f.grid[k].mean_energy <= f.grid[k - 1].mean_energy + 4.0 * f.grid[k - 1].standard_error);
        CHECK(f.leading_term == doctest::Approx((-f.log_z / beta + std::log(2.0)) / 4.0));
    }
    CHECK_THROWS_AS(free_energy_leading(2, 1.0, Potential::parse(2, "r^4"), geometric_beta_grid(1e-3, 1.0, 4), o),
                    InvalidParameter);
    CHECK_THROWS_AS(free_energy_leading(2, 1.0, V, {0.1, 1.0}, o), InvalidParameter);
}
