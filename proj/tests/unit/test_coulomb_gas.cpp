#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "coulomb/coulomb_gas.hpp"
#include "coulomb/errors.hpp"

using namespace coulomb;
using namespace coulomb::gas;

namespace {

constexpr double kPi = std::numbers::pi;

PointConfiguration random_config(int n, int d, std::uint64_t seed, double r = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-r, r);
    PointConfiguration c;
    c.dim = d;
    for (int i = 0; i < n; ++i) {
        Vec3 p{};
        for (int a = 0; a < d; ++a) p[a] = u(rng);
        c.points.push_back(p);
    }
    return c;
}

// uniform in the unit disk
PointConfiguration disk_config(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PointConfiguration c;
    for (int i = 0; i < n; ++i) {
        const double r = std::sqrt(u(rng)), t = 2.0 * kPi * u(rng);
        c.points.push_back({r * std::cos(t), r * std::sin(t), 0.0});
    }
    return c;
}

double naive_h(const PointConfiguration& c, const Potential& V) {
    const int n = static_cast<int>(c.size());
    double e = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) {
                const double r = norm(c.points[i] - c.points[j]);
                e += c.dim == 2 ? -std::log(r) : 1.0 / r;
            }
    for (const auto& p : c.points) e += n * V.value(p);
    return e;
}

Vec3 rotate(const Vec3& p, double t) {
    return {std::cos(t) * p[0] - std::sin(t) * p[1], std::sin(t) * p[0] + std::cos(t) * p[1], 0.0};
}

}  // namespace

TEST_CASE("Hamiltonian") {
    const auto V = Potential::quadratic(2);
    PointConfiguration two{2, {{0.5, 0.0, 0.0}, {-0.5, 0.0, 0.0}}};
    CHECK(hamiltonian(two, V) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kernel(2, std::exp(1.0)) == doctest::Approx(-1.0));
    CHECK(kernel(3, 4.0) == 0.25);

    auto c = random_config(50, 2, 3);
    const double h = hamiltonian(c, V);
    CHECK(std::abs(h - naive_h(c, V)) <= 1e-12 * std::abs(h));
    std::shuffle(c.points.begin(), c.points.end(), std::mt19937_64(9));
    CHECK(hamiltonian(c, V) == doctest::Approx(h).epsilon(1e-13));

    const auto c3 = random_config(30, 3, 5);
    const auto V3 = Potential::quadratic(3);
    CHECK(hamiltonian(c3, V3) == doctest::Approx(naive_h(c3, V3)).epsilon(1e-12));

    auto bad = c;
    bad.points[7] = bad.points[2];
    CHECK_THROWS_AS(hamiltonian(bad, V), SingularityError);
    bad.points[7][0] = std::nan("");
    CHECK_THROWS_AS(hamiltonian(bad, V), InvalidConfiguration);
    PointConfiguration flat{2, {{0.0, 0.0, 1.0}}};
    CHECK_THROWS_AS(hamiltonian(flat, V), InvalidConfiguration);
}

TEST_CASE("gradient") {
    for (int d : {2, 3}) {
        const auto V = Potential::quadratic(d);
        auto c = random_config(12, d, 11 + d);
        const auto g = gradient(c, V);
        const double step = 1e-6;
        double worst = 0.0;
        Vec3 total{};
        for (std::size_t i = 0; i < c.size(); ++i) {
            for (int a = 0; a < d; ++a) {
                auto p = c, m = c;
                p.points[i][a] += step;
                m.points[i][a] -= step;
                const double fd = (hamiltonian(p, V) - hamiltonian(m, V)) / (2.0 * step);
                worst = std::max(worst, std::abs(fd - g[i][a]) / std::max(1.0, std::abs(g[i][a])));
            }
            // pair forces cancel in the sum
            total = total + (g[i] - static_cast<double>(c.size()) * V.gradient(c.points[i]));
        }
        CHECK(worst <= 1e-5);
        CHECK(norm(total) <= 1e-9);
    }
    const auto V = Potential::quadratic(2);
    PointConfiguration two{2, {{0.5, 0.0, 0.0}, {-0.5, 0.0, 0.0}}};
    for (const auto& v : gradient(two, V)) CHECK(norm(v) <= 1e-14);
}

TEST_CASE("Fekete points: two charges") {
    const auto r = minimize_fekete(2, Potential::quadratic(2));
    CHECK(r.energy == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(norm(r.config.points[0] - r.config.points[1]) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(r.gradient_norm <= 1e-8);
}

TEST_CASE("Fekete points: independent batches agree") {
    const auto V = Potential::quadratic(2);
    MinimizeOptions a;
    a.starts = 20;
    a.seed = 1;
    a.record_history = true;
    MinimizeOptions b = a;
    b.seed = 1001;
    const auto ra = minimize_fekete(29, V, a);
    const auto rb = minimize_fekete(29, V, b);
    CHECK(ra.seeded_from_mu0);
    CHECK(std::abs(ra.energy - rb.energy) <= 1e-8);
    CHECK(ra.gradient_norm <= 1e-8);
    CHECK(ra.best_basin_hits >= 1);
    CHECK(ra.spread >= 0.0);
    for (const auto& p : ra.config.points) CHECK(norm(p) <= 1.0 + 1e-9);
    for (const auto& s : ra.starts) {
        CHECK(s.energy >= ra.energy - 1e-9);
        for (std::size_t k = 1; k < s.energy_history.size(); ++k)
            CHECK(s.energy_history[k] <= s.energy_history[k - 1] + 1e-9 * std::abs(s.energy_history[k - 1]));
    }
    // energy per pair is translation invariant
    const auto shifted = minimize_fekete(29, Potential::quadratic(2, 1.0, {0.4, 0.1, 0.0}), a);
    CHECK(shifted.energy == doctest::Approx(ra.energy).epsilon(1e-9));
    CHECK_THROWS_AS(minimize_fekete(0, V), InvalidParameter);
}

TEST_CASE("Fekete points fill the disk") {
    MinimizeOptions o;
    o.starts = 2;
    const auto r = minimize_fekete(100, Potential::quadratic(2), o);
    const auto cdf = circle_law_cdf(r.config.points, 10, 1.0 / std::sqrt(100.0));
    CHECK(cdf.max_deviation <= 0.05);
    CHECK(cdf.radii.size() == 9);
    CHECK(cdf.radii[3] == doctest::Approx(std::sqrt(0.4)));
}

TEST_CASE("radial CDF of exact samples") {
    const auto c = disk_config(20000, 8);
    CHECK(circle_law_cdf(c.points).max_deviation <= 0.02);
    PointConfiguration centre{2, {{0.0, 0.0, 0.0}}};
    CHECK(circle_law_cdf(centre.points).max_deviation == doctest::Approx(0.9));
}

TEST_CASE("local w_n") {
    MinimizeOptions o;
    o.starts = 4;
    const int n = 10;
    const auto id = minimize_local_wn(n, QuadraticForm{});
    const auto fk = minimize_fekete(n, Potential::quadratic(2), o);
    CHECK(minimize_local_wn(n, QuadraticForm{}, o).energy == doctest::Approx(fk.energy).epsilon(1e-9));
    // Q → sQ rescales the minimizer by 1/√s
    const auto s3 = minimize_local_wn(n, QuadraticForm{3.0, 0.0, 3.0}, o);
    CHECK(s3.energy == doctest::Approx(fk.energy + 0.5 * n * (n - 1) * std::log(3.0)).epsilon(1e-9));
    // a rotation of the form leaves the minimum unchanged; the determinant sets it
    const auto sk = minimize_local_wn(n, QuadraticForm{2.0, 1.0, 2.0}, o);
    const auto dg = minimize_local_wn(n, QuadraticForm{3.0, 0.0, 1.0}, o);
    CHECK(sk.energy == doctest::Approx(dg.energy).epsilon(1e-9));
    CHECK(id.config.size() == static_cast<std::size_t>(n));
    CHECK_THROWS_AS(minimize_local_wn(n, QuadraticForm{1.0, 2.0, 1.0}), InvalidParameter);
}

TEST_CASE("splitting identity") {
    PointConfiguration one{2, {{0.0, 0.0, 0.0}}};
    const auto s1 = splitting_check(one);
    CHECK(s1.lhs == 0.0);
    CHECK(s1.mean_field_term == doctest::Approx(0.75));
    CHECK(s1.log_term == 0.0);
    CHECK(std::abs(s1.residual) <= 1e-8);

    const auto c = disk_config(3, 7);
    const auto s = splitting_check(c);
    CHECK(s.lhs == doctest::Approx(hamiltonian(c, Potential::quadratic(2))).epsilon(1e-14));
    CHECK(s.log_term == doctest::Approx(-1.5 * std::log(3.0)));
    CHECK(s.relative_residual <= 1e-8);
    CHECK(s.zeta_term == 0.0);
    REQUIRE(s.eta_trace.size() >= 2);

    // points outside the disk carry ζ > 0
    PointConfiguration out{2, {{1.5, 0.0, 0.0}, {-0.3, 0.2, 0.0}, {0.1, -0.6, 0.0}, {0.0, 1.2, 0.0}}};
    const auto so = splitting_check(out);
    CHECK(so.zeta_term > 0.0);
    CHECK(so.relative_residual <= 1e-8);

    auto rot = c;
    for (auto& p : rot.points) p = rotate(p, 1.1);
    std::swap(rot.points[0], rot.points[2]);
    const auto sr = splitting_check(rot);
    CHECK(sr.w_term == doctest::Approx(s.w_term).epsilon(1e-9));
    CHECK(sr.lhs == doctest::Approx(s.lhs).epsilon(1e-12));

    CHECK_THROWS_AS(splitting_check(random_config(3, 3, 1)), InvalidParameter);
    CHECK_THROWS_AS(splitting_check(PointConfiguration{}), InvalidParameter);
}

TEST_CASE("window counts") {
    const auto mu0 = eq::solve_equilibrium_measure(Potential::quadratic(2), [] {
        eq::GridSpec g;
        g.spacing = 1.0 / 64.0;
        return g;
    }());
    const int n = 400;
    const auto c = disk_config(n, 21);
    const double s = std::sqrt(static_cast<double>(n));

    // cubes of side 8 tiling [−24, 24]² hold every blown-up point
    std::vector<Vec3> tiles;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) tiles.push_back({-20.0 + 8.0 * i, -20.0 + 8.0 * j, 0.0});
    int total = 0;
    double mass = 0.0;
    for (const auto& w : window_point_counts(c, mu0, tiles, 8.0, false)) {
        total += w.count;
        mass += w.expected;
        CHECK(w.deviation == doctest::Approx(std::abs(w.count - w.expected)));
    }
    CHECK(total == n);
    CHECK(mass == doctest::Approx(n).epsilon(2e-3));

    // doubling the side: a big cube is four small ones
    std::vector<Vec3> small{{-2.0, -2.0, 0.0}, {2.0, -2.0, 0.0}, {-2.0, 2.0, 0.0}, {2.0, 2.0, 0.0}};
    const Vec3 origin{};
    const auto big = window_point_counts(c, mu0, std::span(&origin, 1), 8.0);
    int parts = 0;
    double expected = 0.0;
    for (const auto& w : window_point_counts(c, mu0, small, 4.0)) {
        parts += w.count;
        expected += w.expected;
    }
    CHECK(big[0].count == parts);
    CHECK(big[0].expected == doctest::Approx(expected).epsilon(1e-9));
    CHECK(big[0].expected == doctest::Approx(64.0 / kPi).epsilon(1e-3));

    const Vec3 edge{0.9 * s, 0.0, 0.0};
    CHECK_THROWS_AS(window_point_counts(c, mu0, std::span(&edge, 1), 8.0), InvalidParameter);
    CHECK_THROWS_AS(window_point_counts(c, mu0, std::span(&origin, 1), 0.0), InvalidParameter);
}

TEST_CASE("window counts of Fekete points are rigid") {
    const int n = 200;
    const auto V = Potential::quadratic(2);
    eq::GridSpec g;
    g.spacing = 1.0 / 64.0;
    const auto mu0 = eq::solve_equilibrium_measure(V, g);
    MinimizeOptions o;
    o.starts = 1;
    const auto r = minimize_fekete(n, V, mu0, o);
    std::vector<Vec3> centres;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j) centres.push_back({3.0 * i, 3.0 * j, 0.0});
    const double ell = 4.0;
    for (const auto& w : window_point_counts(r.config, mu0, centres, ell))
        CHECK(w.deviation <= 2.0 * ell);  // boundary-order, not area-order, fluctuations
}

TEST_CASE("CSV round trip") {
    const auto c = random_config(17, 3, 2);
    std::stringstream ss;
    c.write_csv(ss);
    const auto back = PointConfiguration::read_csv(ss, 3);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        for (int a = 0; a < 3; ++a) CHECK(back.points[i][a] == c.points[i][a]);
    std::stringstream bad("x,y\n0.1,0.2\n0.3,oops\n");
    CHECK_THROWS_AS(PointConfiguration::read_csv(bad, 2), InvalidConfiguration);
}
