#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "coulomb/errors.hpp"
#include "coulomb/lattice.hpp"
#include "coulomb/quadrature.hpp"

using namespace coulomb;
using namespace coulomb::lattice;

namespace {

constexpr double kPi = std::numbers::pi;

// Kronecker limit formula, evaluated with mpmath (Dedekind eta), density 1:
// R(τ) = −log(2π √(Im τ) |η(τ)|²).
constexpr double kRSquare = -1.3105329259115095183;
constexpr double kRTriangular = -1.3211174284280379150;

// Σ' |p|^{-s} for density 1: 4ζ(s/2)β(s/2) (square), 6ζ(s/2)L_{-3}(s/2)(√3/2)^{s/2} (triangular).
constexpr double kZetaSquare3 = 9.0336216831009503057;
constexpr double kZetaSquare4 = 6.0268120396919401235;
constexpr double kZetaTriangular3 = 8.8927451003972907667;
constexpr double kZetaTriangular4 = 5.7833592996786723131;

std::array<Vec3, 3> rotation_z(double t) {
    return {Vec3{std::cos(t), -std::sin(t), 0.0}, Vec3{std::sin(t), std::cos(t), 0.0}, Vec3{0.0, 0.0, 1.0}};
}

}  // namespace

TEST_CASE("lattice from tau: area and basis length") {
    const auto sq = make_lattice_from_tau(ModularParameter::square(), 1.0);
    CHECK(sq.cell_volume() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(norm(sq.basis()[0]) == doctest::Approx(1.0).epsilon(1e-14));

    const auto tri = make_lattice_from_tau(ModularParameter::hexagonal(), 1.0);
    CHECK(norm2(tri.basis()[0]) == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-14));
    CHECK(tri.cell_volume() == doctest::Approx(1.0).epsilon(1e-14));

    const auto sq4 = make_lattice_from_tau(ModularParameter::square(), 4.0);
    CHECK(norm(sq4.basis()[0]) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(sq4.min_distance() == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS(make_lattice_from_tau(ModularParameter::square(), 0.0), InvalidParameter);
    CHECK_THROWS_AS(make_lattice_from_tau({{0.2, -1.0}}, 1.0), InvalidParameter);
    CHECK_THROWS_AS(make_lattice_from_tau({{0.2, 0.0}}, 1.0), InvalidParameter);
}

TEST_CASE("modular parameter canonical representative") {
    const ModularParameter t{{2.3, 0.4}};
    const auto c = t.canonical();
    CHECK(std::abs(c.re()) <= 0.5 + 1e-14);
    CHECK(std::abs(c.tau) >= 1.0 - 1e-14);
    // same lattice shape: equal W-invariant quantities
    const double a = green_self_constant(make_lattice_from_tau(t, 1.0));
    const double b = green_self_constant(make_lattice_from_tau(c, 1.0));
    CHECK(a == doctest::Approx(b).epsilon(1e-10));
    CHECK(ModularParameter::hexagonal().re() == 0.5);
}

TEST_CASE("torus Green's function: symmetry and periodicity") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (const auto& L : {Lattice::square(), Lattice::triangular(2.0), make_lattice_from_tau({{0.21, 1.37}}, 0.7)}) {
        EwaldGreen G(L);
        for (int k = 0; k < 10; ++k) {
            const Vec3 x = L.to_cartesian({u(rng), u(rng), 0.0});
            const double g = G.value(x);
            CHECK(G.value(-1.0 * x) == doctest::Approx(g).epsilon(1e-12));
            const Vec3 v = 2.0 * L.basis()[0] + (-3.0) * L.basis()[1];
            CHECK(G.value(x + v) == doctest::Approx(g).epsilon(1e-11));
        }
    }
}

TEST_CASE("torus Green's function on the unit square at the cell centre") {
    // Σ'_k (2π/|T|) e^{ik·x}/|k|² at x = (1/2, 1/2) is (1/2π) Σ' (−1)^{m+n}/(m² + n²) = −(log 2)/2.
    const double g = torus_green(Lattice::square(), {0.5, 0.5, 0.0});
    CHECK(g == doctest::Approx(-0.5 * std::log(2.0)).epsilon(1e-9));
    CHECK(std::abs(g + 0.5 * std::log(2.0)) <= 1e-8);
}

TEST_CASE("torus Green's function: singular point and splitting independence") {
    const auto L = Lattice::triangular();
    CHECK_THROWS_AS(torus_green(L, {0.0, 0.0, 0.0}), SingularityError);
    CHECK_THROWS_AS(torus_green(L, L.basis()[0]), SingularityError);

    EwaldParams a, b;
    a.splitting_parameter = 2.0;
    b.splitting_parameter = 8.0;
    EwaldGreen Ga(L, a), Gb(L, b);
    for (const Vec3& x : {Vec3{0.3, 0.1, 0.0}, Vec3{-0.41, 0.27, 0.0}, Vec3{0.05, 0.02, 0.0}})
        CHECK(std::abs(Ga.value(x) - Gb.value(x)) <= 1e-10);
    CHECK(std::abs(Ga.self_constant() - Gb.self_constant()) <= 1e-10);
}

TEST_CASE("torus Green's function gradient against finite differences") {
    const auto L = make_lattice_from_tau({{0.1, 1.2}}, 1.0);
    EwaldGreen G(L);
    const double h = 1e-6;
    for (const Vec3& x : {Vec3{0.3, 0.1, 0.0}, Vec3{-0.2, 0.45, 0.0}}) {
        const Vec3 g = G.gradient(x);
        for (int k = 0; k < 2; ++k) {
            Vec3 e{0.0, 0.0, 0.0};
            e[k] = h;
            const double fd = (G.value(x + e) - G.value(x - 1.0 * e)) / (2 * h);
            CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("torus Green's function solves the PDE weakly") {
    // φ = cos(2πx): ∫G(−Δφ) = 4π² ∫ G φ should equal 2π(φ(0) − ∫φ) = 2π.
    const auto L = Lattice::square();
    EwaldGreen G(L);
    // Duffy map on the eight triangles around the singular corner at the origin
    const auto& r = quad::gauss_legendre(48);
    double acc = 0.0;
    for (int sx : {-1, 1})
        for (int sy : {-1, 1})
            for (int swap = 0; swap < 2; ++swap)
                for (std::size_t i = 0; i < r.x.size(); ++i)
                    for (std::size_t j = 0; j < r.x.size(); ++j) {
                        const double s = 0.25 * (r.x[i] + 1.0), t = 0.5 * (r.x[j] + 1.0);
                        const double w = 0.25 * r.w[i] * 0.5 * r.w[j] * s;  // jacobian of (s, s t) on [0, ½]²
                        double x = s, y = s * t;
                        if (swap) std::swap(x, y);
                        x *= sx;
                        y *= sy;
                        acc += w * G.value({x, y, 0.0}) * std::cos(2.0 * kPi * x);
                    }
    CHECK(4.0 * kPi * kPi * acc == doctest::Approx(2.0 * kPi).epsilon(1e-6));
}

TEST_CASE("self constant: Kronecker limit values, dilation and rotation") {
    CHECK(std::abs(green_self_constant(Lattice::square()) - kRSquare) <= 1e-9);
    CHECK(std::abs(green_self_constant(Lattice::triangular()) - kRTriangular) <= 1e-9);
    CHECK(green_self_constant(Lattice::triangular()) < green_self_constant(Lattice::square()));

    const auto L = make_lattice_from_tau({{0.3, 1.1}}, 1.0);
    CHECK(green_self_constant(L.scaled(2.0)) == doctest::Approx(green_self_constant(L) + std::log(2.0)).epsilon(1e-11));
    CHECK(green_self_constant(L.rotated(rotation_z(0.7))) == doctest::Approx(green_self_constant(L)).epsilon(1e-11));
}

TEST_CASE("self constant from small-|x| evaluation") {
    // G(x) + log|x| = R + (π/2)|x|² + O(|x|⁴) on the unit square (the degree-2 harmonic vanishes by symmetry).
    const auto L = Lattice::square();
    EwaldGreen G(L);
    const double R = G.self_constant();
    const double r = 1e-3;
    for (double t : {0.0, 0.4, 1.3}) {
        const Vec3 x{r * std::cos(t), r * std::sin(t), 0.0};
        const double v = G.value(x) + std::log(r);
        CHECK(std::abs(v - R) <= 2e-6);
        CHECK(std::abs(v - 0.5 * kPi * r * r - R) <= 1e-8);
    }
}

TEST_CASE("Epstein zeta: closed forms, homogeneity, ordering, invariance") {
    CHECK(std::abs(epstein_zeta(Lattice::square(), 4.0) - kZetaSquare4) <= 1e-8);
    CHECK(std::abs(epstein_zeta(Lattice::square(), 3.0) - kZetaSquare3) <= 1e-8);
    CHECK(std::abs(epstein_zeta(Lattice::triangular(), 4.0) - kZetaTriangular4) <= 1e-8);
    CHECK(std::abs(epstein_zeta(Lattice::triangular(), 3.0) - kZetaTriangular3) <= 1e-8);
    CHECK(epstein_zeta(Lattice::triangular(), 3.0) < epstein_zeta(Lattice::square(), 3.0));

    const auto L = make_lattice_from_tau({{0.17, 1.3}}, 1.0);
    CHECK(epstein_zeta(L.scaled(2.0), 4.0) == doctest::Approx(std::pow(2.0, -4.0) * epstein_zeta(L, 4.0)).epsilon(1e-12));
    CHECK(epstein_zeta(L.rotated(rotation_z(1.1)), 3.5) == doctest::Approx(epstein_zeta(L, 3.5)).epsilon(1e-12));
    // unimodular change of basis (u, v) → (u, u + v)
    const auto& B = L.basis();
    const Lattice L2(2, {B[0], B[0] + B[1], Vec3{0.0, 0.0, 1.0}});
    CHECK(epstein_zeta(L2, 3.5) == doctest::Approx(epstein_zeta(L, 3.5)).epsilon(1e-12));

    CHECK_THROWS_AS(epstein_zeta(Lattice::square(), 2.0), InvalidParameter);
    CHECK_THROWS_AS(epstein_zeta(Lattice::simple_cubic(), 3.0), InvalidParameter);
    CHECK(epstein_zeta(Lattice::simple_cubic(), 4.0) > 0.0);
}

TEST_CASE("fundamental domain grid") {
    const auto g2 = fundamental_domain_grid(2);
    bool has_i = false, has_rho = false;
    const auto rho = ModularParameter::hexagonal();
    for (const auto& t : g2) {
        has_i |= t.re() == 0.0 && t.im() == 1.0;
        has_rho |= t.re() == rho.re() && t.im() == rho.im();
    }
    CHECK(has_i);
    CHECK(has_rho);
    for (int res : {2, 8, 16}) {
        for (const auto& t : fundamental_domain_grid(res)) {
            CHECK(t.im() >= std::sqrt(3.0) / 2.0 - 1e-15);
            CHECK(std::abs(t.re()) <= 0.5);
            CHECK(std::abs(t.tau) >= 1.0 - 1e-14);
            CHECK(t.im() <= 2.0 + 1e-14);
        }
    }
    const double ratio = static_cast<double>(fundamental_domain_grid(32).size()) / fundamental_domain_grid(16).size();
    CHECK(ratio > 3.0);
    CHECK(ratio < 5.0);
    CHECK_THROWS_AS(fundamental_domain_grid(1), InvalidParameter);
}

TEST_CASE("lattice utilities") {
    const auto L = make_lattice_from_tau({{0.45, 0.95}}, 1.0);
    const Vec3 x{0.9, -0.7, 0.0};
    const Vec3 m = L.minimum_image(x);
    std::mt19937_64 rng(2);
    for (int a = -3; a <= 3; ++a)
        for (int b = -3; b <= 3; ++b) CHECK(norm(m) <= norm(x + a * L.basis()[0] + b * L.basis()[1]) + 1e-14);

    const auto S = Lattice::square().supercell({2, 1, 1});
    CHECK(S.points_per_cell() == 2);
    CHECK(S.density() == doctest::Approx(1.0));
    CHECK(S.min_distance() == doctest::Approx(1.0));

    CHECK(Lattice::body_centered_cubic().density() == doctest::Approx(1.0));
    CHECK(Lattice::face_centered_cubic().min_distance() == doctest::Approx(std::cbrt(4.0) / std::sqrt(2.0)).epsilon(1e-12));
    CHECK_THROWS_AS(Lattice(2, Lattice::square().basis(), {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}}), InvalidConfiguration);
    CHECK_THROWS_AS(Lattice::square(-1.0), InvalidParameter);
    CHECK(coulomb_constant(2) == doctest::Approx(2 * kPi));
    CHECK(coulomb_kernel(3, 2.0) == doctest::Approx(0.5));
}
