#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "coulomb/equilibrium.hpp"
#include "coulomb/errors.hpp"
#include "relaxation.hpp"

namespace coulomb::eq {

namespace {

constexpr double kPi = std::numbers::pi;

// −Δh + h on a disk (polar finite volumes) or a rectangle (5-point), boundary nodes fixed.
struct PlanarProblem {
    GridField grid;
    detail::StencilMatrix A;
    std::vector<char> fixed;
    std::vector<std::vector<std::uint32_t>> nbrs;
    double nodes_across = 0.0;
};

PlanarProblem build_disk(double R, const PlanarGrid& g) {
    PlanarProblem P;
    const int nr = std::max(3, static_cast<int>(std::lround(R / g.spacing)) + 1);
    int nth = g.angular_nodes;
    if (nth <= 0) nth = 64;
    P.grid = GridField::polar(R, nr, nth);
    const double hr = P.grid.spacing();
    const double ht = 2.0 * kPi / nth;
    P.fixed.assign(P.grid.size(), 0);
    P.nbrs.resize(P.grid.size());
    P.nodes_across = 2.0 * nr;

    // centre
    {
        const double w = 0.5 * ht;
        P.A.add_row(w * nth + P.grid.cell_measure(0));
        for (int j = 0; j < nth; ++j) {
            const auto id = static_cast<std::uint32_t>(P.grid.index(1, j));
            P.A.add_neighbor(id, w);
            P.nbrs[0].push_back(id);
        }
    }
    for (int i = 1; i < nr; ++i) {
        const double r = hr * i;
        for (int j = 0; j < nth; ++j) {
            const std::size_t id = P.grid.index(i, j);
            if (i == nr - 1) {
                P.fixed[id] = 1;
                P.A.add_row(1.0);
                continue;
            }
            const double win = (r - 0.5 * hr) * ht / hr;
            const double wout = (r + 0.5 * hr) * ht / hr;
            const double wang = hr / (r * ht);
            P.A.add_row(win + wout + 2.0 * wang + P.grid.cell_measure(id));
            const std::uint32_t nb[4] = {static_cast<std::uint32_t>(P.grid.index(i - 1, j)),
                                         static_cast<std::uint32_t>(P.grid.index(i + 1, j)),
                                         static_cast<std::uint32_t>(P.grid.index(i, j - 1)),
                                         static_cast<std::uint32_t>(P.grid.index(i, j + 1))};
            const double w[4] = {win, wout, wang, wang};
            for (int q = 0; q < 4; ++q) {
                P.A.add_neighbor(nb[q], w[q]);
                P.nbrs[id].push_back(nb[q]);
            }
        }
    }
    return P;
}

PlanarProblem build_rectangle(double W, double H, const PlanarGrid& g) {
    PlanarProblem P;
    const int nx = std::max(3, static_cast<int>(std::lround(W / g.spacing)) + 1);
    const int ny = std::max(3, static_cast<int>(std::lround(H / g.spacing)) + 1);
    const double h = W / (nx - 1);
    if (std::abs(h * (ny - 1) - H) > 1e-9 * H)
        throw InvalidParameter("rectangle sides must be commensurate with the grid spacing");
    P.grid = GridField::cartesian(2, {-0.5 * W, -0.5 * H, 0.0}, h, {nx, ny, 1});
    P.fixed.assign(P.grid.size(), 0);
    P.nbrs.resize(P.grid.size());
    P.nodes_across = std::max(nx, ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const std::size_t id = P.grid.index(i, j);
            if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) {
                P.fixed[id] = 1;
                P.A.add_row(1.0);
                continue;
            }
            P.A.add_row(4.0 + h * h);
            for (auto [di, dj] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) {
                const auto nb = static_cast<std::uint32_t>(P.grid.index(i + di, j + dj));
                P.A.add_neighbor(nb, 1.0);
                P.nbrs[id].push_back(nb);
            }
        }
    return P;
}

PlanarProblem build(const Domain& domain, const PlanarGrid& g) {
    if (!(g.spacing > 0.0)) throw InvalidParameter("grid spacing must be positive");
    if (domain.kind == Domain::Kind::Disk) {
        if (!(domain.radius > 0.0)) throw InvalidParameter("disk radius must be positive");
        return build_disk(domain.radius, g);
    }
    if (!(domain.width > 0.0 && domain.height > 0.0)) throw InvalidParameter("rectangle sides must be positive");
    return build_rectangle(domain.width, domain.height, g);
}

// Rectangle rows are scaled by h² relative to the finite-volume form; this is the cell measure they carry.
double row_measure(const PlanarProblem& P, std::size_t i) {
    if (P.grid.geometry() == GridGeometry::Cartesian) return P.grid.spacing() * P.grid.spacing();
    return P.grid.cell_measure(i);
}

double bessel_i0_series(double x) {
    double term = 1.0, sum = 1.0;
    const double q = 0.25 * x * x;
    for (int k = 1; k < 200; ++k) {
        term *= q / (double(k) * k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

}  // namespace

double Domain::area() const { return kind == Kind::Disk ? kPi * radius * radius : width * height; }

double disk_lambda_omega_exact(double radius) { return 0.5 / (1.0 - 1.0 / bessel_i0_series(radius)); }

double disk_coverage_exact(double lambda, double R) {
    if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
    const double k = 1.0 - 1.0 / (2.0 * lambda);
    if (lambda <= disk_lambda_omega_exact(R)) return 0.0;
    using boost::math::cyl_bessel_i;
    using boost::math::cyl_bessel_k;
    // h = k on r ≤ a; h = A (I0(r) + β K0(r)) on a < r < R with h'(a) = 0, h(R) = 1.
    auto mismatch = [&](double a) {
        const double beta = cyl_bessel_i(1, a) / cyl_bessel_k(1, a);
        const double A = 1.0 / (cyl_bessel_i(0, R) + beta * cyl_bessel_k(0, R));
        return A * (cyl_bessel_i(0, a) + beta * cyl_bessel_k(0, a)) - k;
    };
    double lo = 1e-12 * R, hi = R * (1.0 - 1e-15);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mismatch(mid) < 0.0 ? lo : hi) = mid;
    }
    const double a = 0.5 * (lo + hi);
    return (a / R) * (a / R);
}

MeissnerResult solve_meissner_h0(const Domain& domain, const PlanarGrid& g) {
    PlanarProblem P = build(domain, g);
    std::vector<double> x(P.grid.size(), 1.0);
    const std::vector<double> b(x.size(), 0.0);
    const std::vector<double> lower(x.size(), detail::kNoObstacle);
    const double omega = g.omega > 0.0 ? g.omega : detail::default_omega(P.nodes_across);
    const auto res = detail::projected_sor(P.A, b, lower, P.fixed, x, omega, g.tolerance, g.max_sweeps, "meissner");
    MeissnerResult out;
    out.h0 = P.grid.with_values(x);
    for (double v : x) out.max_deviation = std::max(out.max_deviation, std::abs(v - 1.0));
    out.lambda_omega = 0.5 / out.max_deviation;
    out.residual = res.residual;
    out.sweeps = res.sweeps;
    return out;
}

ObstacleResult solve_gl_obstacle(double lambda, const Domain& domain, const PlanarGrid& g) {
    if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
    PlanarProblem P = build(domain, g);
    const double k = 1.0 - 1.0 / (2.0 * lambda);
    std::vector<double> x(P.grid.size(), 1.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!P.fixed[i]) x[i] = std::max(k, 1.0);
    const std::vector<double> b(x.size(), 0.0);
    std::vector<double> lower(x.size(), k);
    const double omega = g.omega > 0.0 ? g.omega : detail::default_omega(P.nodes_across);
    const auto res = detail::projected_sor(P.A, b, lower, P.fixed, x, omega, g.tolerance, g.max_sweeps, "gl obstacle");

    ObstacleResult out;
    out.lambda = lambda;
    out.obstacle = k;
    out.sweeps = res.sweeps;
    out.h = P.grid.with_values(x);
    out.mu = P.grid.with_values(std::vector<double>(x.size(), 0.0));
    out.omega_mask = out.mu;
    double covered = 0.0, dens = 0.0;
    int interior = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (P.fixed[i]) continue;
        const double mult = P.A.apply_row(i, x) / row_measure(P, i);
        const bool contact = x[i] == k;
        if (contact) {
            out.mu[i] = std::max(0.0, mult);
            out.omega_mask[i] = 1.0;
            covered += P.grid.cell_measure(i);
        }
        out.complementarity = std::max(out.complementarity, std::min(std::abs(x[i] - k), std::abs(mult)));
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (out.omega_mask[i] < 0.5) continue;
        bool all = true;
        for (auto nb : P.nbrs[i]) all = all && out.omega_mask[nb] > 0.5;
        if (all) {
            dens += out.mu[i];
            ++interior;
        }
    }
    out.coverage = covered / domain.area();
    out.interior_density = interior > 0 ? dens / interior : 0.0;
    return out;
}

}  // namespace coulomb::eq
