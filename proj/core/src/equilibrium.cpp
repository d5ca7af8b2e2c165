#include "coulomb/equilibrium.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "coulomb/errors.hpp"
#include "coulomb/quadrature.hpp"
#include "relaxation.hpp"

namespace coulomb::eq {

namespace {

constexpr double kPi = std::numbers::pi;
// ∫_{[-1/2,1/2]^d} g(y) dy and ∬ g(x − y) over a pair of unit cells.
constexpr double kCellPoint2 = 1.0611754268825243;
constexpr double kCellPoint3 = 2.3800773639795535;
constexpr double kCellPair2 = 0.805086721950087;
constexpr double kCellPair3 = 1.88231264438966;

double cd_of(int d) { return d == 2 ? 2.0 * kPi : 4.0 * kPi; }
double sphere_area(int d) { return d == 2 ? 2.0 * kPi : 4.0 * kPi; }
double kernel(int d, double r) { return d == 2 ? -std::log(r) : 1.0 / r; }

// Mean of g over a full cell of side h centred at the evaluation point, times the cell volume.
double cell_point_integral(int d, double h) {
    return d == 2 ? h * h * (-std::log(h) + kCellPoint2) : h * h * kCellPoint3;
}
// ∬ g over a pair of identical cells of side h, per unit mass squared.
double cell_pair_mean(int d, double h) { return d == 2 ? -std::log(h) + kCellPair2 : kCellPair3 / h; }

// ---------------------------------------------------------------------------------------------
// Radial measures: piecewise-constant density on the shells [r_i − h/2, r_i + h/2] ∩ [0, R].

struct Shell {
    double a, b, rho;
};

std::vector<Shell> shells_of(const GridField& f) {
    std::vector<Shell> s(f.size());
    const double h = f.spacing();
    const double R = f.extent();
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = h * static_cast<double>(i);
        s[i] = {std::max(0.0, r - 0.5 * h), std::min(R, r + 0.5 * h), f[i]};
    }
    return s;
}

double shell_mass(int d, const Shell& s, double lo, double hi) {
    return s.rho * sphere_area(d) * (std::pow(hi, d) - std::pow(lo, d)) / d;
}

// ∫_lo^hi g(s) ρ S_d s^{d−1} ds in closed form.
double shell_potential_integral(int d, double rho, double lo, double hi) {
    if (d == 2) {
        auto F = [](double s) { return s > 0.0 ? -0.5 * s * s * std::log(s) + 0.25 * s * s : 0.0; };
        return 2.0 * kPi * rho * (F(hi) - F(lo));
    }
    return 4.0 * kPi * rho * 0.5 * (hi * hi - lo * lo);
}

double radial_potential(int d, const std::vector<Shell>& shells, double r) {
    double u = 0.0;
    for (const auto& s : shells) {
        if (s.rho == 0.0) continue;
        if (s.b <= r) {
            u += shell_mass(d, s, s.a, s.b) * kernel(d, r);
        } else if (s.a >= r) {
            u += shell_potential_integral(d, s.rho, s.a, s.b);
        } else {
            u += (r > 0.0 ? shell_mass(d, s, s.a, r) * kernel(d, r) : 0.0) + shell_potential_integral(d, s.rho, r, s.b);
        }
    }
    return u;
}

// ---------------------------------------------------------------------------------------------
// Cartesian measures: Σ_{j≠i} m_j g(x_i − x_j) for all nodes by zero-padded FFT convolution.

std::vector<double> convolve_offdiagonal(const GridField& grid, const std::vector<double>& mass) {
    const int d = grid.dim();
    const auto shp = grid.shape();
    const double h = grid.spacing();
    int M[3] = {1, 1, 1};
    for (int a = 0; a < d; ++a) M[a] = 2 * shp[a];
    const std::size_t total = static_cast<std::size_t>(M[0]) * M[1] * M[2];
    const std::size_t ctotal = static_cast<std::size_t>(M[2] == 1 ? 1 : M[2]) * M[1] * (M[0] / 2 + 1);
    // FFTW is row-major with the last index fastest; our x index is fastest.
    int dims[3];
    if (d == 2) {
        dims[0] = M[1];
        dims[1] = M[0];
    } else {
        dims[0] = M[2];
        dims[1] = M[1];
        dims[2] = M[0];
    }
    std::vector<double> a(total, 0.0), k(total, 0.0);
    auto pad = [&](int i, int j, int l) {
        return (static_cast<std::size_t>(l) * M[1] + j) * M[0] + i;
    };
    for (int l = 0; l < shp[2]; ++l)
        for (int j = 0; j < shp[1]; ++j)
            for (int i = 0; i < shp[0]; ++i) a[pad(i, j, l)] = mass[grid.index(i, j, l)];
    const int zr = d == 3 ? shp[2] - 1 : 0;
    for (int l = -zr; l <= zr; ++l)
        for (int j = -(shp[1] - 1); j <= shp[1] - 1; ++j)
            for (int i = -(shp[0] - 1); i <= shp[0] - 1; ++i) {
                if (i == 0 && j == 0 && l == 0) continue;
                const double r = h * std::sqrt(double(i) * i + double(j) * j + double(l) * l);
                k[pad((i + M[0]) % M[0], (j + M[1]) % M[1], (l + M[2]) % M[2])] = kernel(d, r);
            }
    fftw_complex* fa = fftw_alloc_complex(ctotal);
    fftw_complex* fk = fftw_alloc_complex(ctotal);
    fftw_plan pa = fftw_plan_dft_r2c(d, dims, a.data(), fa, FFTW_ESTIMATE);
    fftw_plan pk = fftw_plan_dft_r2c(d, dims, k.data(), fk, FFTW_ESTIMATE);
    fftw_execute(pa);
    fftw_execute(pk);
    for (std::size_t q = 0; q < ctotal; ++q) {
        const double re = fa[q][0] * fk[q][0] - fa[q][1] * fk[q][1];
        const double im = fa[q][0] * fk[q][1] + fa[q][1] * fk[q][0];
        fa[q][0] = re / static_cast<double>(total);
        fa[q][1] = im / static_cast<double>(total);
    }
    fftw_plan pb = fftw_plan_dft_c2r(d, dims, fa, a.data(), FFTW_ESTIMATE);
    fftw_execute(pb);
    fftw_destroy_plan(pa);
    fftw_destroy_plan(pk);
    fftw_destroy_plan(pb);
    fftw_free(fa);
    fftw_free(fk);
    std::vector<double> out(grid.size());
    for (int l = 0; l < shp[2]; ++l)
        for (int j = 0; j < shp[1]; ++j)
            for (int i = 0; i < shp[0]; ++i) out[grid.index(i, j, l)] = a[pad(i, j, l)];
    return out;
}

std::vector<double> masses(const GridField& density) {
    std::vector<double> m(density.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = density[i] * density.cell_measure(i);
    return m;
}

// Potential g ∗ μ at every node of a Cartesian measure.
std::vector<double> cartesian_potential(const GridField& density) {
    const auto m = masses(density);
    auto u = convolve_offdiagonal(density, m);
    const int d = density.dim();
    const double h = density.spacing();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] += density[i] * cell_point_integral(d, h);
    return u;
}

Vec3 centroid(const GridField& density) {
    Vec3 c{0.0, 0.0, 0.0};
    double m = 0.0;
    for (std::size_t i = 0; i < density.size(); ++i) {
        const double w = density[i] * density.cell_measure(i);
        c += w * density.node(i);
        m += w;
    }
    return m > 0.0 ? (1.0 / m) * c : c;
}

// Support node closest to the density-weighted centroid.
std::size_t el_node(const EquilibriumMeasure& mu) {
    const Vec3 c = mu.radial() ? Vec3{0.0, 0.0, 0.0} : centroid(mu.density);
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mu.support_mask.size(); ++i) {
        if (mu.support_mask[i] < 0.5) continue;
        const double dd = norm2(mu.density.node(i) - c);
        if (dd < bd) {
            bd = dd;
            best = i;
        }
    }
    if (!std::isfinite(bd)) throw InvalidConfiguration("measure has an empty support");
    return best;
}

// V on the nodes of a measure's grid (radial grids: along the ray from the centre).
double potential_at_node(const Potential& V, const EquilibriumMeasure& mu, std::size_t i) {
    if (mu.radial()) return V.value(mu.centre + Vec3{mu.density.node(i)[0], 0.0, 0.0});
    return V.value(mu.density.node(i));
}

// ---------------------------------------------------------------------------------------------
// Solvers.

struct LevelSolution {
    GridField zeta;
    GridField density;
    long sweeps = 0;
    double residual = 0.0;
};

GridField multiplier_density(const detail::StencilMatrix& A, const std::vector<double>& rhs, const GridField& zeta,
                             int d) {
    GridField mu = zeta.with_values(std::vector<double>(zeta.size(), 0.0));
    const double cd = cd_of(d);
    for (std::size_t i = 0; i < zeta.size(); ++i) {
        if (zeta[i] > 0.0) continue;
        const double lam = A.apply_row(i, zeta.values()) - rhs[i];
        mu[i] = std::max(0.0, lam) / (cd * zeta.cell_measure(i));
    }
    return mu;
}

LevelSolution solve_radial_level(const Potential& V, int d, double h, int N, const GridSpec& spec, int depth) {
    GridField zeta = GridField::radial(d, h * N, N + 1);
    detail::StencilMatrix A;
    for (int i = 0; i <= N; ++i) {
        double diag = 0.0;
        std::vector<std::pair<int, double>> nb;
        if (i > 0) {
            const double w = sphere_area(d) * std::pow((i - 0.5) * h, d - 1) / h;
            nb.push_back({i - 1, w});
            diag += w;
        }
        if (i < N) {
            const double w = sphere_area(d) * std::pow((i + 0.5) * h, d - 1) / h;
            nb.push_back({i + 1, w});
            diag += w;
        }
        A.add_row(diag);
        for (auto [j, w] : nb) A.add_neighbor(static_cast<std::uint32_t>(j), w);
    }
    std::vector<double> v(N + 1);
    for (int i = 0; i <= N; ++i) v[i] = V.radial_value(h * i);
    std::vector<double> rhs(N + 1);
    for (int i = 0; i <= N; ++i) rhs[i] = 0.5 * A.apply_row(i, v);
    rhs[N] += -cd_of(d);  // outward flux of g ∗ μ for unit mass

    std::vector<double> x(N + 1, 0.0);
    if (depth > 0 && N % 2 == 0 && N / 2 >= 32) {
        const auto coarse = solve_radial_level(V, d, 2.0 * h, N / 2, spec, depth - 1);
        for (int i = 0; i <= N; ++i) x[i] = coarse.zeta.sample({h * i, 0.0, 0.0});
    }
    const double omega = spec.omega > 0.0 ? spec.omega : detail::default_omega(N + 1);
    const auto res = detail::projected_sor(A, rhs, std::vector<double>(N + 1, 0.0), std::vector<char>(N + 1, 0), x,
                                           omega, spec.tolerance, spec.max_sweeps, "equilibrium (radial)");
    zeta.values() = x;
    LevelSolution out{zeta, multiplier_density(A, rhs, zeta, d), res.sweeps, res.residual};
    return out;
}

struct CartesianProblem {
    GridField grid;
    detail::StencilMatrix A;
    std::vector<double> half_av;
    std::vector<std::size_t> bnode;  // boundary faces: node, outward normal, area
    std::vector<Vec3> bnormal;
    std::vector<double> barea;
};

CartesianProblem build_cartesian(const Potential& V, int d, double h, int N, const Vec3& centre) {
    CartesianProblem P;
    const double L = 0.5 * h * N;
    Vec3 lower = centre - Vec3{L, L, d == 3 ? L : 0.0};
    if (d == 2) lower[2] = 0.0;
    P.grid = GridField::cartesian(d, lower, h, {N + 1, N + 1, d == 3 ? N + 1 : 1});
    const auto& shp = P.grid.shape();
    auto width = [&](int c) { return (c == 0 || c == N) ? 0.5 * h : h; };
    std::vector<double> v(P.grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = V.value(P.grid.node(i));
    for (int l = 0; l < shp[2]; ++l)
        for (int j = 0; j < shp[1]; ++j)
            for (int i = 0; i < shp[0]; ++i) {
                const int c[3] = {i, j, l};
                const std::size_t id = P.grid.index(i, j, l);
                double diag = 0.0;
                std::vector<std::pair<std::size_t, double>> nb;
                for (int a = 0; a < d; ++a) {
                    double area = 1.0;
                    for (int b = 0; b < d; ++b)
                        if (b != a) area *= width(c[b]);
                    for (int s : {-1, 1}) {
                        const int cn = c[a] + s;
                        if (cn < 0 || cn > N) {
                            Vec3 n{0.0, 0.0, 0.0};
                            n[a] = s;
                            P.bnode.push_back(id);
                            P.bnormal.push_back(n);
                            P.barea.push_back(area);
                            continue;
                        }
                        int cc[3] = {i, j, l};
                        cc[a] = cn;
                        const double w = area / h;
                        nb.push_back({P.grid.index(cc[0], cc[1], cc[2]), w});
                        diag += w;
                    }
                }
                P.A.add_row(diag);
                for (auto [jn, w] : nb) P.A.add_neighbor(static_cast<std::uint32_t>(jn), w);
            }
    P.half_av.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) P.half_av[i] = 0.5 * P.A.apply_row(i, v);
    return P;
}

// rhs = ½ A V + Σ_faces (∂_n U) |face|, with the fluxes scaled to total exactly −c_d.
std::vector<double> cartesian_rhs(const CartesianProblem& P, const std::vector<double>& flux, int d) {
    double total = 0.0;
    for (std::size_t f = 0; f < flux.size(); ++f) total += flux[f] * P.barea[f];
    const double scale = -cd_of(d) / total;
    std::vector<double> rhs = P.half_av;
    for (std::size_t f = 0; f < flux.size(); ++f) rhs[P.bnode[f]] += scale * flux[f] * P.barea[f];
    return rhs;
}

std::vector<double> monopole_flux(const CartesianProblem& P, const Vec3& source, int d) {
    std::vector<double> q(P.bnode.size());
    for (std::size_t f = 0; f < q.size(); ++f) {
        const Vec3 y = P.grid.node(P.bnode[f]) - source;
        const double r = norm(y);
        q[f] = -dot(y, P.bnormal[f]) / std::pow(r, d);
    }
    return q;
}

std::vector<double> measure_flux(const CartesianProblem& P, const GridField& density, int d) {
    const auto m = masses(density);
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i] > 0.0) support.push_back(i);
    std::vector<double> q(P.bnode.size(), 0.0);
    for (std::size_t f = 0; f < q.size(); ++f) {
        const Vec3 x = P.grid.node(P.bnode[f]);
        double s = 0.0;
        for (std::size_t j : support) {
            const Vec3 y = x - density.node(j);
            s += -m[j] * dot(y, P.bnormal[f]) / std::pow(norm(y), d);
        }
        q[f] = s;
    }
    return q;
}

LevelSolution solve_cartesian_level(const Potential& V, int d, double h, int N, const Vec3& centre,
                                    const GridSpec& spec, int depth) {
    const CartesianProblem P = build_cartesian(V, d, h, N, centre);
    std::vector<double> x(P.grid.size(), 0.0);
    if (depth > 0 && N % 2 == 0 && N / 2 >= 16) {
        const auto coarse = solve_cartesian_level(V, d, 2.0 * h, N / 2, centre, spec, depth - 1);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::max(0.0, coarse.zeta.sample(P.grid.node(i)));
    }
    const double omega = spec.omega > 0.0 ? spec.omega : detail::default_omega(N + 1);
    const std::vector<double> lower(x.size(), 0.0);
    const std::vector<char> fixed(x.size(), 0);

    auto flux = monopole_flux(P, centre, d);
    auto rhs = cartesian_rhs(P, flux, d);
    auto res = detail::projected_sor(P.A, rhs, lower, fixed, x, omega, spec.tolerance, spec.max_sweeps,
                                     "equilibrium (grid)");
    long sweeps = res.sweeps;
    GridField zeta = P.grid.with_values(x);
    GridField mu = multiplier_density(P.A, rhs, zeta, d);
    if (!V.is_radial()) {
        // Replace the monopole flux by the flux of the computed measure until it settles.
        for (int it = 0; it < 6; ++it) {
            const auto next = measure_flux(P, mu, d);
            double change = 0.0, scale = 0.0;
            for (std::size_t f = 0; f < next.size(); ++f) {
                change = std::max(change, std::abs(next[f] - flux[f]));
                scale = std::max(scale, std::abs(next[f]));
            }
            flux = next;
            rhs = cartesian_rhs(P, flux, d);
            res = detail::projected_sor(P.A, rhs, lower, fixed, x, omega, spec.tolerance, spec.max_sweeps,
                                        "equilibrium (grid)");
            sweeps += res.sweeps;
            zeta = P.grid.with_values(x);
            mu = multiplier_density(P.A, rhs, zeta, d);
            if (change <= 1e-9 * scale) break;
        }
    }
    return {zeta, mu, sweeps, res.residual};
}

double complementarity(const GridField& zeta, const GridField& mu) {
    double c = 0.0;
    for (std::size_t i = 0; i < zeta.size(); ++i) c = std::max(c, std::min(std::abs(zeta[i]), std::abs(mu[i])));
    return c;
}

Vec3 potential_minimizer(const Potential& V) {
    if (V.is_radial()) return V.centre();
    const int d = V.dim();
    Vec3 best{0.0, 0.0, 0.0};
    double bv = std::numeric_limits<double>::infinity();
    const int n = 40;
    const double L = 4.0;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            for (int k = 0; k <= (d == 3 ? n : 0); ++k) {
                const Vec3 x{-L + 2.0 * L * i / n, -L + 2.0 * L * j / n, d == 3 ? -L + 2.0 * L * k / n : 0.0};
                const double v = V.value(x);
                if (v < bv) {
                    bv = v;
                    best = x;
                }
            }
    return best;
}

bool touches_boundary(const GridField& mu) {
    const auto& s = mu.shape();
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] <= 0.0) continue;
        if (mu.geometry() == GridGeometry::Radial) {
            if (static_cast<int>(i) >= s[0] - 2) return true;
            continue;
        }
        const std::size_t c[3] = {i % s[0], (i / s[0]) % s[1], i / (static_cast<std::size_t>(s[0]) * s[1])};
        for (int a = 0; a < mu.dim(); ++a)
            if (c[a] <= 1 || static_cast<int>(c[a]) >= s[a] - 2) return true;
    }
    return false;
}

void check_laplacian_on_support(const Potential& V, const EquilibriumMeasure& mu) {
    // Candidate support: the sublevel set of V bounded by its largest value on the coincidence set.
    double vmax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < mu.support_mask.size(); ++i)
        if (mu.support_mask[i] > 0.5) vmax = std::max(vmax, potential_at_node(V, mu, i));
    for (std::size_t i = 0; i < mu.density.size(); ++i) {
        if (potential_at_node(V, mu, i) > vmax) continue;
        const Vec3 x = mu.radial() ? mu.centre + Vec3{mu.density.node(i)[0], 0.0, 0.0} : mu.density.node(i);
        if (V.laplacian(x) < -1e-8)
            throw ModelError("potential has negative Laplacian on the candidate support; V is outside the obstacle class");
    }
}

}  // namespace

// ---------------------------------------------------------------------------------------------

double EquilibriumMeasure::density_at(const Vec3& x) const {
    if (radial()) return density.sample(x - centre);
    return density.sample(x);
}

bool EquilibriumMeasure::in_support(const Vec3& x) const { return distance_to_support(x) == 0.0; }

double EquilibriumMeasure::distance_to_support(const Vec3& x) const {
    const double h = density.spacing();
    double best = std::numeric_limits<double>::infinity();
    if (radial()) {
        const double r = norm(x - centre);
        for (std::size_t i = 0; i < support_mask.size(); ++i) {
            if (support_mask[i] < 0.5) continue;
            const double ri = h * static_cast<double>(i);
            best = std::min(best, std::max(0.0, std::abs(r - ri) - 0.5 * h));
        }
        return best;
    }
    for (std::size_t i = 0; i < support_mask.size(); ++i) {
        if (support_mask[i] < 0.5) continue;
        const Vec3 y = x - density.node(i);
        double dd = 0.0;
        for (int a = 0; a < dim(); ++a) dd += std::pow(std::max(0.0, std::abs(y[a]) - 0.5 * h), 2);
        best = std::min(best, std::sqrt(dd));
    }
    return best;
}

std::vector<Vec3> EquilibriumMeasure::sample(std::size_t count, std::mt19937_64& rng) const {
    const auto m = masses(density);
    std::discrete_distribution<std::size_t> pick(m.begin(), m.end());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double h = density.spacing();
    const int d = dim();
    std::vector<Vec3> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = pick(rng);
        if (radial()) {
            const double r0 = h * static_cast<double>(i);
            const double a = std::max(0.0, r0 - 0.5 * h), b = std::min(density.extent(), r0 + 0.5 * h);
            const double r = std::pow(std::pow(a, d) + u(rng) * (std::pow(b, d) - std::pow(a, d)), 1.0 / d);
            Vec3 dir{gauss(rng), gauss(rng), d == 3 ? gauss(rng) : 0.0};
            out.push_back(centre + (r / norm(dir)) * dir);
        } else {
            Vec3 x = density.node(i);
            const auto& s = density.shape();
            const std::size_t c[3] = {i % s[0], (i / s[0]) % s[1], i / (static_cast<std::size_t>(s[0]) * s[1])};
            for (int a = 0; a < d; ++a) {
                const double lo = c[a] == 0 ? 0.0 : -0.5 * h;
                const double hi = static_cast<int>(c[a]) == s[a] - 1 ? 0.0 : 0.5 * h;
                x[a] += lo + (hi - lo) * u(rng);
            }
            out.push_back(x);
        }
    }
    return out;
}

EquilibriumMeasure EquilibriumMeasure::from_density(GridField density) {
    for (double v : density.values())
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidParameter("density must be finite and non-negative");
    const double m = density.integrate();
    if (!(m > 0.0)) throw InvalidParameter("density has zero mass");
    for (double& v : density.values()) v /= m;
    EquilibriumMeasure mu;
    mu.support_mask = density.with_values(std::vector<double>(density.size(), 0.0));
    for (std::size_t i = 0; i < density.size(); ++i) mu.support_mask[i] = density[i] > 0.0 ? 1.0 : 0.0;
    mu.density = std::move(density);
    mu.el_constant = std::numeric_limits<double>::quiet_NaN();
    return mu;
}

EquilibriumMeasure solve_equilibrium_measure(const Potential& V, const GridSpec& spec) {
    const int d = V.dim();
    if (!(spec.spacing > 0.0)) throw InvalidParameter("grid spacing must be positive");
    if (!V.is_confining()) throw ModelError("potential is not confining");
    const double h = spec.spacing;
    double L = spec.half_width > 0.0 ? spec.half_width : 2.0;
    const bool radial = V.is_radial() && spec.use_radial_symmetry;
    const int depth = 8;

    for (int attempt = 0; attempt <= spec.max_enlargements; ++attempt) {
        // The node count is rounded so that every cascade level halves exactly.
        const int unit = 1 << 4;
        int N = static_cast<int>(std::ceil((radial ? L : 2.0 * L) / h / unit)) * unit;
        LevelSolution sol;
        EquilibriumMeasure mu;
        if (radial) {
            sol = solve_radial_level(V, d, h, N, spec, depth);
            mu.centre = V.centre();
        } else {
            sol = solve_cartesian_level(V, d, h, N, potential_minimizer(V), spec, depth);
        }
        if (touches_boundary(sol.density)) {
            L *= 1.5;
            continue;
        }
        const double mass = sol.density.integrate();
        for (double& v : sol.density.values()) v /= mass;
        mu.density = sol.density;
        mu.support_mask = sol.density.with_values(std::vector<double>(sol.density.size(), 0.0));
        for (std::size_t i = 0; i < sol.density.size(); ++i) mu.support_mask[i] = sol.zeta[i] == 0.0 ? 1.0 : 0.0;
        mu.zeta = sol.zeta;
        mu.stats.sweeps = sol.sweeps;
        mu.stats.enlargements = attempt;
        mu.stats.complementarity = complementarity(sol.zeta, sol.density);
        check_laplacian_on_support(V, mu);
        const std::size_t k = el_node(mu);
        mu.el_constant = 2.0 * measure_potential(mu, radial ? mu.centre + Vec3{mu.density.node(k)[0], 0, 0}
                                                             : mu.density.node(k)) +
                         potential_at_node(V, mu, k);
        return mu;
    }
    throw DomainError("support of the equilibrium measure reaches the largest admissible domain");
}

double measure_potential(const EquilibriumMeasure& mu, const Vec3& x) {
    const int d = mu.dim();
    if (mu.radial()) return radial_potential(d, shells_of(mu.density), norm(x - mu.centre));
    const double h = mu.density.spacing();
    double u = 0.0;
    for (std::size_t j = 0; j < mu.density.size(); ++j) {
        if (mu.density[j] == 0.0) continue;
        const double r = norm(x - mu.density.node(j));
        if (r < 1e-9 * h) {
            u += mu.density[j] * cell_point_integral(d, h);
        } else {
            u += mu.density[j] * mu.density.cell_measure(j) * kernel(d, r);
        }
    }
    return u;
}

double mean_field_energy(const EquilibriumMeasure& mu, const Potential& V) {
    const int d = mu.dim();
    if (V.dim() != d) throw InvalidParameter("measure and potential dimensions differ");
    const double h = mu.density.spacing();
    if (mu.radial()) {
        const auto shells = shells_of(mu.density);
        const auto& rule = quad::gauss_legendre(24);
        double pair = 0.0, pot = 0.0, outer = 0.0;  // outer = Σ_{k>j} I_k, accumulated from the outside in
        for (std::size_t k = shells.size(); k-- > 0;) {
            const Shell& s = shells[k];
            const double mk = shell_mass(d, s, s.a, s.b);
            pair += 2.0 * mk * outer;
            // self term 2∫ g(r) M(r) dM(r)
            double self = 0.0, vint = 0.0;
            for (std::size_t q = 0; q < rule.x.size(); ++q) {
                const double r = s.a + 0.5 * (s.b - s.a) * (rule.x[q] + 1.0);
                const double w = 0.5 * (s.b - s.a) * rule.w[q];
                const double dm = s.rho * sphere_area(d) * std::pow(r, d - 1);
                self += w * 2.0 * kernel(d, r) * shell_mass(d, s, s.a, r) * dm;
                vint += w * V.value(mu.centre + Vec3{r, 0.0, 0.0}) * dm;
            }
            pair += self;
            pot += vint;
            outer += shell_potential_integral(d, s.rho, s.a, s.b);
        }
        return pair + pot;
    }
    const auto m = masses(mu.density);
    const auto u = convolve_offdiagonal(mu.density, m);
    double pair = 0.0, pot = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] == 0.0) continue;
        const double cell = mu.density.cell_measure(i);
        const bool full = std::abs(cell - std::pow(h, d)) < 1e-12 * std::pow(h, d);
        pair += m[i] * u[i] + (full ? m[i] * m[i] * cell_pair_mean(d, h) : 0.0);
        const Vec3 x = mu.density.node(i);
        pot += m[i] * (V.value(x) + (full ? h * h / 24.0 * V.laplacian(x) : 0.0));
    }
    return pair + pot;
}

GridField effective_potential_zeta(const Potential& V, const EquilibriumMeasure& mu0, double tolerance) {
    const int d = mu0.dim();
    const double h = mu0.density.spacing();
    const double tol = tolerance >= 0.0 ? tolerance : std::max(1e-8, 4.0 * h * h);
    std::vector<double> u;
    if (mu0.radial()) {
        const auto shells = shells_of(mu0.density);
        u.resize(mu0.density.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = radial_potential(d, shells, mu0.density.node(i)[0]);
    } else {
        u = cartesian_potential(mu0.density);
    }
    double c = mu0.el_constant;
    if (!std::isfinite(c)) {
        const std::size_t k = el_node(mu0);
        c = 2.0 * u[k] + potential_at_node(V, mu0, k);
    }
    GridField z = mu0.density.with_values(std::vector<double>(u.size(), 0.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (mu0.support_mask[i] > 0.5) continue;
        z[i] = u[i] + 0.5 * potential_at_node(V, mu0, i) - 0.5 * c;
        worst = std::min(worst, z[i]);
    }
    if (worst < -tol)
        throw InvalidConfiguration("effective potential is negative (" + std::to_string(worst) +
                                   "): the measure does not solve the equilibrium problem for this V");
    return z;
}

}  // namespace coulomb::eq
