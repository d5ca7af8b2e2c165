#include "coulomb/coulomb_gas.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <random>
#include <thread>

#include "coulomb/errors.hpp"

namespace coulomb::gas {

namespace {

constexpr double kPi = std::numbers::pi;

void check_dim(int d) {
    if (d != 2 && d != 3) throw InvalidConfiguration("dimension must be 2 or 3");
}

void check_coordinates(const PointConfiguration& c) {
    check_dim(c.dim);
    for (const auto& p : c.points)
        for (int a = 0; a < 3; ++a) {
            if (!std::isfinite(p[a])) throw InvalidConfiguration("non-finite coordinate");
            if (a >= c.dim && p[a] != 0.0) throw InvalidConfiguration("coordinate beyond the dimension is nonzero");
        }
}

// Pair force 2∇g(x_i − x_j) and pair energy g(x_i − x_j); throws on coincidence.
inline double pair_terms(int d, const Vec3& xi, const Vec3& xj, Vec3* grad) {
    const Vec3 r = xi - xj;
    const double r2 = norm2(r);
    if (!(r2 > 0.0)) throw SingularityError("coincident points");
    if (d == 2) {
        if (grad) *grad = (-1.0 / r2) * r;
        return -0.5 * std::log(r2);
    }
    const double inv = 1.0 / std::sqrt(r2);
    if (grad) *grad = (-inv * inv * inv) * r;
    return inv;
}

}  // namespace

double kernel(int dim, double r) { return dim == 2 ? -std::log(r) : 1.0 / r; }

void PointConfiguration::validate() const {
    check_coordinates(*this);
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j)
            if (points[i] == points[j]) throw SingularityError("coincident points " + std::to_string(i) + ", " + std::to_string(j));
}

PointConfiguration PointConfiguration::read_csv(std::istream& is, int dim) {
    check_dim(dim);
    PointConfiguration c{dim, {}};
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        Vec3 p{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a)
            if (!(ls >> p[a])) {
                if (c.points.empty() && a == 0) break;  // header row
                throw InvalidConfiguration("malformed point row: " + line);
            }
        if (ls.fail() && c.points.empty()) continue;
        c.points.push_back(p);
    }
    c.validate();
    return c;
}

void PointConfiguration::write_csv(std::ostream& os) const {
    os << (dim == 2 ? "x,y\n" : "x,y,z\n");
    os.precision(17);
    for (const auto& p : points) {
        os << p[0] << ',' << p[1];
        if (dim == 3) os << ',' << p[2];
        os << '\n';
    }
}

double hamiltonian(const PointConfiguration& config, const Potential& V) {
    check_coordinates(config);
    const auto& x = config.points;
    const std::size_t n = x.size();
    double pairs = 0.0, ext = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) pairs += pair_terms(config.dim, x[i], x[j], nullptr);
        ext += V.value(x[i]);
    }
    return 2.0 * pairs + static_cast<double>(n) * ext;
}

std::vector<Vec3> gradient(const PointConfiguration& config, const Potential& V) {
    check_coordinates(config);
    const auto& x = config.points;
    const std::size_t n = x.size();
    std::vector<Vec3> g(n, Vec3{0.0, 0.0, 0.0});
    Vec3 f;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            pair_terms(config.dim, x[i], x[j], &f);
            g[i] += 2.0 * f;
            g[j] += -2.0 * f;
        }
    for (std::size_t i = 0; i < n; ++i) g[i] += static_cast<double>(n) * V.gradient(x[i]);
    return g;
}

// ---------------------------------------------------------------------------------------------
// L-BFGS on the flattened coordinates.

namespace {

using Flat = std::vector<double>;

struct Objective {
    int dim;
    const Potential* V;

    PointConfiguration unflatten(const Flat& z) const {
        PointConfiguration c{dim, std::vector<Vec3>(z.size() / dim, Vec3{0.0, 0.0, 0.0})};
        for (std::size_t i = 0; i < c.points.size(); ++i)
            for (int a = 0; a < dim; ++a) c.points[i][a] = z[i * dim + a];
        return c;
    }
    double operator()(const Flat& z, Flat& g) const {
        const auto c = unflatten(z);
        const auto gv = gradient(c, *V);
        g.assign(z.size(), 0.0);
        for (std::size_t i = 0; i < gv.size(); ++i)
            for (int a = 0; a < dim; ++a) g[i * dim + a] = gv[i][a];
        return hamiltonian(c, *V);
    }
};

double dotf(const Flat& a, const Flat& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double max_point_norm(const Flat& g, int dim) {
    double m = 0.0;
    for (std::size_t i = 0; i < g.size(); i += dim) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) s += g[i + a] * g[i + a];
        m = std::max(m, s);
    }
    return std::sqrt(m);
}

StartRecord lbfgs(const Objective& obj, Flat& z, const MinimizeOptions& opt, std::vector<double>* history) {
    StartRecord rec;
    Flat g, gn, zn, d;
    double f = obj(z, g);
    if (history) history->push_back(f);
    std::deque<std::pair<Flat, Flat>> mem;  // (s, y)
    int consecutive_failures = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        rec.gradient_norm = max_point_norm(g, obj.dim);
        rec.iterations = it;
        if (rec.gradient_norm <= opt.tolerance) {
            rec.converged = true;
            break;
        }
        // two-loop recursion
        d = g;
        std::vector<double> alpha(mem.size());
        for (std::size_t k = mem.size(); k-- > 0;) {
            const auto& [s, y] = mem[k];
            alpha[k] = dotf(s, d) / dotf(y, s);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha[k] * y[i];
        }
        double scale;
        if (mem.empty()) {
            scale = 0.01 / std::max(rec.gradient_norm, 1e-300);
        } else {
            const auto& [s, y] = mem.back();
            scale = dotf(s, y) / dotf(y, y);
        }
        for (double& v : d) v *= scale;
        for (std::size_t k = 0; k < mem.size(); ++k) {
            const auto& [s, y] = mem[k];
            const double beta = dotf(y, d) / dotf(y, s);
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha[k] - beta) * s[i];
        }
        for (double& v : d) v = -v;
        double slope = dotf(g, d);
        if (!(slope < 0.0)) {
            mem.clear();
            d = g;
            for (double& v : d) v *= -0.01 / rec.gradient_norm;
            slope = dotf(g, d);
        }

        // Armijo backtracking. Near convergence the energy difference drops below rounding, so a
        // step is also taken when the energy is unchanged to rounding and the slope has not
        // reversed by more than it shrank.
        const double noise = 1e-13 * std::max(1.0, std::abs(f));
        double t = 1.0, fn = 0.0;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            zn = z;
            for (std::size_t i = 0; i < z.size(); ++i) zn[i] += t * d[i];
            try {
                fn = obj(zn, gn);
            } catch (const SingularityError&) {
                t *= 0.5;
                continue;
            }
            if (std::isfinite(fn)) {
                if (fn <= f + 1e-4 * t * slope) {
                    ok = true;
                    break;
                }
                if (fn <= f + noise && dotf(gn, d) <= -0.8 * slope) {
                    ok = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!ok) {
            ++rec.restarts;
            if (++consecutive_failures > 3 || mem.empty()) break;
            mem.clear();
            continue;
        }
        consecutive_failures = 0;
        Flat s(z.size()), y(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) {
            s[i] = zn[i] - z[i];
            y[i] = gn[i] - g[i];
        }
        if (dotf(s, y) > 1e-300) {
            mem.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
        }
        z.swap(zn);
        g.swap(gn);
        f = fn;
        if (history) history->push_back(f);
    }
    rec.energy = f;
    rec.gradient_norm = max_point_norm(g, obj.dim);
    if (rec.gradient_norm <= opt.tolerance) rec.converged = true;
    return rec;
}

std::uint64_t start_seed(std::uint64_t base, int k) {
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(k)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

template <class Sampler>
MinimizeResult multi_start(int n, int dim, const Potential& V, const MinimizeOptions& opt, Sampler&& sample) {
    if (n < 1) throw InvalidParameter("n must be at least 1");
    if (opt.starts < 1) throw InvalidParameter("starts must be at least 1");
    if (!(opt.tolerance > 0.0)) throw InvalidParameter("tolerance must be positive");
    const Objective obj{dim, &V};
    std::vector<StartRecord> recs(opt.starts);
    std::vector<Flat> finals(opt.starts);
    auto work = [&](int k) {
        const std::uint64_t seed = start_seed(opt.seed, k);
        std::mt19937_64 rng(seed);
        const auto pts = sample(static_cast<std::size_t>(n), rng);
        Flat z(static_cast<std::size_t>(n) * dim);
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < dim; ++a) z[i * dim + a] = pts[i][a];
        std::vector<double> hist;
        recs[k] = lbfgs(obj, z, opt, opt.record_history ? &hist : nullptr);
        recs[k].energy_history = std::move(hist);
        recs[k].seed = seed;
        finals[k] = std::move(z);
    };
    const int threads = std::clamp(opt.threads, 1, opt.starts);
    if (threads == 1) {
        for (int k = 0; k < opt.starts; ++k) work(k);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (int k = t; k < opt.starts; k += threads) work(k);
            });
    }

    MinimizeResult res;
    res.starts = recs;
    int best = -1;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int k = 0; k < opt.starts; ++k) {
        if (!recs[k].converged) continue;
        lo = std::min(lo, recs[k].energy);
        hi = std::max(hi, recs[k].energy);
        if (best < 0 || recs[k].energy < recs[best].energy) best = k;
    }
    if (best < 0) throw NumericalError("no minimization start converged", recs.front().gradient_norm);
    res.config = obj.unflatten(finals[best]);
    res.energy = recs[best].energy;
    res.gradient_norm = recs[best].gradient_norm;
    res.spread = hi - lo;
    for (const auto& r : recs)
        if (r.converged && r.energy - res.energy <= 1e-8 * std::max(1.0, std::abs(res.energy))) ++res.best_basin_hits;
    return res;
}

}  // namespace

MinimizeResult minimize_fekete(int n, const Potential& V, const eq::EquilibriumMeasure& mu0, const MinimizeOptions& options) {
    auto r = multi_start(n, V.dim(), V, options,
                         [&](std::size_t m, std::mt19937_64& rng) { return mu0.sample(m, rng); });
    r.seeded_from_mu0 = true;
    return r;
}

MinimizeResult minimize_fekete(int n, const Potential& V, const MinimizeOptions& options) {
    eq::GridSpec spec;
    spec.spacing = options.mu0_spacing;
    try {
        const auto mu0 = eq::solve_equilibrium_measure(V, spec);
        return minimize_fekete(n, V, mu0, options);
    } catch (const NumericalError&) {
    } catch (const DomainError&) {
    } catch (const ModelError&) {
    }
    const int d = V.dim();
    return multi_start(n, d, V, options, [&](std::size_t m, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<Vec3> p(m, Vec3{0.0, 0.0, 0.0});
        for (auto& x : p)
            for (int a = 0; a < d; ++a) x[a] = V.centre()[a] + u(rng);
        return p;
    });
}

void QuadraticForm::validate() const {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) throw InvalidParameter("quadratic form must be finite");
    if (!(a > 0.0) || !(a * c - b * b > 0.0)) throw InvalidParameter("quadratic form must be positive definite");
}

MinimizeResult minimize_local_wn(int n, const QuadraticForm& Q, const MinimizeOptions& options) {
    Q.validate();
    std::ostringstream expr;
    expr.precision(17);
    expr << Q.a << "*x^2 + " << 2.0 * Q.b << "*x*y + " << Q.c << "*y^2";
    const auto V = Potential::parse(2, expr.str());
    // starts uniform on {Q ≤ 1}: x = L^{-T} u with M = L Lᵀ
    const double l11 = std::sqrt(Q.a), l21 = Q.b / l11, l22 = std::sqrt(Q.c - l21 * l21);
    return multi_start(n, 2, V, options, [&](std::size_t m, std::mt19937_64& rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<Vec3> p(m);
        for (auto& x : p) {
            const double r = std::sqrt(u(rng)), th = 2.0 * kPi * u(rng);
            const double u1 = r * std::cos(th), u2 = r * std::sin(th);
            const double y = u2 / l22;
            x = {(u1 - l21 * y) / l11, y, 0.0};
        }
        return p;
    });
}

// ---------------------------------------------------------------------------------------------

std::vector<WindowCount> window_point_counts(const PointConfiguration& config, const eq::EquilibriumMeasure& mu0,
                                             std::span<const Vec3> centres, double ell, bool require_inside) {
    config.validate();
    const int d = config.dim;
    if (mu0.dim() != d) throw InvalidParameter("measure and configuration dimensions differ");
    if (!(ell > 0.0)) throw InvalidParameter("window side must be positive");
    const double n = static_cast<double>(config.size());
    const double s = std::pow(n, 1.0 / d);
    const int sub = d == 2 ? 160 : 40;
    std::vector<WindowCount> out;
    for (const Vec3& a : centres) {
        if (require_inside) {
            const int edge = 16;
            for (int i = 0; i <= edge; ++i)
                for (int j = 0; j <= edge; ++j)
                    for (int k = 0; k <= (d == 3 ? edge : 0); ++k) {
                        const bool on_face = i == 0 || i == edge || j == 0 || j == edge ||
                                             (d == 3 && (k == 0 || k == edge));
                        if (!on_face) continue;
                        Vec3 y = a;
                        y[0] += ell * (static_cast<double>(i) / edge - 0.5);
                        y[1] += ell * (static_cast<double>(j) / edge - 0.5);
                        if (d == 3) y[2] += ell * (static_cast<double>(k) / edge - 0.5);
                        if (!mu0.in_support((1.0 / s) * y))
                            throw InvalidParameter("window is not inside the blown-up support");
                    }
        }
        WindowCount w{a, ell, 0, 0.0, 0.0};
        for (const auto& p : config.points) {
            bool in = true;
            for (int c = 0; c < d; ++c) in = in && std::abs(s * p[c] - a[c]) <= 0.5 * ell;
            w.count += in ? 1 : 0;
        }
        // ∫_K μ_0(y/s) dy by the midpoint rule
        const double h = ell / sub;
        double acc = 0.0;
        for (int i = 0; i < sub; ++i)
            for (int j = 0; j < sub; ++j)
                for (int k = 0; k < (d == 3 ? sub : 1); ++k) {
                    Vec3 y{a[0] - 0.5 * ell + (i + 0.5) * h, a[1] - 0.5 * ell + (j + 0.5) * h, 0.0};
                    if (d == 3) y[2] = a[2] - 0.5 * ell + (k + 0.5) * h;
                    acc += mu0.density_at((1.0 / s) * y);
                }
        w.expected = acc * std::pow(h, d);
        w.deviation = std::abs(w.count - w.expected);
        out.push_back(w);
    }
    return out;
}

namespace {

// |B(0, r) ∩ B(c, a)| with |c| = d.
double lens_area(double r, double a, double d) {
    if (d >= r + a) return 0.0;
    if (d <= r - a) return kPi * a * a;
    if (d <= a - r) return kPi * r * r;
    const double c1 = std::clamp((d * d + r * r - a * a) / (2.0 * d * r), -1.0, 1.0);
    const double c2 = std::clamp((d * d + a * a - r * r) / (2.0 * d * a), -1.0, 1.0);
    const double k = (-d + r + a) * (d + r - a) * (d - r + a) * (d + r + a);
    return r * r * std::acos(c1) + a * a * std::acos(c2) - 0.5 * std::sqrt(std::max(0.0, k));
}

}  // namespace

RadialCdfCheck circle_law_cdf(std::span<const Vec3> points, int bins, double smoothing) {
    if (bins < 2) throw InvalidParameter("need at least two bins");
    if (points.empty()) throw InvalidParameter("no points");
    if (!(smoothing >= 0.0)) throw InvalidParameter("smoothing radius must be non-negative");
    RadialCdfCheck c;
    std::vector<double> rad;
    rad.reserve(points.size());
    for (const auto& p : points) rad.push_back(std::hypot(p[0], p[1]));
    std::sort(rad.begin(), rad.end());
    const double m = static_cast<double>(rad.size());
    for (int k = 1; k < bins; ++k) {
        const double q = static_cast<double>(k) / bins;
        const double r = std::sqrt(q);
        double F;
        if (smoothing == 0.0) {
            F = static_cast<double>(std::upper_bound(rad.begin(), rad.end(), r) - rad.begin()) / m;
        } else {
            double acc = 0.0;
            for (double d : rad) acc += lens_area(r, smoothing, d);
            F = acc / (kPi * smoothing * smoothing * m);
        }
        c.radii.push_back(r);
        c.expected.push_back(q);
        c.empirical.push_back(F);
        c.max_deviation = std::max(c.max_deviation, std::abs(F - q));
    }
    return c;
}

}  // namespace coulomb::gas
