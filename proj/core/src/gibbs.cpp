#include "coulomb/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>

#include "coulomb/equilibrium.hpp"
#include "coulomb/errors.hpp"
#include "coulomb/quadrature.hpp"

namespace coulomb::gibbs {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double pair_energy(int d, const Vec3& a, const Vec3& b) {
    const double r2 = norm2(a - b);
    if (!(r2 > 0.0)) return kInf;
    return d == 2 ? -0.5 * std::log(r2) : 1.0 / std::sqrt(r2);
}

std::vector<Vec3> initial_points(int n, const Potential& V, std::mt19937_64& rng) {
    try {
        eq::GridSpec spec;
        spec.spacing = 1.0 / 64.0;
        return eq::solve_equilibrium_measure(V, spec).sample(static_cast<std::size_t>(n), rng);
    } catch (const Error&) {
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec3> p(n, Vec3{0.0, 0.0, 0.0});
    for (auto& x : p)
        for (int a = 0; a < V.dim(); ++a) x[a] = V.centre()[a] + u(rng);
    return p;
}

}  // namespace

ChainState ChainState::make(PointConfiguration config, double beta, double step_scale, std::uint64_t seed,
                            const Potential& V) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidParameter("beta must be finite and non-negative");
    if (!(step_scale > 0.0)) throw InvalidParameter("step scale must be positive");
    config.validate();
    ChainState s;
    s.config = std::move(config);
    s.beta = beta;
    s.step_scale = step_scale;
    s.rng_seed = seed;
    s.rng.seed(seed);
    s.energy = gas::hamiltonian(s.config, V);
    return s;
}

double energy_change(const PointConfiguration& config, std::size_t i, const Vec3& y, const Potential& V) {
    const int d = config.dim;
    const auto& x = config.points;
    double dp = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (j == i) continue;
        const double e = pair_energy(d, y, x[j]);
        if (e == kInf) return kInf;
        dp += e - pair_energy(d, x[i], x[j]);
    }
    return 2.0 * dp + static_cast<double>(x.size()) * (V.value(y) - V.value(x[i]));
}

double acceptance_probability(double beta, double delta_h) {
    if (beta == 0.0) return 1.0;
    if (delta_h <= 0.0) return 1.0;
    return std::exp(-beta * delta_h);
}

double proposal_density(const Vec3& from, const Vec3& to, double step, int dim) {
    const double r2 = norm2(to - from);
    return std::exp(-0.5 * r2 / (step * step)) / std::pow(std::sqrt(2.0 * kPi) * step, dim);
}

double transition_density(const PointConfiguration& config, std::size_t i, const Vec3& y, double beta, double step,
                          const Potential& V) {
    const double q = proposal_density(config.points[i], y, step, config.dim);
    return q * acceptance_probability(beta, energy_change(config, i, y, V)) / static_cast<double>(config.size());
}

ChainState& metropolis_step(ChainState& s, const Potential& V) {
    const std::size_t n = s.config.size();
    if (n == 0) return s;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t i = pick(s.rng);
    Vec3 y = s.config.points[i];
    for (int a = 0; a < s.config.dim; ++a) y[a] += s.step_scale * gauss(s.rng);
    const double dh = energy_change(s.config, i, y, V);
    const double p = acceptance_probability(s.beta, dh);
    ++s.proposed;
    if (p >= 1.0 || u(s.rng) < p) {
        s.config.points[i] = y;
        if (std::isfinite(dh)) s.energy += dh;
        ++s.accepted;
    }
    return s;
}

double psi6(const PointConfiguration& config, const Psi6Options& options) {
    if (config.dim != 2) throw InvalidParameter("psi6 is defined in two dimensions");
    const auto& x = config.points;
    const std::size_t n = x.size();
    if (n < 7) throw InvalidParameter("psi6 needs at least 7 points");
    std::complex<double> total{0.0, 0.0};
    std::size_t core = 0;
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (norm(x[j] - options.centre) > options.core_radius) continue;
        for (std::size_t k = 0; k < n; ++k) dist[k] = {k == j ? kInf : norm2(x[k] - x[j]), k};
        std::sort(dist.begin(), dist.end());
        // points tied with the sixth neighbour are all included
        const double cut = dist[5].first * (1.0 + 1e-9);
        std::complex<double> local{0.0, 0.0};
        std::size_t m = 0;
        for (; m < n - 1 && dist[m].first <= cut; ++m) {
            const Vec3 b = x[dist[m].second] - x[j];
            local += std::polar(1.0, 6.0 * std::atan2(b[1], b[0]));
        }
        total += local / static_cast<double>(m);
        ++core;
    }
    if (core == 0) throw UndefinedObservable("no points inside the psi6 core");
    return std::abs(total) / static_cast<double>(core);
}

double integrated_autocorrelation(const std::vector<double>& x) {
    const std::size_t N = x.size();
    if (N < 4) return 1.0;
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(N);
    double c0 = 0.0;
    for (double v : x) c0 += (v - mean) * (v - mean);
    c0 /= static_cast<double>(N);
    if (!(c0 > 0.0)) return 1.0;
    double tau = 1.0;
    for (std::size_t t = 1; t < N / 2; ++t) {
        double c = 0.0;
        for (std::size_t k = 0; k + t < N; ++k) c += (x[k] - mean) * (x[k + t] - mean);
        c /= static_cast<double>(N) * c0;
        tau += 2.0 * c;
        if (static_cast<double>(t) >= 5.0 * tau) break;
    }
    return std::max(tau, 1.0);
}

std::pair<double, double> batch_mean(const std::vector<double>& x) {
    const std::size_t N = x.size();
    if (N == 0) return {std::numeric_limits<double>::quiet_NaN(), kInf};
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(N);
    constexpr std::size_t B = 20;
    if (N < 2 * B) {
        double v = 0.0;
        for (double a : x) v += (a - mean) * (a - mean);
        return {mean, N > 1 ? std::sqrt(v / static_cast<double>(N - 1) / static_cast<double>(N)) : kInf};
    }
    const std::size_t len = N / B;
    std::vector<double> m(B, 0.0);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t k = b * len; k < (b + 1) * len; ++k) m[b] += x[k];
        m[b] /= static_cast<double>(len);
    }
    const double mm = std::accumulate(m.begin(), m.end(), 0.0) / B;
    double v = 0.0;
    for (double a : m) v += (a - mm) * (a - mm);
    return {mean, std::sqrt(v / (B - 1) / B)};
}

ChainStats run_chain(int n, double beta, const Potential& V, long steps, long burn_in, std::uint64_t seed,
                     const ChainOptions& opt) {
    if (n < 1) throw InvalidParameter("n must be at least 1");
    if (burn_in < 0 || steps <= burn_in) throw InvalidParameter("steps must exceed burn_in");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidParameter("beta must be finite and non-negative");
    const int d = V.dim();

    std::mt19937_64 init_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    PointConfiguration start{d, {}};
    if (opt.initial) {
        start = *opt.initial;
        if (static_cast<int>(start.size()) != n || start.dim != d)
            throw InvalidParameter("initial configuration does not match n and the dimension");
    } else {
        start.points = initial_points(n, V, init_rng);
    }
    const double step0 = opt.step_scale > 0.0 ? opt.step_scale : 0.5 / std::sqrt(n * std::max(beta, 1.0));
    ChainState s = ChainState::make(std::move(start), beta, step0, seed, V);

    ChainStats st;
    const int bins = d == 2 ? opt.histogram_bins : std::min(opt.histogram_bins, 24);
    const double L = opt.histogram_half_width;
    const double hb = 2.0 * L / bins;
    Vec3 lower{-L + 0.5 * hb, -L + 0.5 * hb, d == 3 ? -L + 0.5 * hb : 0.0};
    lower = lower + V.centre();
    st.density_histogram = GridField::cartesian(d, lower, hb, {bins, bins, d == 3 ? bins : 1});

    auto sweep = [&] {
        for (int k = 0; k < n; ++k) metropolis_step(s, V);
    };
    auto resync = [&](bool record) {
        const double full = gas::hamiltonian(s.config, V);
        if (record) st.max_energy_drift = std::max(st.max_energy_drift, std::abs(full - s.energy));
        s.energy = full;
    };

    // burn-in: annealing ramp on the first half, step tuning throughout
    const long ramp = opt.anneal ? burn_in / 2 : 0;
    const double beta_lo = std::min(beta, 1.0);
    std::uint64_t acc0 = 0, prop0 = 0;
    double last_window = -1.0;
    for (long sw = 0; sw < burn_in; ++sw) {
        if (sw < ramp && beta_lo > 0.0) {
            s.beta = beta * std::pow(beta_lo / beta, 1.0 - static_cast<double>(sw) / ramp);
        } else {
            s.beta = beta;
        }
        sweep();
        if ((sw + 1) % opt.tune_window == 0) {
            const double a = static_cast<double>(s.accepted - acc0) / static_cast<double>(std::max<std::uint64_t>(1, s.proposed - prop0));
            last_window = a;
            if (a < 0.3) s.step_scale *= a < 0.1 ? 0.5 : 0.8;
            else if (a > 0.5) s.step_scale = std::min(s.step_scale * (a > 0.9 ? 2.0 : 1.25), 1e3);
            acc0 = s.accepted;
            prop0 = s.proposed;
        }
        if ((sw + 1) % opt.resync_every == 0) resync(false);
    }
    s.beta = beta;
    resync(false);
    if (burn_in >= opt.tune_window && (last_window < 0.3 || last_window > 0.5))
        st.warnings.push_back("step tuning ended outside the 0.3-0.5 acceptance band (last window " +
                              std::to_string(last_window) + ")");

    const std::uint64_t acc_start = s.accepted, prop_start = s.proposed;
    const long measure = steps - burn_in;
    std::vector<double> counts(st.density_histogram.size(), 0.0);
    bool psi6_ok = opt.psi6_every > 0 && d == 2 && n >= 7;
    st.energy_trace.reserve(static_cast<std::size_t>(measure));
    for (long sw = 0; sw < measure; ++sw) {
        sweep();
        if ((sw + 1) % opt.resync_every == 0) resync(true);
        st.energy_trace.push_back(s.energy);
        for (const auto& p : s.config.points) {
            int idx[3] = {0, 0, 0};
            for (int a = 0; a < d; ++a)
                idx[a] = std::clamp(static_cast<int>(std::floor((p[a] - lower[a] + 0.5 * hb) / hb)), 0, bins - 1);
            counts[st.density_histogram.index(idx[0], idx[1], idx[2])] += 1.0;
        }
        if (psi6_ok && (sw + 1) % opt.psi6_every == 0) {
            try {
                st.psi6_trace.push_back(psi6(s.config, opt.psi6));
            } catch (const UndefinedObservable& e) {
                st.warnings.push_back(e.what());
                psi6_ok = false;
            }
        }
        if (opt.snapshot_every > 0 && (sw + 1) % opt.snapshot_every == 0) st.snapshots.push_back(s.config);
    }
    for (double& c : counts) c /= static_cast<double>(measure);
    st.density_histogram.values() = std::move(counts);
    st.acceptance = static_cast<double>(s.accepted - acc_start) / static_cast<double>(std::max<std::uint64_t>(1, s.proposed - prop_start));
    st.step_scale = s.step_scale;
    st.autocorrelation_time = integrated_autocorrelation(st.energy_trace);
    std::tie(st.mean_energy, st.energy_standard_error) = batch_mean(st.energy_trace);
    if (!st.psi6_trace.empty()) std::tie(st.mean_psi6, st.psi6_standard_error) = batch_mean(st.psi6_trace);
    st.final_config = s.config;
    return st;
}

std::vector<double> geometric_beta_grid(double beta0, double beta, int per_decade) {
    if (!(beta0 > 0.0) || !(beta > beta0) || per_decade < 1) throw InvalidParameter("need 0 < beta0 < beta and per_decade >= 1");
    const int m = std::max(2, static_cast<int>(std::ceil(per_decade * std::log10(beta / beta0))) + 1);
    std::vector<double> g(m);
    for (int k = 0; k < m; ++k) g[k] = beta0 * std::pow(beta / beta0, static_cast<double>(k) / (m - 1));
    g.back() = beta;
    return g;
}

FreeEnergyEstimate free_energy_leading(int n, double beta, const Potential& V, const std::vector<double>& grid,
                                       const FreeEnergyOptions& opt) {
    if (V.kind() != Potential::Kind::Quadratic)
        throw InvalidParameter("the ideal-gas reference is closed form only for quadratic potentials");
    if (n < 2) throw InvalidParameter("n must be at least 2");
    if (grid.size() < 3) throw InvalidParameter("beta grid needs at least three points");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (!(grid[k] > 0.0)) throw InvalidParameter("beta grid must be positive");
        if (k > 0 && !(grid[k] > grid[k - 1])) throw InvalidParameter("beta grid must be increasing");
    }
    if (std::abs(grid.back() - beta) > 1e-12 * beta) throw InvalidParameter("beta grid must end at beta");

    const int d = V.dim();
    const double nd = n, c = V.coefficient();
    auto log_z_ideal = [&](double b) { return nd * 0.5 * d * std::log(kPi / (b * nd * c)); };
    const double b0 = grid.front();
    // log Z(β_0): ideal gas plus the first cumulant of the pair energy P = Σ_{i≠j} g under it;
    // x_i − x_j has variance 1/(b n c) per coordinate.
    const double pairs = nd * (nd - 1.0);
    auto mean_pairs = [&](double b) {
        const double s2 = 1.0 / (b * nd * c);
        return pairs * (d == 2 ? -0.5 * (std::log(2.0 * s2) - std::numbers::egamma) : std::sqrt(2.0 / (kPi * s2)));
    };
    const double s2 = 1.0 / (b0 * nd * c);

    FreeEnergyEstimate est;
    est.beta = beta;
    est.reference_log_z = log_z_ideal(b0) - b0 * mean_pairs(b0);

    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * s2));
    PointConfiguration cur{d, std::vector<Vec3>(n, V.centre())};
    for (auto& p : cur.points)
        for (int a = 0; a < d; ++a) p[a] += gauss(rng);

    std::vector<double> f(grid.size()), e(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        ChainOptions co = opt.chain;
        co.initial = cur;
        co.psi6_every = 0;
        co.snapshot_every = 0;
        co.anneal = false;
        if (co.step_scale <= 0.0) co.step_scale = 0.5 / std::sqrt(nd * grid[k] * c);
        const auto st = run_chain(n, grid[k], V, opt.sweeps, opt.burn_in, opt.seed + 7919 * (k + 1), co);
        est.grid.push_back({grid[k], st.mean_energy, st.energy_standard_error, st.acceptance, st.autocorrelation_time});
        for (const auto& w : st.warnings) est.warnings.push_back("beta " + std::to_string(grid[k]) + ": " + w);
        if (!st.warnings.empty() || static_cast<double>(opt.sweeps - opt.burn_in) < 50.0 * st.autocorrelation_time)
            est.flagged = true;
        f[k] = st.mean_energy - 0.5 * nd * d / grid[k];
        e[k] = st.energy_standard_error;
        cur = st.final_config;
    }
    // ∫ f db = ∫ f e^u du, u = log b, with f interpolated by the two three-point quadratics in u
    // that share each interval (averaged; a single linear piece when only two nodes exist)
    double integral = 0.0, var = 0.0;
    const std::size_t K = grid.size();
    std::vector<double> u(K), w(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) u[k] = std::log(grid[k]);
    auto add_fit = [&](std::size_t k, std::size_t first, double share) {
        const auto rule = quad::gauss_legendre(16, u[k], u[k + 1]);
        for (std::size_t q = 0; q < rule.x.size(); ++q) {
            const double x = rule.x[q], ex = std::exp(x) * rule.w[q] * share;
            for (std::size_t i = first; i < first + 3; ++i) {
                double L = 1.0;
                for (std::size_t j = first; j < first + 3; ++j)
                    if (j != i) L *= (x - u[j]) / (u[i] - u[j]);
                w[i] += L * ex;
            }
        }
    };
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const bool left = k >= 1, right = k + 2 < K;
        if (left && right) {
            add_fit(k, k - 1, 0.5);
            add_fit(k, k, 0.5);
        } else if (left) {
            add_fit(k, k - 1, 1.0);
        } else {
            add_fit(k, k, 1.0);
        }
    }
    for (std::size_t k = 0; k < grid.size(); ++k) {
        integral += w[k] * f[k];
        var += w[k] * w[k] * e[k] * e[k];
    }
    est.log_z = log_z_ideal(beta) + (est.reference_log_z - log_z_ideal(b0)) - integral;
    est.error = std::sqrt(var);
    est.leading_term = (-est.log_z / beta + 0.5 * nd * std::log(nd)) / (nd * nd);
    est.leading_term_error = est.error / (beta * nd * nd);
    return est;
}

}  // namespace coulomb::gibbs
