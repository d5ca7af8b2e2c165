#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <map>
#include <numbers>

#include "coulomb/errors.hpp"
#include "coulomb/quadrature.hpp"
#include "coulomb/renormalized.hpp"

namespace coulomb::renorm {

namespace {

constexpr double kPi = std::numbers::pi;

double sphere_area(int d) { return d == 2 ? 2.0 * kPi : 4.0 * kPi; }

void check_dim(int d) {
    if (d != 2 && d != 3) throw InvalidParameter("smearing is defined for d = 2, 3");
}

double bump_raw(double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; }

double bump_norm(int d) {
    static const double n2 = 1.0 / quad::composite([](double t) { return 2.0 * kPi * t * bump_raw(t); }, 0.0, 1.0, 16);
    static const double n3 =
        1.0 / quad::composite([](double t) { return 4.0 * kPi * t * t * bump_raw(t); }, 0.0, 1.0, 16);
    return d == 2 ? n2 : n3;
}

// Mass of the unit profile inside radius t.
double profile_mass(SmearingShape shape, int d, double t) {
    if (t >= 1.0) return 1.0;
    if (shape == SmearingShape::UniformBall) return std::pow(t, d);
    const double c = bump_norm(d) * sphere_area(d);
    return c * quad::composite([&](double s) { return std::pow(s, d - 1) * bump_raw(s); }, 0.0, t, 4);
}

}  // namespace

double smearing_profile(SmearingShape shape, int dim, double r) {
    check_dim(dim);
    if (r >= 1.0) return 0.0;
    if (shape == SmearingShape::UniformBall) return dim == 2 ? 1.0 / kPi : 3.0 / (4.0 * kPi);
    return bump_norm(dim) * bump_raw(r);
}

double smearing_form_factor(SmearingShape shape, int dim, double q) {
    check_dim(dim);
    q = std::abs(q);
    if (shape == SmearingShape::UniformBall) {
        if (dim == 2) {
            if (q < 1e-4) return 1.0 - q * q / 8.0;
            return 2.0 * boost::math::cyl_bessel_j(1, q) / q;
        }
        if (q < 1e-3) return 1.0 - q * q / 10.0;
        return 3.0 * (std::sin(q) - q * std::cos(q)) / (q * q * q);
    }
    const int panels = 16 + static_cast<int>(q / 8.0);
    if (dim == 2)
        return quad::composite(
            [&](double r) { return 2.0 * kPi * r * smearing_profile(shape, 2, r) * boost::math::cyl_bessel_j(0, q * r); },
            0.0, 1.0, panels);
    return quad::composite(
        [&](double r) {
            const double x = q * r;
            const double sinc = x < 1e-8 ? 1.0 : std::sin(x) / x;
            return 4.0 * kPi * r * r * smearing_profile(shape, 3, r) * sinc;
        },
        0.0, 1.0, panels);
}

double smeared_self_energy(const SmearingSpec& spec) {
    check_dim(spec.dim);
    if (!(spec.eta > 0.0)) throw InvalidParameter("smearing radius must be positive");
    const int d = spec.dim;
    const double eta = spec.eta;
    // Field of the charge inside radius r is M(r) / r^{d−1}; outside η it is the point-charge field.
    const double inner = 0.5 * sphere_area(d) *
                         quad::composite(
                             [&](double r) {
                                 const double m = profile_mass(spec.shape, d, r / eta);
                                 return m * m / std::pow(r, d - 1);
                             },
                             0.0, eta, 16);
    const double outer = d == 2 ? -kPi * std::log(eta) : 2.0 * kPi / eta;
    return inner + outer;
}

SelfEnergyConstants self_energy_constants(const SmearingSpec& spec) {
    const double e1 = smeared_self_energy(spec);
    if (spec.dim == 3) return {e1 * spec.eta, 0.0};
    SmearingSpec half = spec;
    half.eta = 0.5 * spec.eta;
    const double kappa = (smeared_self_energy(half) - e1) / std::log(2.0);
    return {kappa, e1 + kappa * std::log(spec.eta)};
}

// ½⨍|∇h_η|² = ½ (c_d/|T|)² Σ'_k |ρ̂(kη)|² |S(k)|² / k², S(k) = Σ_j e^{−ik·a_j}.
// The sum is split with a smooth window w(|k|/K): the windowed part is summed on the dual
// lattice, the rest is replaced by its continuum integral. Since ρ_η ∗ ρ_η lives in B(0, 2η)
// and the window is smooth, the aliasing error of that replacement and the cross terms j ≠ l
// of the continuum part decay faster than any power of K (d_min − 2η).
RenormalizedValue smeared_w(const Lattice& input, SmearingShape shape, std::span<const double> eta_list,
                            const SmearedOptions& opt) {
    const Lattice lat = input.reduced();
    const int d = lat.dim();
    if (eta_list.size() < 3) throw InvalidParameter("smeared_w needs at least 3 eta values");
    const double dmin = lat.min_distance();
    for (std::size_t k = 0; k < eta_list.size(); ++k) {
        if (!(eta_list[k] > 0.0)) throw InvalidParameter("eta must be positive");
        if (eta_list[k] >= 0.5 * dmin) throw InvalidParameter("smearing balls overlap: eta must be below half the minimal distance");
        if (k > 0 && !(eta_list[k] < eta_list[k - 1])) throw InvalidParameter("eta list must be strictly decreasing");
    }
    const double vol = lat.cell_volume();
    const double cd = lattice::coulomb_constant(d);
    const auto pts = lat.offset_positions();
    const double n = static_cast<double>(pts.size());
    const double K = opt.cutoff_factor / (dmin - 2.0 * eta_list.front());

    // Dual-lattice points with |k| ≤ K, grouped by |k|² (rounded) to share form factors.
    const auto rb = lat.reciprocal_basis();
    double bfro = 0.0;
    for (int i = 0; i < d; ++i) bfro += norm2(lat.basis()[i]);
    const double per_shell = 2.0 * kPi / std::sqrt(bfro);
    std::map<long long, std::pair<double, double>> groups;  // key → (|k|, Σ w |S|² / k²)
    for (int t = 1; t * per_shell <= K; ++t) {
        auto visit = [&](const std::array<int, 3>& c) {
            Vec3 k{0.0, 0.0, 0.0};
            for (int i = 0; i < d; ++i) k += double(c[i]) * rb[i];
            const double kk = norm(k);
            if (kk > K) return;
            double re = 0.0, im = 0.0;
            for (const auto& a : pts) {
                re += std::cos(dot(k, a));
                im -= std::sin(dot(k, a));
            }
            const double w = quad::smooth_cutoff(kk / K);
            if (w == 0.0) return;
            const long long key = std::llround(kk * 1e9);
            auto& g = groups[key];
            g.first = kk;
            g.second += w * (re * re + im * im) / (kk * kk);
        };
        if (d == 2) {
            for (int i = -t; i <= t; ++i)
                for (int j = -t; j <= t; ++j)
                    if (std::abs(i) == t || std::abs(j) == t) visit({i, j, 0});
        } else {
            for (int i = -t; i <= t; ++i)
                for (int j = -t; j <= t; ++j)
                    for (int l = -t; l <= t; ++l)
                        if (std::abs(i) == t || std::abs(j) == t || std::abs(l) == t) visit({i, j, l});
        }
    }

    auto continuum_tail = [&](double eta) {
        // n ½ (c_d²/|T|) (S_d/(2π)^d) ∫ |ρ̂(kη)|² (1 − w(k/K)) k^{d−3} dk, written in q = kη.
        const double q0 = 0.5 * K * eta;
        const double q1 = K * eta;
        auto integrand = [&](double q) {
            const double f = smearing_form_factor(shape, d, q);
            const double win = 1.0 - quad::smooth_cutoff(q / (K * eta));
            return f * f * win * (d == 2 ? 1.0 / q : 1.0 / eta);
        };
        const int trans_panels = 8 + static_cast<int>((q1 - q0) / kPi);
        double s = quad::composite(integrand, q0, q1, trans_panels);
        // the bump transform decays like e^{−√(2q)}: nothing is left beyond q ≈ 320
        const double qmax = shape == SmearingShape::UniformBall ? q1 + 4000.0 : std::max(q1, 320.0);
        s += quad::composite(integrand, q1, qmax, static_cast<int>((qmax - q1) / kPi) + 1);
        if (shape == SmearingShape::UniformBall)
            s += d == 2 ? 4.0 / (3.0 * kPi * std::pow(qmax, 3)) : 1.5 / (eta * std::pow(qmax, 3));
        return n * 0.5 * cd * cd / vol * sphere_area(d) / std::pow(2.0 * kPi, d) * s;
    };

    RenormalizedValue out;
    for (double eta : eta_list) {
        double lattice_sum = 0.0;
        for (const auto& [key, g] : groups) {
            const double f = smearing_form_factor(shape, d, g.first * eta);
            lattice_sum += f * f * g.second;
        }
        const double field = 0.5 * cd * cd / (vol * vol) * lattice_sum + continuum_tail(eta);
        const double self = smeared_self_energy({shape, eta, d});
        out.eta_trace.push_back({eta, field - n / vol * self, field * vol});
    }
    for (std::size_t k = 2; k < out.eta_trace.size(); ++k) {
        const double d1 = std::abs(out.eta_trace[k - 1].value - out.eta_trace[k - 2].value);
        const double d2 = std::abs(out.eta_trace[k].value - out.eta_trace[k - 1].value);
        if (d2 > d1 + 1e-9) throw AccuracyError("smeared_w: eta trace is not converging");
    }
    const auto ex = extrapolate_eta(out.eta_trace);
    out.value = ex.limit;
    out.extrapolation_residual = ex.residual;
    const auto consts = self_energy_constants({shape, eta_list.back(), d});
    out.convention.dim = d;
    out.convention.coulomb_constant = cd;
    out.convention.kappa = consts.kappa;
    out.convention.gamma2 = consts.gamma2;
    out.convention.smearing = shape == SmearingShape::UniformBall ? "uniform-ball" : "smooth-bump";
    return out;
}

}  // namespace coulomb::renorm
