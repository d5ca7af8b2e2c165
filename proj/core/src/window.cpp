#include <algorithm>
#include <cmath>
#include <numbers>

#include "coulomb/errors.hpp"
#include "coulomb/quadrature.hpp"
#include "coulomb/renormalized.hpp"

namespace coulomb::renorm {

namespace {

constexpr double kPi = std::numbers::pi;

struct PointIntegrals {
    double chi_part;                  // ∫θ∫_0^δ χ q dρ
    std::vector<double> inner_part;  // ∫θ∫_0^η q dρ for each η
};

}  // namespace

// Partition of unity: χ_i(x) = χ(|x − a_i| / δ) with δ = d_min / 2, so the bumps are disjoint.
// Near a_i, ∇H = −ê/ρ + g_i(x) with g_i smooth, and ρ|∇H|² − 1/ρ = −2 ê·g_i + ρ|g_i|² =: q.
// The 1/ρ part is integrated in closed form; q and the remainder (1 − Σχ_i)|∇H|² by quadrature.
RenormalizedValue window_w(const Lattice& lattice, std::span<const double> eta_list, const WindowOptions& opt) {
    if (lattice.dim() != 2) throw InvalidParameter("window_w is defined for d = 2 only");
    if (eta_list.size() < 3) throw InvalidParameter("window_w needs at least 3 eta values");
    const double dmin = lattice.min_distance();
    const double delta = 0.5 * dmin;
    for (std::size_t k = 0; k < eta_list.size(); ++k) {
        if (!(eta_list[k] > 0.0)) throw InvalidParameter("eta must be positive");
        if (eta_list[k] >= delta) throw InvalidParameter("excision balls overlap: eta must be below half the minimal distance");
        if (k > 0 && !(eta_list[k] < eta_list[k - 1])) throw InvalidParameter("eta list must be strictly decreasing");
    }

    const Lattice red = lattice.reduced();
    const lattice::EwaldGreen green(red, opt.ewald);
    const auto pts = red.offset_positions();
    const std::size_t n = pts.size();
    const double area = lattice.cell_volume();

    // Radial breakpoints: 0 < η_min < ... < η_max < δ/2 (< transition panels) < δ.
    std::vector<double> brk{0.0};
    for (auto it = eta_list.rbegin(); it != eta_list.rend(); ++it) brk.push_back(*it);
    if (delta / 2 > brk.back()) brk.push_back(delta / 2);
    for (int p = 1; p <= 4; ++p) {
        const double r = delta / 2 + p * delta / 8;
        if (r > brk.back()) brk.push_back(r);
    }

    std::vector<PointIntegrals> local(n);
    const int nth = opt.angular_nodes;
    for (std::size_t i = 0; i < n; ++i) {
        auto field_regular = [&](const Vec3& y) {
            Vec3 g = green.regular_gradient(y);
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) g += green.gradient(pts[i] + y - pts[j]);
            return g;
        };
        double chi_part = 0.0;
        std::vector<double> cum(brk.size(), 0.0);  // ∫θ∫_0^{brk[b]} q
        for (int t = 0; t < nth; ++t) {
            const double th = 2.0 * kPi * t / nth;
            const Vec3 e{std::cos(th), std::sin(th), 0.0};
            double acc = 0.0;
            for (std::size_t b = 1; b < brk.size(); ++b) {
                const auto rule = quad::gauss_legendre(opt.radial_nodes, brk[b - 1], brk[b]);
                double panel = 0.0, panel_chi = 0.0;
                for (std::size_t m = 0; m < rule.x.size(); ++m) {
                    const double rho = rule.x[m];
                    const Vec3 g = field_regular(rho * e);
                    const double q = -2.0 * dot(e, g) + rho * norm2(g);
                    panel += rule.w[m] * q;
                    panel_chi += rule.w[m] * q * quad::smooth_cutoff(rho / delta);
                }
                acc += panel;
                cum[b] += acc * (2.0 * kPi / nth);
                chi_part += panel_chi * (2.0 * kPi / nth);
            }
        }
        local[i].chi_part = chi_part;
        for (double eta : eta_list) {
            const auto pos = std::find(brk.begin(), brk.end(), eta) - brk.begin();
            local[i].inner_part.push_back(cum[pos]);
        }
    }

    // Remainder on the whole cell by the periodic trapezoid rule in fractional coordinates.
    const int N = opt.global_nodes;
    double global = 0.0;
    for (int a = 0; a < N; ++a) {
        for (int b = 0; b < N; ++b) {
            const Vec3 x = red.to_cartesian({(a + 0.5) / N, (b + 0.5) / N, 0.0});
            double w = 1.0;
            for (std::size_t i = 0; i < n; ++i) w -= quad::smooth_cutoff(norm(red.minimum_image(x - pts[i])) / delta);
            if (w <= 0.0) continue;
            Vec3 g{0.0, 0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) g += green.gradient(x - pts[i]);
            global += w * norm2(g);
        }
    }
    global *= area / (static_cast<double>(N) * N);

    RenormalizedValue out;
    const double cchi = quad::smooth_cutoff_log_moment();
    for (std::size_t k = 0; k < eta_list.size(); ++k) {
        const double eta = eta_list[k];
        double twice = global;
        for (std::size_t i = 0; i < n; ++i)
            twice += 2.0 * kPi * (std::log(delta / (2.0 * eta)) + cchi) + local[i].chi_part - local[i].inner_part[k];
        const double field = 0.5 * twice;
        const double value = (field + kPi * static_cast<double>(n) * std::log(eta)) / area;
        out.eta_trace.push_back({eta, value, field});
    }
    for (std::size_t k = 2; k < out.eta_trace.size(); ++k) {
        const double d1 = std::abs(out.eta_trace[k - 1].value - out.eta_trace[k - 2].value);
        const double d2 = std::abs(out.eta_trace[k].value - out.eta_trace[k - 1].value);
        if (d2 > d1 + opt.monotone_slack) throw AccuracyError("window_w: eta trace is not converging");
    }
    const auto ex = extrapolate_eta(out.eta_trace);
    out.value = ex.limit;
    out.extrapolation_residual = ex.residual;
    out.convention.dim = 2;
    out.convention.coulomb_constant = 2.0 * kPi;
    out.convention.smearing = "excision";
    return out;
}

}  // namespace coulomb::renorm
