#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <queue>
#include <string>

#include "coulomb/coulomb_gas.hpp"
#include "coulomb/errors.hpp"
#include "coulomb/quadrature.hpp"

namespace coulomb::gas {

namespace {

constexpr double kPi = std::numbers::pi;
using GK = boost::math::quadrature::gauss_kronrod<double, 21>;

// Blown-up field h'(y) = Σ −log|y − p_i| − U'(y), U' the potential of the uniform disk of radius √n
// carrying mass n. Only the gradient is needed.
struct Field {
    std::vector<Vec3> p;
    double n;
    double R0;  // √n

    Vec3 background(const Vec3& y) const {
        const double r2 = y[0] * y[0] + y[1] * y[1];
        if (r2 <= R0 * R0) return y;
        return (n / r2) * y;
    }
    Vec3 grad(const Vec3& y, std::size_t skip = static_cast<std::size_t>(-1)) const {
        Vec3 g = background(y);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (i == skip) continue;
            const Vec3 d = y - p[i];
            g += (-1.0 / norm2(d)) * d;
        }
        return g;
    }
};

// Globally adaptive Gauss–Kronrod: split the piece with the largest error estimate until the
// summed estimate is below an absolute tolerance, floored at the roundoff level of the sum.
struct Quad {
    double tol;
    int max_pieces;
    bool failed = false;
    std::string where;

    struct Piece {
        double a, b, v, err;
        bool operator<(const Piece& o) const { return err < o.err; }
    };

    template <class F>
    double operator()(F&& f, double a, double b) {
        if (!(b > a)) return 0.0;
        auto eval = [&](double lo, double hi) {
            Piece p{lo, hi, 0.0, 0.0};
            p.v = GK::integrate(f, lo, hi, 0, 0.0, &p.err);
            p.err *= 0.5 * (hi - lo);  // reported on the reference interval
            return p;
        };
        std::priority_queue<Piece> heap;
        heap.push(eval(a, b));
        double sum = heap.top().v, err = heap.top().err;
        int pieces = 1;
        auto target = [&] { return std::max(tol, 64.0 * std::numeric_limits<double>::epsilon() * std::abs(sum)); };
        while (err > target() && pieces < max_pieces) {
            const Piece top = heap.top();
            heap.pop();
            const double m = 0.5 * (top.a + top.b);
            const Piece l = eval(top.a, m), r = eval(m, top.b);
            sum += l.v + r.v - top.v;
            err += l.err + r.err - top.err;
            heap.push(l);
            heap.push(r);
            ++pieces;
        }
        if (err > target() && !failed) {
            failed = true;
            char buf[160];
            std::snprintf(buf, sizeof buf, "[%.6g, %.6g] value %.6g error %.3g", a, b, sum, err);
            where = buf;
        }
        return sum;
    }
};

// Radii along y = p + r ê where |y| = R0 and 0 < r < rmax.
std::vector<double> crossings(const Vec3& p, double ex, double ey, double R0, double rmax) {
    std::vector<double> out;
    const double b = p[0] * ex + p[1] * ey;
    const double disc = b * b - (p[0] * p[0] + p[1] * p[1] - R0 * R0);
    if (disc <= 0.0) return out;
    for (double r : {-b - std::sqrt(disc), -b + std::sqrt(disc)})
        if (r > 0.0 && r < rmax) out.push_back(r);
    return out;
}

}  // namespace

SplittingReport splitting_check(const PointConfiguration& config, const SplittingOptions& options) {
    if (config.dim != 2) throw InvalidParameter("splitting check is two-dimensional");
    config.validate();
    const std::size_t n = config.size();
    if (n == 0) throw InvalidParameter("empty configuration");
    const double nd = static_cast<double>(n);
    const auto V = Potential::quadratic(2);

    SplittingReport rep;
    rep.lhs = hamiltonian(config, V);
    rep.mean_field_term = nd * nd * 0.75;
    rep.log_term = -0.5 * nd * std::log(nd);
    double zsum = 0.0;
    for (const auto& x : config.points) {
        const double r = std::hypot(x[0], x[1]);
        if (r > 1.0) zsum += -std::log(r) + 0.5 * (r * r - 1.0);
    }
    rep.zeta_term = 2.0 * nd * zsum;

    Field F;
    F.n = nd;
    F.R0 = std::sqrt(nd);
    for (const auto& x : config.points) F.p.push_back(std::sqrt(nd) * x);

    // bump radii: disjoint balls, at most 1
    std::vector<double> delta(n, 1.0);
    double far = F.R0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) delta[i] = std::min(delta[i], 0.5 * norm(F.p[i] - F.p[j]));
        far = std::max(far, norm(F.p[i]) + delta[i]);
    }
    const double R = 1.5 * far + 1.0;
    const double Cchi = quad::smooth_cutoff_log_moment();
    Quad Q{options.tolerance, options.max_pieces, false, {}};
    Quad Qin{1e-2 * options.tolerance, options.max_pieces, false, {}};

    // ½ ∫ (1/r − 2ê·∇R_i + r|∇R_i|²) over rays from p_i, weight χ(r/δ_i); the 1/r part in closed form.
    auto regular_ray = [&](std::size_t i, double th, double lo, double hi) {
        const double ex = std::cos(th), ey = std::sin(th);
        std::vector<double> bp{lo, hi};
        if (lo < 0.5 * delta[i] && hi > 0.5 * delta[i]) bp.push_back(0.5 * delta[i]);
        for (double r : crossings(F.p[i], ex, ey, F.R0, hi))
            if (r > lo) bp.push_back(r);
        std::sort(bp.begin(), bp.end());
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < bp.size(); ++k)
            acc += Qin([&](double r) {
                const Vec3 y{F.p[i][0] + r * ex, F.p[i][1] + r * ey, 0.0};
                const Vec3 gr = F.grad(y, i);
                const double chi = quad::smooth_cutoff(r / delta[i]);
                return chi * (-2.0 * (ex * gr[0] + ey * gr[1]) + r * norm2(gr));
            }, bp[k], bp[k + 1]);
        return acc;
    };
    auto local = [&](std::size_t i, double lo, double hi) {
        return 0.5 * Q([&](double th) { return regular_ray(i, th, lo, hi); }, 0.0, 2.0 * kPi);
    };

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += kPi * (std::log(0.5 * delta[i]) + Cchi) + local(i, 0.0, delta[i]);
    }

    // remainder (1 − Σχ_i)|∇h|² on |y| < R in polar coordinates about the origin
    auto ring = [&](double r) {
        return Qin([&](double th) {
            const Vec3 y{r * std::cos(th), r * std::sin(th), 0.0};
            double w = 1.0;
            for (std::size_t i = 0; i < n; ++i) w -= quad::smooth_cutoff(norm(y - F.p[i]) / delta[i]);
            if (w <= 0.0) return 0.0;
            return w * norm2(F.grad(y)) * r;
        }, 0.0, 2.0 * kPi);
    };
    std::vector<double> rb{0.0, F.R0, R};
    for (std::size_t i = 0; i < n; ++i) {
        const double pr = norm(F.p[i]);
        for (double v : {pr - delta[i], pr - 0.5 * delta[i], pr, pr + 0.5 * delta[i], pr + delta[i]})
            if (v > 0.0 && v < R) rb.push_back(v);
    }
    std::sort(rb.begin(), rb.end());
    rb.erase(std::unique(rb.begin(), rb.end()), rb.end());
    for (std::size_t k = 0; k + 1 < rb.size(); ++k) total += 0.5 * Q(ring, rb[k], rb[k + 1]);

    // exterior: h = Re Σ_k a_k z^{−k}, a_k = Σ_i p_i^k / k, so ½∫_{|z|>R}|∇h|² = (π/2) Σ_k k|a_k|² R^{−2k}
    double tail = 0.0;
    for (int k = 1; k <= 400; ++k) {
        std::complex<double> a{0.0, 0.0};
        for (const auto& p : F.p) a += std::pow(std::complex<double>(p[0] / R, p[1] / R), k);
        a /= static_cast<double>(k);
        const double term = 0.5 * kPi * k * std::norm(a);
        tail += term;
        if (term < 1e-20 * std::max(1.0, std::abs(total)) && k > 4) break;
    }
    total += tail;

    if (!std::isfinite(total) || Q.failed || Qin.failed)
        throw AccuracyError("splitting quadrature did not reach tolerance on " + (Q.failed ? Q.where : Qin.where));

    // η trace: the excised integral differs from the limit by ½∫_{|y−p_i|<η} of the regular part
    const double dmin = *std::min_element(delta.begin(), delta.end());
    for (double f : {0.2, 0.1, 0.05}) {
        const double eta = f * dmin;
        double v = total;
        for (std::size_t i = 0; i < n; ++i) v -= local(i, 0.0, eta);
        rep.eta_trace.emplace_back(eta, v);
    }
    rep.eta_trace.emplace_back(0.0, total);

    rep.w_term = total / kPi;
    const double rhs = rep.mean_field_term + rep.log_term + rep.w_term + rep.zeta_term;
    rep.residual = std::abs(rep.lhs - rhs);
    rep.relative_residual = rep.lhs != 0.0 ? rep.residual / std::abs(rep.lhs) : rep.residual;
    return rep;
}

}  // namespace coulomb::gas
