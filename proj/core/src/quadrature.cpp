#include "coulomb/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "coulomb/errors.hpp"

namespace coulomb::quad {

namespace {

Rule build_rule(int n) {
    Rule r;
    r.x.resize(n);
    r.w.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.x[i] = -x;
        r.x[n - 1 - i] = x;
        r.w[i] = w;
        r.w[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.x[n / 2] = 0.0;
    return r;
}

double smoothstep(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / u);
    const double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

}  // namespace

const Rule& gauss_legendre(int n) {
    if (n < 1) throw InvalidParameter("Gauss-Legendre rule needs n >= 1");
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
    return it->second;
}

Rule gauss_legendre(int n, double a, double b) {
    Rule r = gauss_legendre(n);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        r.x[i] = a + 0.5 * (b - a) * (r.x[i] + 1.0);
        r.w[i] *= 0.5 * (b - a);
    }
    return r;
}

double smooth_cutoff(double t) { return 1.0 - smoothstep(2.0 * t - 1.0); }

double smooth_cutoff_log_moment() {
    static const double value = composite([](double t) { return smooth_cutoff(t) / t; }, 0.5, 1.0, 16, 24);
    return value;
}

}  // namespace coulomb::quad
