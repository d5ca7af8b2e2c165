#pragma once

#include <vector>

namespace coulomb::quad {

struct Rule {
    std::vector<double> x;
    std::vector<double> w;
};

/// n-point Gauss–Legendre rule on [-1, 1].
const Rule& gauss_legendre(int n);

/// Nodes and weights of the n-point rule mapped to [a, b].
Rule gauss_legendre(int n, double a, double b);

/// C^∞ cutoff: 1 for t ≤ 1/2, 0 for t ≥ 1, smooth and monotone in between.
double smooth_cutoff(double t);

/// ∫_{1/2}^{1} smooth_cutoff(t) / t dt.
double smooth_cutoff_log_moment();

/// ∫_a^b f by composite Gauss–Legendre with `panels` equal panels of n nodes.
template <class F>
double composite(F&& f, double a, double b, int panels, int n = 20) {
    const Rule& r = gauss_legendre(n);
    const double h = (b - a) / panels;
    double acc = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * h;
        for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * f(lo + 0.5 * h * (r.x[i] + 1.0));
    }
    return 0.5 * h * acc;
}

}  // namespace coulomb::quad
