#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "coulomb/errors.hpp"
#include "coulomb/lattice.hpp"
#include "shells.hpp"

namespace coulomb::lattice {

namespace {

// Γ(a, x) for any real a and x > 0; negative a via Γ(a, x) = (Γ(a+1, x) − x^a e^{−x}) / a.
double upper_gamma(double a, double x) {
    if (a > 0.0) return boost::math::tgamma(a, x);
    if (a == 0.0) return boost::math::expint(1, x);
    const double next = upper_gamma(a + 1.0, x);
    return (next - std::pow(x, a) * std::exp(-x)) / a;
}

double frobenius_rows(const std::array<Vec3, 3>& m, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) s += m[i][j] * m[i][j];
    return std::sqrt(s);
}

}  // namespace

double epstein_zeta(const Lattice& lattice, double s, const EwaldParams& params) {
    const int d = lattice.dim();
    if (!(s > d)) throw InvalidParameter("Epstein zeta diverges for s <= d");
    if (lattice.points_per_cell() != 1) throw InvalidParameter("epstein_zeta expects a single-offset lattice");

    const Lattice red = Lattice(d, lattice.basis()).reduced();
    const double vol = red.cell_volume();
    const double alpha = params.splitting_parameter > 0.0 ? params.splitting_parameter
                                                         : std::numbers::pi / std::pow(vol, 2.0 / d);
    const double a = 0.5 * (s - d);
    const double half_s = 0.5 * s;
    const double pi = std::numbers::pi;
    // Each sum gets a quarter of the tolerance, after the 1/Γ(s/2) prefactor.
    const double tol = 0.25 * params.tail_tolerance * std::tgamma(half_s);

    const auto& b = red.basis();
    std::array<Vec3, 3> kb{};  // dual basis with k·p ∈ ℤ
    for (int i = 0; i < d; ++i) kb[i] = (1.0 / (2.0 * pi)) * red.reciprocal_basis()[i];

    auto real_term = [&](double r) { return upper_gamma(half_s, alpha * r * r) * std::pow(r, -s); };
    auto dual_term = [&](double k) {
        const double x = pi * pi * k * k;
        return std::pow(x, a) * upper_gamma(-a, x / alpha);
    };

    std::array<Vec3, 3> inv_rows{};
    for (int i = 0; i < d; ++i) inv_rows[i] = kb[i];
    const int sr = detail::required_shells(d, 1.0 / frobenius_rows(inv_rows, d), 0.0, tol, params.real_space_cutoff,
                                           "Epstein real-space sum", real_term);
    const int sk = detail::required_shells(d, 1.0 / frobenius_rows(b, d), 0.0, tol / (std::pow(pi, 0.5 * d) / vol),
                                           params.fourier_cutoff, "Epstein dual sum", dual_term);

    double real_sum = 0.0;
    for (int sh = 1; sh <= sr; ++sh) {
        detail::for_each_in_shell(d, sh, [&](const std::array<int, 3>& c) {
            Vec3 v{0.0, 0.0, 0.0};
            for (int i = 0; i < d; ++i) v += double(c[i]) * b[i];
            real_sum += real_term(norm(v));
        });
    }
    double dual_sum = 0.0;
    for (int sh = 1; sh <= sk; ++sh) {
        detail::for_each_in_shell(d, sh, [&](const std::array<int, 3>& c) {
            Vec3 k{0.0, 0.0, 0.0};
            for (int i = 0; i < d; ++i) k += double(c[i]) * kb[i];
            dual_sum += dual_term(norm(k));
        });
    }
    const double total = real_sum + std::pow(pi, 0.5 * d) / vol * (dual_sum + std::pow(alpha, a) / a) -
                         std::pow(alpha, half_s) / half_s;
    return total / std::tgamma(half_s);
}

}  // namespace coulomb::lattice
