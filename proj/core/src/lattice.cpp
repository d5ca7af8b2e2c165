#include "coulomb/lattice.hpp"

#include <algorithm>
#include <boost/math/special_functions/expint.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "coulomb/errors.hpp"
#include "shells.hpp"

namespace coulomb::lattice {

namespace {

constexpr double kPi = std::numbers::pi;

double det3(const std::array<Vec3, 3>& b) {
    // columns b[0], b[1], b[2]
    return b[0][0] * (b[1][1] * b[2][2] - b[2][1] * b[1][2]) - b[1][0] * (b[0][1] * b[2][2] - b[2][1] * b[0][2]) +
           b[2][0] * (b[0][1] * b[1][2] - b[1][1] * b[0][2]);
}

// Rows of the inverse of the column matrix b.
std::array<Vec3, 3> inverse_rows(const std::array<Vec3, 3>& b) {
    const double det = det3(b);
    auto cross = [](const Vec3& u, const Vec3& v) -> Vec3 {
        return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
    };
    std::array<Vec3, 3> rows{cross(b[1], b[2]), cross(b[2], b[0]), cross(b[0], b[1])};
    for (auto& r : rows) r = (1.0 / det) * r;
    return rows;
}

double frac_wrap(double f) { return f - std::floor(f + 0.5); }
double frac_unit(double f) {
    double w = f - std::floor(f);
    if (w >= 1.0) w -= 1.0;
    return w;
}

double frobenius(const std::array<Vec3, 3>& m, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) s += m[i][j] * m[i][j];
    return std::sqrt(s);
}

}  // namespace

double coulomb_constant(int dim) { return dim == 2 ? 2.0 * kPi : 4.0 * kPi; }

double coulomb_kernel(int dim, double r) { return dim == 2 ? -std::log(r) : 1.0 / r; }

ModularParameter ModularParameter::hexagonal() { return {{0.5, std::sqrt(3.0) / 2.0}}; }

ModularParameter ModularParameter::canonical() const {
    if (!(tau.imag() > 0.0)) throw InvalidParameter("modular parameter must satisfy Im(tau) > 0");
    std::complex<double> t = tau;
    for (int iter = 0; iter < 1000; ++iter) {
        t -= std::round(t.real());
        if (std::norm(t) < 1.0 - 1e-15) {
            t = -1.0 / t;
        } else {
            break;
        }
    }
    if (t.real() < -0.5) t += 1.0;
    return {t};
}

Lattice::Lattice(int dim, const std::array<Vec3, 3>& basis, std::vector<Vec3> fractional_offsets)
    : dim_(dim), basis_(basis), offsets_(std::move(fractional_offsets)) {
    if (dim_ != 2 && dim_ != 3) throw InvalidParameter("lattice dimension must be 2 or 3");
    if (dim_ == 2) {
        basis_[0][2] = 0.0;
        basis_[1][2] = 0.0;
        basis_[2] = {0.0, 0.0, 1.0};
    }
    double scale = 1.0;
    for (int i = 0; i < dim_; ++i) scale *= norm(basis_[i]);
    volume_ = std::abs(det3(basis_));
    if (!(volume_ > 1e-14 * scale) || !std::isfinite(volume_))
        throw InvalidParameter("lattice basis is singular");
    inverse_rows_ = inverse_rows(basis_);
    if (offsets_.empty()) throw InvalidConfiguration("lattice needs at least one point per cell");
    for (auto& f : offsets_) {
        if (dim_ == 2) f[2] = 0.0;
        for (int i = 0; i < dim_; ++i) f[i] = frac_unit(f[i]);
    }
    const double floor = 1e-10 * std::pow(volume_, 1.0 / dim_);
    for (std::size_t i = 0; i < offsets_.size(); ++i) {
        for (std::size_t j = i + 1; j < offsets_.size(); ++j) {
            if (norm(wrap(offset_position(i) - offset_position(j))) < floor)
                throw InvalidConfiguration("lattice offsets " + std::to_string(i) + " and " + std::to_string(j) +
                                           " coincide modulo the lattice");
        }
    }
}

Vec3 Lattice::to_cartesian(const Vec3& f) const {
    Vec3 x{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) x += f[i] * basis_[i];
    return x;
}

Vec3 Lattice::to_fractional(const Vec3& x) const {
    Vec3 f{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) f[i] = dot(inverse_rows_[i], x);
    return f;
}

Vec3 Lattice::wrap(const Vec3& x) const {
    Vec3 f = to_fractional(x);
    for (int i = 0; i < dim_; ++i) f[i] = frac_wrap(f[i]);
    return to_cartesian(f);
}

Vec3 Lattice::minimum_image(const Vec3& x) const {
    const Vec3 w = wrap(x);
    Vec3 best = w;
    double bn = norm2(w);
    const int kz = dim_ == 3 ? 1 : 0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            for (int k = -kz; k <= kz; ++k) {
                const Vec3 c = w + to_cartesian({double(i), double(j), double(k)});
                const double cn = norm2(c);
                if (cn < bn) {
                    bn = cn;
                    best = c;
                }
            }
    return best;
}

Vec3 Lattice::offset_position(std::size_t i) const { return to_cartesian(offsets_.at(i)); }

std::vector<Vec3> Lattice::offset_positions() const {
    std::vector<Vec3> out;
    out.reserve(offsets_.size());
    for (std::size_t i = 0; i < offsets_.size(); ++i) out.push_back(offset_position(i));
    return out;
}

std::array<Vec3, 3> Lattice::reciprocal_basis() const {
    std::array<Vec3, 3> k{};
    for (int i = 0; i < dim_; ++i) k[i] = (2.0 * kPi) * inverse_rows_[i];
    return k;
}

double Lattice::min_distance() const {
    const Lattice red = reduced();
    const auto pos = red.offset_positions();
    const double rho = 1.0 / frobenius(red.inverse_rows_, dim_);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 64; ++s) {
        // points in shell s are at least s·rho − (cell diameter) away
        double diam = 0.0;
        for (int i = 0; i < dim_; ++i) diam += norm(red.basis_[i]);
        if (s * rho - diam > best) break;
        detail::for_each_in_shell(dim_, s, [&](const std::array<int, 3>& c) {
            const Vec3 v = red.to_cartesian({double(c[0]), double(c[1]), double(c[2])});
            for (std::size_t i = 0; i < pos.size(); ++i) {
                for (std::size_t j = 0; j < pos.size(); ++j) {
                    if (s == 0 && i == j) continue;
                    best = std::min(best, norm(pos[i] - pos[j] + v));
                }
            }
        });
    }
    return best;
}

Lattice Lattice::scaled(double a) const {
    if (!(a > 0.0)) throw InvalidParameter("dilation factor must be positive");
    std::array<Vec3, 3> b = basis_;
    for (int i = 0; i < dim_; ++i) b[i] = a * b[i];
    return Lattice(dim_, b, offsets_);
}

Lattice Lattice::rotated(const std::array<Vec3, 3>& rot) const {
    std::array<Vec3, 3> b = basis_;
    for (int i = 0; i < dim_; ++i) b[i] = {dot(rot[0], basis_[i]), dot(rot[1], basis_[i]), dot(rot[2], basis_[i])};
    return Lattice(dim_, b, offsets_);
}

Lattice Lattice::supercell(const std::array<int, 3>& m) const {
    for (int i = 0; i < dim_; ++i)
        if (m[i] < 1) throw InvalidParameter("supercell multiples must be positive");
    std::array<Vec3, 3> b = basis_;
    for (int i = 0; i < dim_; ++i) b[i] = double(m[i]) * basis_[i];
    const int m2 = dim_ == 3 ? m[2] : 1;
    std::vector<Vec3> offs;
    for (const auto& f : offsets_) {
        for (int i = 0; i < m[0]; ++i)
            for (int j = 0; j < m[1]; ++j)
                for (int k = 0; k < m2; ++k)
                    offs.push_back({(f[0] + i) / m[0], (f[1] + j) / m[1], dim_ == 3 ? (f[2] + k) / m[2] : 0.0});
    }
    return Lattice(dim_, b, std::move(offs));
}

Lattice Lattice::reduced() const {
    std::array<Vec3, 3> b = basis_;
    if (dim_ == 2) {
        for (int iter = 0; iter < 200; ++iter) {
            if (norm2(b[0]) > norm2(b[1])) std::swap(b[0], b[1]);
            const double mu = std::round(dot(b[0], b[1]) / norm2(b[0]));
            if (mu == 0.0) break;
            b[1] = b[1] - mu * b[0];
        }
    } else {
        for (int iter = 0; iter < 200; ++iter) {
            bool changed = false;
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    if (i == j) continue;
                    const double mu = std::round(dot(b[i], b[j]) / norm2(b[j]));
                    if (mu != 0.0) {
                        const Vec3 cand = b[i] - mu * b[j];
                        if (norm2(cand) < norm2(b[i]) * (1.0 - 1e-14)) {
                            b[i] = cand;
                            changed = true;
                        }
                    }
                }
            }
            if (!changed) break;
        }
    }
    if (det3(b) < 0.0) b[dim_ - 1] = -1.0 * b[dim_ - 1];
    const auto inv = inverse_rows(b);
    std::vector<Vec3> offs;
    for (const auto& x : offset_positions()) {
        Vec3 f{0.0, 0.0, 0.0};
        for (int i = 0; i < dim_; ++i) f[i] = dot(inv[i], x);
        offs.push_back(f);
    }
    return Lattice(dim_, b, std::move(offs));
}

Lattice Lattice::square(double density) {
    if (!(density > 0.0)) throw InvalidParameter("density must be positive");
    const double a = 1.0 / std::sqrt(density);
    return Lattice(2, {Vec3{a, 0.0, 0.0}, Vec3{0.0, a, 0.0}, Vec3{0.0, 0.0, 1.0}});
}

Lattice Lattice::triangular(double density) { return make_lattice_from_tau(ModularParameter::hexagonal(), density); }

Lattice Lattice::simple_cubic(double density) {
    if (!(density > 0.0)) throw InvalidParameter("density must be positive");
    const double a = std::cbrt(1.0 / density);
    return Lattice(3, {Vec3{a, 0.0, 0.0}, Vec3{0.0, a, 0.0}, Vec3{0.0, 0.0, a}});
}

Lattice Lattice::body_centered_cubic(double density) {
    if (!(density > 0.0)) throw InvalidParameter("density must be positive");
    const double h = 0.5 * std::cbrt(2.0 / density);
    return Lattice(3, {Vec3{-h, h, h}, Vec3{h, -h, h}, Vec3{h, h, -h}});
}

Lattice Lattice::face_centered_cubic(double density) {
    if (!(density > 0.0)) throw InvalidParameter("density must be positive");
    const double h = 0.5 * std::cbrt(4.0 / density);
    return Lattice(3, {Vec3{0.0, h, h}, Vec3{h, 0.0, h}, Vec3{h, h, 0.0}});
}

Lattice make_lattice_from_tau(const ModularParameter& tau, double density) {
    if (!(density > 0.0)) throw InvalidParameter("density must be positive");
    if (!(tau.im() > 0.0)) throw InvalidParameter("modular parameter must satisfy Im(tau) > 0");
    const double u = std::sqrt(1.0 / (density * tau.im()));
    return Lattice(2, {Vec3{u, 0.0, 0.0}, Vec3{u * tau.re(), u * tau.im(), 0.0}, Vec3{0.0, 0.0, 1.0}});
}

// ---------------------------------------------------------------------------------------------

EwaldGreen::EwaldGreen(const Lattice& lattice, const EwaldParams& params) : dim_(lattice.dim()) {
    if (!(params.tail_tolerance > 0.0)) throw InvalidParameter("tail_tolerance must be positive");
    const Lattice red = Lattice(lattice.dim(), lattice.basis()).reduced();
    basis_ = red.basis();
    volume_ = red.cell_volume();
    for (int i = 0; i < dim_; ++i) inverse_rows_[i] = (1.0 / (2.0 * kPi)) * red.reciprocal_basis()[i];
    alpha_ = params.splitting_parameter > 0.0 ? params.splitting_parameter
                                              : kPi / std::pow(volume_, 2.0 / dim_);
    singular_floor_ = 1e-12 * std::pow(volume_, 1.0 / dim_);

    const double cd = coulomb_constant(dim_);
    const double a = alpha_;
    const double sa = std::sqrt(a);
    const double tol = params.tail_tolerance / 4.0;

    double rbound = 0.0;
    for (int i = 0; i < dim_; ++i) rbound += 0.5 * norm(basis_[i]);
    const double rho_real = 1.0 / frobenius(inverse_rows_, dim_);

    auto phi = [&](double r) {
        return dim_ == 2 ? 0.5 * boost::math::expint(1, a * r * r) : std::erfc(sa * r) / r;
    };
    auto dphi = [&](double r) {
        return dim_ == 2 ? std::exp(-a * r * r) / r
                         : std::erfc(sa * r) / (r * r) + 2.0 * std::sqrt(a / kPi) * std::exp(-a * r * r) / r;
    };
    real_shells_ = std::max(
        detail::required_shells(dim_, rho_real, rbound, tol, params.real_space_cutoff, "Ewald real-space sum", phi),
        detail::required_shells(dim_, rho_real, rbound, tol, params.real_space_cutoff, "Ewald real-space gradient",
                                dphi));

    const auto kb = red.reciprocal_basis();
    const double rho_k = 2.0 * kPi / frobenius(basis_, dim_);
    auto kval = [&](double k) { return cd / volume_ * std::exp(-k * k / (4.0 * a)) / (k * k); };
    auto kgrad = [&](double k) { return cd / volume_ * std::exp(-k * k / (4.0 * a)) / k; };
    fourier_shells_ = std::max(
        detail::required_shells(dim_, rho_k, 0.0, tol, params.fourier_cutoff, "Ewald Fourier sum", kval),
        detail::required_shells(dim_, rho_k, 0.0, tol, params.fourier_cutoff, "Ewald Fourier gradient", kgrad));

    for (int s = 0; s <= real_shells_; ++s) {
        detail::for_each_in_shell(dim_, s, [&](const std::array<int, 3>& c) {
            Vec3 v{0.0, 0.0, 0.0};
            for (int i = 0; i < dim_; ++i) v += double(c[i]) * basis_[i];
            real_vectors_.push_back(v);
        });
    }
    for (int s = 1; s <= fourier_shells_; ++s) {
        detail::for_each_in_shell(dim_, s, [&](const std::array<int, 3>& c) {
            // keep one representative of each ±k pair
            const int lead = c[0] != 0 ? c[0] : (c[1] != 0 ? c[1] : c[2]);
            if (lead < 0) return;
            Vec3 k{0.0, 0.0, 0.0};
            for (int i = 0; i < dim_; ++i) k += double(c[i]) * kb[i];
            const double k2 = norm2(k);
            kvectors_.push_back(k);
            kcoef_.push_back(2.0 * cd / volume_ * std::exp(-k2 / (4.0 * a)) / k2);
        });
    }

    background_ = -cd / (4.0 * a * volume_);
    double self = dim_ == 2 ? -0.5 * std::numbers::egamma - 0.5 * std::log(a) : -2.0 * std::sqrt(a / kPi);
    for (std::size_t i = 1; i < real_vectors_.size(); ++i) self += phi(norm(real_vectors_[i]));
    self += background_;
    for (double c : kcoef_) self += c;
    self_constant_ = self;
}

Vec3 EwaldGreen::wrap(const Vec3& x) const {
    Vec3 f{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) f[i] = frac_wrap(dot(inverse_rows_[i], x));
    Vec3 out{0.0, 0.0, 0.0};
    for (int i = 0; i < dim_; ++i) out += f[i] * basis_[i];
    // nearest image, so that the dropped singular part belongs to the closest lattice point
    Vec3 best = out;
    double bn = norm2(out);
    const int kz = dim_ == 3 ? 1 : 0;
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            for (int k = -kz; k <= kz; ++k) {
                const Vec3 c = out + double(i) * basis_[0] + double(j) * basis_[1] + double(k) * basis_[2];
                const double cn = norm2(c);
                if (cn < bn) {
                    bn = cn;
                    best = c;
                }
            }
    return best;
}

double EwaldGreen::value(const Vec3& x) const {
    const Vec3 xr = wrap(x);
    if (norm(xr) < singular_floor_)
        throw SingularityError("torus Green's function evaluated on a lattice point");
    const double a = alpha_;
    const double sa = std::sqrt(a);
    double sum = 0.0;
    for (const auto& v : real_vectors_) {
        const double r = norm(xr + v);
        sum += dim_ == 2 ? 0.5 * boost::math::expint(1, a * r * r) : std::erfc(sa * r) / r;
    }
    sum += background_;
    for (std::size_t i = 0; i < kvectors_.size(); ++i) sum += kcoef_[i] * std::cos(dot(kvectors_[i], xr));
    return sum;
}

Vec3 EwaldGreen::gradient_impl(const Vec3& xr, bool drop_singular) const {
    const double a = alpha_;
    const double sa = std::sqrt(a);
    const double two_sqrt_a_pi = 2.0 * std::sqrt(a / kPi);
    Vec3 g{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < real_vectors_.size(); ++i) {
        const Vec3 y = xr + real_vectors_[i];
        const double r2 = norm2(y);
        if (i == 0 && drop_singular) {
            const double r = std::sqrt(r2);
            if (dim_ == 2) {
                // ∇[½E1(αr²) + log r] = (1 − e^{−αr²}) y / r²
                g += (r2 > 0.0 ? -std::expm1(-a * r2) / r2 : a) * y;
            } else {
                const double z = sa * r;
                double c;
                if (z < 1e-3) {
                    c = 2.0 / std::sqrt(kPi) * a * sa * (2.0 / 3.0 - 0.4 * z * z);
                } else {
                    c = std::erf(z) / (r2 * r) - two_sqrt_a_pi * std::exp(-a * r2) / r2;
                }
                g += c * y;
            }
            continue;
        }
        if (dim_ == 2) {
            g += (-std::exp(-a * r2) / r2) * y;
        } else {
            const double r = std::sqrt(r2);
            g += (-(std::erfc(sa * r) / (r2 * r) + two_sqrt_a_pi * std::exp(-a * r2) / r2)) * y;
        }
    }
    for (std::size_t i = 0; i < kvectors_.size(); ++i) g += (-kcoef_[i] * std::sin(dot(kvectors_[i], xr))) * kvectors_[i];
    return g;
}

Vec3 EwaldGreen::gradient(const Vec3& x) const {
    const Vec3 xr = wrap(x);
    if (norm(xr) < singular_floor_)
        throw SingularityError("torus Green's function gradient evaluated on a lattice point");
    return gradient_impl(xr, false);
}

Vec3 EwaldGreen::regular_gradient(const Vec3& x) const { return gradient_impl(wrap(x), true); }

double torus_green(const Lattice& lattice, const Vec3& x, const EwaldParams& params) {
    return EwaldGreen(lattice, params).value(x);
}

double green_self_constant(const Lattice& lattice, const EwaldParams& params) {
    return EwaldGreen(lattice, params).self_constant();
}

std::vector<ModularParameter> fundamental_domain_grid(int resolution, double tau_max) {
    if (resolution < 2) throw InvalidParameter("fundamental_domain_grid needs resolution >= 2");
    if (!(tau_max >= 2.0)) throw InvalidParameter("tau_max must be at least 2");
    std::vector<double> xs;
    for (int i = 0; i <= resolution; ++i) xs.push_back(-0.5 + double(i) / resolution);
    if (resolution % 2 == 1) {
        xs.push_back(0.0);
        std::sort(xs.begin(), xs.end());
    }
    xs.front() = -0.5;
    xs.back() = 0.5;
    std::vector<ModularParameter> out;
    for (double x : xs) {
        const double y0 = std::abs(x) == 0.5 ? std::sqrt(3.0) / 2.0 : std::sqrt(1.0 - x * x);
        for (int j = 0; j <= resolution; ++j) {
            const double y = j == 0 ? y0 : y0 + (tau_max - y0) * double(j) / resolution;
            out.push_back({{x, y}});
        }
    }
    return out;
}

}  // namespace coulomb::lattice
