#pragma once

#include <array>
#include <complex>
#include <vector>

#include "coulomb/vec.hpp"

namespace coulomb::lattice {

/// Point in the upper half-plane parametrizing a 2D lattice up to similarity.
struct ModularParameter {
    std::complex<double> tau;

    double re() const { return tau.real(); }
    double im() const { return tau.imag(); }

    /// Representative with |Re τ| ≤ 1/2 and |τ| ≥ 1 (throws InvalidParameter if Im τ ≤ 0).
    ModularParameter canonical() const;

    static ModularParameter square() { return {{0.0, 1.0}}; }
    /// e^{iπ/3}, stored with the exact value Re = 1/2.
    static ModularParameter hexagonal();
};

/// Controls the Ewald split and the certified truncation of lattice sums.
struct EwaldParams {
    /// Gaussian screening exponent α (1/length²). Zero selects π / |cell|^{2/d}.
    double splitting_parameter = 0.0;
    /// Hard caps on the number of coefficient shells; exceeding one is an AccuracyError.
    int real_space_cutoff = 64;
    int fourier_cutoff = 64;
    /// Bound on the neglected tail of each lattice sum.
    double tail_tolerance = 1e-10;
};

/// A d-dimensional lattice (d = 2 or 3) with a finite motif of points per cell.
///
/// Basis vectors are the columns of the basis matrix; in 2D the z components are zero.
/// Offsets are fractional coordinates in [0, 1).
class Lattice {
public:
    Lattice(int dim, const std::array<Vec3, 3>& basis, std::vector<Vec3> fractional_offsets = {{0.0, 0.0, 0.0}});

    int dim() const { return dim_; }
    const std::array<Vec3, 3>& basis() const { return basis_; }
    const std::vector<Vec3>& offsets() const { return offsets_; }
    std::size_t points_per_cell() const { return offsets_.size(); }

    double cell_volume() const { return volume_; }
    double density() const { return static_cast<double>(offsets_.size()) / volume_; }

    /// Cartesian position of offset i inside the reference cell.
    Vec3 offset_position(std::size_t i) const;
    std::vector<Vec3> offset_positions() const;

    Vec3 to_cartesian(const Vec3& frac) const;
    Vec3 to_fractional(const Vec3& x) const;
    /// x minus the lattice vector that brings its fractional coordinates into [-1/2, 1/2).
    Vec3 wrap(const Vec3& x) const;
    /// Shortest representative of x modulo the lattice (exact for a reduced basis).
    Vec3 minimum_image(const Vec3& x) const;

    /// Columns of 2π B^{-T}, so that k·v ∈ 2πℤ for lattice vectors v.
    std::array<Vec3, 3> reciprocal_basis() const;

    /// Smallest distance between two distinct points of the periodic point set.
    double min_distance() const;

    /// Same point set with every coordinate multiplied by a > 0.
    Lattice scaled(double a) const;
    /// Point set rotated by the given orthogonal matrix (rows).
    Lattice rotated(const std::array<Vec3, 3>& rotation) const;
    /// Same point set described with an m_1 × m_2 (× m_3) supercell.
    Lattice supercell(const std::array<int, 3>& multiples) const;
    /// Same lattice with the basis replaced by a Gauss/greedy reduced one (offsets re-expressed).
    Lattice reduced() const;

    static Lattice square(double density = 1.0);
    static Lattice triangular(double density = 1.0);
    static Lattice simple_cubic(double density = 1.0);
    static Lattice body_centered_cubic(double density = 1.0);
    static Lattice face_centered_cubic(double density = 1.0);

private:
    int dim_;
    std::array<Vec3, 3> basis_;
    std::array<Vec3, 3> inverse_rows_;
    std::vector<Vec3> offsets_;
    double volume_;
};

/// 2D lattice with basis {u, τu}, one point per cell and cell area 1/density.
Lattice make_lattice_from_tau(const ModularParameter& tau, double density);

/// Precomputed Ewald tables for the periodic Green's function of a Bravais lattice.
///
/// Convention: −ΔG = c_d (δ_0 − 1/|T|) with c_2 = 2π, c_3 = 4π and ∫_T G = 0, so that
/// G(x) + log|x| (2D) or G(x) − 1/|x| (3D) has a finite limit at the origin.
/// Real- and Fourier-space truncations are certified for every x in the cell: the
/// shell-count tail bound of each sum is below tail_tolerance / 4.
class EwaldGreen {
public:
    explicit EwaldGreen(const Lattice& lattice, const EwaldParams& params = {});

    int dim() const { return dim_; }
    double alpha() const { return alpha_; }
    double volume() const { return volume_; }
    int real_shells() const { return real_shells_; }
    int fourier_shells() const { return fourier_shells_; }

    double value(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const;
    /// ∇G(x) − ∇g(x̃) where x̃ = wrap(x) and g is the free-space kernel: smooth near the lattice.
    Vec3 regular_gradient(const Vec3& x) const;
    /// lim_{x→0} G(x) − g(x), evaluated in closed Ewald form.
    double self_constant() const { return self_constant_; }

private:
    Vec3 wrap(const Vec3& x) const;
    Vec3 gradient_impl(const Vec3& xr, bool drop_singular) const;

    int dim_;
    double alpha_;
    double volume_;
    double singular_floor_;
    std::array<Vec3, 3> basis_;
    std::array<Vec3, 3> inverse_rows_;
    std::vector<Vec3> real_vectors_;     // includes the origin
    std::vector<Vec3> kvectors_;         // one of each ±k pair
    std::vector<double> kcoef_;          // 2 (c_d/|T|) e^{-k²/4α} / k²
    double background_;
    double self_constant_;
    int real_shells_ = 0;
    int fourier_shells_ = 0;
};

/// Convenience wrappers building a fresh EwaldGreen (the lattice's motif is ignored).
double torus_green(const Lattice& lattice, const Vec3& x, const EwaldParams& params = {});
double green_self_constant(const Lattice& lattice, const EwaldParams& params = {});

/// Σ_{p∈Λ∖0} |p|^{-s} for s > d, by the incomplete-gamma (Riemann) split with certified tails.
double epstein_zeta(const Lattice& lattice, double s, const EwaldParams& params = {});

/// Grid over {|Re τ| ≤ 1/2, |τ| ≥ 1, Im τ ≤ tau_max}; always contains i and e^{iπ/3} exactly.
std::vector<ModularParameter> fundamental_domain_grid(int resolution, double tau_max = 2.0);

/// Free-space Coulomb kernel: −log r (d = 2), 1/r (d = 3).
double coulomb_kernel(int dim, double r);
/// c_d in −Δg = c_d δ_0.
double coulomb_constant(int dim);

}  // namespace coulomb::lattice
