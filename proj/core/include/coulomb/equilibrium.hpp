#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "coulomb/grid_field.hpp"
#include "coulomb/potential.hpp"

namespace coulomb::eq {

struct GridSpec {
    double spacing = 1.0 / 64.0;
    /// Half side of the initial box (Cartesian) or outer radius (radial); 0 picks one from V.
    double half_width = 0.0;
    int max_enlargements = 4;
    double tolerance = 1e-11;  // PSOR stopping threshold on the largest update
    long max_sweeps = 200000;
    /// Use the radial reduction when V is radial. Set false to force the full grid.
    bool use_radial_symmetry = true;
    /// 0 selects an over-relaxation factor from the grid size.
    double omega = 0.0;
};

struct SolverStats {
    long sweeps = 0;
    double complementarity = 0.0;  // max_i min(gap_i, multiplier_i) after the solve, scaled by cell volume
    int enlargements = 0;
    int levels = 0;
};

/// Probability measure given by a density on a grid, with its support mask.
struct EquilibriumMeasure {
    GridField density;       // mass per unit volume at the nodes
    GridField support_mask;  // 1 on the coincidence set Σ, 0 elsewhere
    double el_constant = 0.0;
    Vec3 centre{0.0, 0.0, 0.0};  // centre of a radial measure
    GridField zeta;          // obstacle gap from the solve (empty for measures not produced by the solver)
    SolverStats stats;

    int dim() const { return density.dim(); }
    bool radial() const { return density.geometry() == GridGeometry::Radial; }
    double total_mass() const { return density.integrate(); }
    double density_at(const Vec3& x) const;
    bool in_support(const Vec3& x) const;
    /// Distance from x to the nearest support node (0 inside).
    double distance_to_support(const Vec3& x) const;
    /// i.i.d. samples: a cell drawn with probability ∝ mass, then a uniform point inside it.
    std::vector<Vec3> sample(std::size_t count, std::mt19937_64& rng) const;

    /// Radially symmetric measure with density rho(r) on [0, radius], normalized to mass 1.
    template <class F>
    static EquilibriumMeasure radial_profile(int dim, double radius, int nodes, double outer, F&& rho);
    static EquilibriumMeasure from_density(GridField density);
};

/// Obstacle formulation of the equilibrium problem for ℱ(μ) = ∬ g dμ dμ + ∫ V dμ:
/// ζ = U + V/2 − c/2 ≥ 0, −Δζ = c_d μ − ΔV/2 with μ ≥ 0 and μ ζ = 0, U = g ∗ μ.
/// The outer boundary carries the flux of a unit charge, so the discrete mass is exactly 1.
EquilibriumMeasure solve_equilibrium_measure(const Potential& V, const GridSpec& grid = {});

/// ℱ(μ) with the kernel integrated exactly over each cell pair on the diagonal.
double mean_field_energy(const EquilibriumMeasure& mu, const Potential& V);

/// (g ∗ μ)(x) for the grid measure.
double measure_potential(const EquilibriumMeasure& mu, const Vec3& x);

/// ζ = g ∗ μ_0 + V/2 − c/2 on μ_0's grid, clipped to 0 on the support.
/// Throws InvalidConfiguration when ζ < −tolerance somewhere (μ_0 does not solve the problem for V).
GridField effective_potential_zeta(const Potential& V, const EquilibriumMeasure& mu0, double tolerance = -1.0);

// -- Ginzburg–Landau mean-field problems on a disk or a rectangle ------------------------------

struct Domain {
    enum class Kind { Disk, Rectangle } kind = Kind::Disk;
    double radius = 1.0;
    double width = 1.0;
    double height = 1.0;

    static Domain disk(double radius = 1.0) { return {Kind::Disk, radius, 0.0, 0.0}; }
    static Domain rectangle(double width, double height) { return {Kind::Rectangle, 0.0, width, height}; }
    double area() const;
};

struct PlanarGrid {
    double spacing = 1.0 / 200.0;  // radial step (disk) or mesh size (rectangle)
    int angular_nodes = 0;         // 0 picks 64; fine rings slow point relaxation near the centre
    double tolerance = 1e-12;
    long max_sweeps = 400000;
    double omega = 0.0;
};

struct MeissnerResult {
    GridField h0;
    double lambda_omega = 0.0;
    double max_deviation = 0.0;  // max |h0 − 1|
    double residual = 0.0;
    long sweeps = 0;
};

/// −Δh_0 + h_0 = 0 in Ω, h_0 = 1 on ∂Ω; λ_Ω = 1 / (2 max|h_0 − 1|).
MeissnerResult solve_meissner_h0(const Domain& domain, const PlanarGrid& grid = {});

struct ObstacleResult {
    GridField h;
    GridField mu;          // −Δh + h, zero off the coincidence set
    GridField omega_mask;  // coincidence set ω_λ
    double lambda = 0.0;
    double obstacle = 0.0;  // 1 − 1/(2λ)
    double coverage = 0.0;  // |ω_λ| / |Ω|
    double interior_density = 0.0;  // mean μ over coincidence nodes whose neighbours all lie in ω_λ
    double complementarity = 0.0;
    long sweeps = 0;
};

/// Mean-field GL problem as the obstacle problem h ≥ 1 − 1/(2λ), −Δh + h ≥ 0, h = 1 on ∂Ω,
/// solved by projected SOR. μ* = −Δh + h is uniform (= 1 − 1/(2λ)) inside ω_λ.
ObstacleResult solve_gl_obstacle(double lambda, const Domain& domain, const PlanarGrid& grid = {});

/// Exact radial solution for the unit-disk obstacle problem: |ω_λ|/|Ω| from Bessel I0/K0 matching.
double disk_coverage_exact(double lambda, double radius = 1.0);

/// (1 − 1/I_0(R))^{-1} / 2, the disk value of λ_Ω, from the power series of I_0.
double disk_lambda_omega_exact(double radius = 1.0);

// -- implementation detail kept public for templates ------------------------------------------

template <class F>
EquilibriumMeasure EquilibriumMeasure::radial_profile(int dim, double radius, int nodes, double outer, F&& rho) {
    GridField g = GridField::radial(dim, outer, nodes);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.node(i)[0];
        g[i] = r <= radius ? rho(r) : 0.0;
    }
    return from_density(std::move(g));
}

}  // namespace coulomb::eq
