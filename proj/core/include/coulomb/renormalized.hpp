#pragma once

#include <span>
#include <string>
#include <vector>

#include "coulomb/lattice.hpp"

namespace coulomb::renorm {

using lattice::EwaldParams;
using lattice::Lattice;
using lattice::ModularParameter;

/// Numerical constants in force for a computation. Every report carries one of these.
struct Convention {
    int dim = 2;
    double coulomb_constant = 0.0;      // c_d in −Δg = c_d δ
    double field_energy_prefactor = 0.5;  // energies are ½∫|∇h|²
    double kappa = 0.0;                 // self-energy of a smeared charge: κ_d g(η) + γ_2
    double gamma2 = 0.0;
    std::string smearing = "none";
    std::string pair_order = "ordered pairs i != j";
};

struct EtaSample {
    double eta;
    double value;         // renormalized energy per unit volume at this η
    double field_energy;  // un-renormalized field energy per cell (excised or smeared)
};

/// Energy per unit volume of an infinite periodic jellium, with its η-extrapolation record.
struct RenormalizedValue {
    double value = 0.0;
    std::vector<EtaSample> eta_trace;  // strictly decreasing η
    double extrapolation_residual = 0.0;
    Convention convention;
};

struct Extrapolation {
    double limit;
    double slope;
    double residual;  // max |value − fit| over the points used
};

/// Least-squares fit value = limit + slope·η on the last three (smallest-η) samples.
Extrapolation extrapolate_eta(std::span<const EtaSample> trace);

/// Closed form through the torus Green's function:
/// W = (c_d / 2|T|) [ Σ_{j≠k} G(a_j − a_k) + n R(Λ) ], R(Λ) = lim (G − g) at 0.
RenormalizedValue periodic_w(const Lattice& lattice, const EwaldParams& params = {});

struct WindowOptions {
    int global_nodes = 160;    // trapezoid nodes per cell axis away from the points
    int angular_nodes = 64;    // around each point
    int radial_nodes = 24;     // Gauss–Legendre nodes per radial panel
    double monotone_slack = 1e-9;
    EwaldParams ewald{};
};

/// Window definition on one period cell: ½∫_{cell∖∪B(a_i,η)} |∇H|² + π n log η for each η,
/// extrapolated to η → 0 and divided by the cell area. 2D only.
RenormalizedValue window_w(const Lattice& lattice, std::span<const double> eta_list, const WindowOptions& options = {});

/// Default η list for window_w and smeared_w: fractions of the minimal distance.
std::vector<double> default_eta_list(const Lattice& lattice);

enum class SmearingShape { UniformBall, SmoothBump };

struct SmearingSpec {
    SmearingShape shape = SmearingShape::UniformBall;
    double eta = 0.1;
    int dim = 2;
};

struct SelfEnergyConstants {
    double kappa;
    double gamma2;  // zero for d = 3
};

/// Free-space energy ½∫|∇(g ∗ ρ_η)|² of one smeared charge (2D: with the −π log L far-field
/// counterterm removed), by radial quadrature at the given η.
double smeared_self_energy(const SmearingSpec& spec);

/// κ_d, γ_2 such that smeared_self_energy = κ_d g(η) + γ_2 𝟙_{d=2}.
SelfEnergyConstants self_energy_constants(const SmearingSpec& spec);

/// ρ̂(q) for the unit-radius profile (ρ_η has transform ρ̂(qη)).
double smearing_form_factor(SmearingShape shape, int dim, double q);

/// ρ(r) for the unit-radius profile, normalized to unit mass.
double smearing_profile(SmearingShape shape, int dim, double r);

struct SmearedOptions {
    double cutoff_factor = 240.0;  // Fourier cutoff K = cutoff_factor / (d_min − 2 η_max)
};

/// Smeared-charge renormalized energy: ½⨍|∇h_η|² − m (κ_d g(η) + γ_2) for each η, in d = 2, 3,
/// by a per-cell Fourier sum with form factors plus a continuum tail; extrapolated to η → 0.
RenormalizedValue smeared_w(const Lattice& lattice, SmearingShape shape, std::span<const double> eta_list,
                            const SmearedOptions& options = {});

struct ScanPoint {
    ModularParameter tau;
    double w;
};

struct LatticeScan {
    std::vector<ScanPoint> points;
    ModularParameter argmin;
    double w_min;
    double density;
};

/// periodic_w over fundamental_domain_grid(resolution). Near-ties (1e-12 relative) resolve to
/// Re τ ≥ 0 so that the triangular lattice is reported as e^{iπ/3}.
LatticeScan lattice_scan(double density, int resolution, int threads = 1, const EwaldParams& params = {});

}  // namespace coulomb::renorm
