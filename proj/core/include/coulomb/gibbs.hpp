#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "coulomb/coulomb_gas.hpp"
#include "coulomb/grid_field.hpp"
#include "coulomb/potential.hpp"

namespace coulomb::gibbs {

using gas::PointConfiguration;

/// Markov chain for dℙ ∝ e^{−β H_n} dx: single-particle Gaussian random-walk proposals.
struct ChainState {
    PointConfiguration config;
    double beta = 1.0;
    double step_scale = 0.1;  // proposal standard deviation per coordinate
    std::uint64_t rng_seed = 0;
    std::mt19937_64 rng;
    double energy = 0.0;  // H_n of config, kept up to date incrementally
    std::uint64_t accepted = 0;
    std::uint64_t proposed = 0;

    /// Fresh state with rng seeded from rng_seed and the energy computed in full.
    static ChainState make(PointConfiguration config, double beta, double step_scale, std::uint64_t seed,
                           const Potential& V);
    double acceptance() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

/// H_n(x with x_i replaced by y) − H_n(x) in O(n); +∞ when y hits another point.
double energy_change(const PointConfiguration& config, std::size_t i, const Vec3& y, const Potential& V);

/// min(1, e^{−β ΔH}); β = 0 accepts everything, including ΔH = +∞.
double acceptance_probability(double beta, double delta_h);

/// Density of the Gaussian proposal y = x + step·N(0, I_d).
double proposal_density(const Vec3& from, const Vec3& to, double step, int dim);

/// Density of moving particle i from config to the point y in one step (pick i uniformly,
/// propose, accept); the rejection mass is not included.
double transition_density(const PointConfiguration& config, std::size_t i, const Vec3& y, double beta, double step,
                          const Potential& V);

/// One proposal/acceptance. Returns the state for chaining.
ChainState& metropolis_step(ChainState& state, const Potential& V);

struct Psi6Options {
    double core_radius = 0.8;  // points farther than this from the centre are not averaged over
    Vec3 centre{0.0, 0.0, 0.0};
};

/// |Σ_j (1/6) Σ_{k ∈ 6NN(j)} e^{6iθ_jk}| / #core over core points j. d = 2, n ≥ 7.
double psi6(const PointConfiguration& config, const Psi6Options& options = {});

struct ChainOptions {
    double step_scale = 0.0;  // 0: 0.5 / √(n max(β, 1))
    bool anneal = true;       // ramp β up geometrically during the first half of the burn-in
    int tune_window = 20;     // sweeps between step-size adjustments during the burn-in
    int psi6_every = 10;      // sweeps between ψ6 evaluations (0: never)
    int snapshot_every = 10;  // sweeps between stored snapshots
    int resync_every = 100;   // sweeps between full energy recomputations
    double histogram_half_width = 1.5;
    int histogram_bins = 60;
    Psi6Options psi6;
    std::optional<PointConfiguration> initial;  // default: i.i.d. sample of μ_0, else uniform on [−1, 1]^d
};

struct ChainStats {
    std::vector<double> energy_trace;  // H_n after every post-burn-in sweep (n proposals)
    std::vector<double> psi6_trace;
    GridField density_histogram;        // mean point count per bin; sums to n
    double autocorrelation_time = 0.0;  // integrated, in sweeps, of the energy trace
    double acceptance = 0.0;            // post-burn-in
    double step_scale = 0.0;
    double max_energy_drift = 0.0;      // largest |incremental − recomputed| at the resyncs
    double mean_energy = 0.0;
    double energy_standard_error = 0.0;
    double mean_psi6 = 0.0;
    double psi6_standard_error = 0.0;
    std::vector<PointConfiguration> snapshots;
    PointConfiguration final_config;
    std::vector<std::string> warnings;
};

/// burn_in and steps count sweeps of n proposals; statistics cover sweeps burn_in..steps.
/// The step size is tuned during the burn-in towards acceptance 0.3–0.5 and frozen afterwards.
ChainStats run_chain(int n, double beta, const Potential& V, long steps, long burn_in, std::uint64_t seed,
                     const ChainOptions& options = {});

/// Integrated autocorrelation time with Sokal's self-consistent window (M ≥ 5τ).
double integrated_autocorrelation(const std::vector<double>& x);

/// Mean and standard error by batch means (20 batches).
std::pair<double, double> batch_mean(const std::vector<double>& x);

struct FreeEnergyPoint {
    double beta;
    double mean_energy;
    double standard_error;
    double acceptance;
    double autocorrelation_time;
};

struct FreeEnergyEstimate {
    double beta = 0.0;
    double log_z = 0.0;
    double error = 0.0;            // one standard error from the chain means
    double reference_log_z = 0.0;  // at the smallest grid β
    /// (−(1/β) log Z + (n/2) log n) / n², to compare with ℱ(μ_0).
    double leading_term = 0.0;
    double leading_term_error = 0.0;
    std::vector<FreeEnergyPoint> grid;
    bool flagged = false;  // some chain missed its tuning band or its length is under 50 τ
    std::vector<std::string> warnings;
};

struct FreeEnergyOptions {
    long sweeps = 6000;
    long burn_in = 2000;
    std::uint64_t seed = 1;
    ChainOptions chain;
};

/// Thermodynamic integration ∂_b log Z_n^b = −⟨H_n⟩_b from the smallest grid β up to β, relative to
/// the confined ideal gas (pair terms dropped; closed form for quadratic V). log Z(β_0) is the ideal
/// value corrected by the first cumulant of the pair energy. The remainder ⟨H⟩_b − nd/(2b) is taken
/// interpolated by local quadratics in log b. beta_grid is increasing and ends at β.
FreeEnergyEstimate free_energy_leading(int n, double beta, const Potential& V, const std::vector<double>& beta_grid,
                                       const FreeEnergyOptions& options = {});

/// Geometric grid from beta0 to beta with the given number of points per decade.
std::vector<double> geometric_beta_grid(double beta0, double beta, int per_decade);

}  // namespace coulomb::gibbs
