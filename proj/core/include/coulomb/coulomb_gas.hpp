#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "coulomb/equilibrium.hpp"
#include "coulomb/potential.hpp"
#include "coulomb/vec.hpp"

namespace coulomb::gas {

/// n points in ℝ^d, d ∈ {2, 3}. Unused trailing coordinates are zero.
struct PointConfiguration {
    int dim = 2;
    std::vector<Vec3> points;

    std::size_t size() const { return points.size(); }
    /// Throws InvalidConfiguration on non-finite coordinates or a bad dimension,
    /// SingularityError on coincident points.
    void validate() const;

    static PointConfiguration read_csv(std::istream& is, int dim);
    void write_csv(std::ostream& os) const;
};

/// g(r): −log r (d = 2), 1/r (d = 3).
double kernel(int dim, double r);

/// H_n = Σ_{i≠j} g(x_i − x_j) + n Σ V(x_i), ordered pairs (each unordered pair counted twice).
double hamiltonian(const PointConfiguration& config, const Potential& V);

/// ∂H_n/∂x_i = 2 Σ_{j≠i} ∇g(x_i − x_j) + n ∇V(x_i).
std::vector<Vec3> gradient(const PointConfiguration& config, const Potential& V);

/// Energy of one minimization start.
struct StartRecord {
    std::uint64_t seed = 0;
    double energy = 0.0;
    double gradient_norm = 0.0;  // max over points of |∂H/∂x_i|
    int iterations = 0;
    int restarts = 0;   // line-search failures recovered by resetting the curvature memory
    bool converged = false;
    std::vector<double> energy_history;  // accepted iterates, when requested
};

struct MinimizeOptions {
    int starts = 8;
    double tolerance = 1e-8;  // on max_i |∂H/∂x_i|
    int max_iterations = 20000;
    int memory = 12;
    std::uint64_t seed = 1;
    int threads = 1;
    /// Grid for the μ_0 solve that seeds the starts.
    double mu0_spacing = 1.0 / 64.0;
    bool record_history = false;
};

struct MinimizeResult {
    PointConfiguration config;  // best local minimum
    double energy = 0.0;
    double gradient_norm = 0.0;
    std::vector<StartRecord> starts;
    /// Largest minus smallest energy over the converged starts.
    double spread = 0.0;
    /// Number of converged starts whose energy is within 1e-8·max(1, |E|) of the best.
    int best_basin_hits = 0;
    bool seeded_from_mu0 = false;
};

/// Multi-start L-BFGS with Armijo backtracking. Starts are i.i.d. samples of the solved μ_0,
/// falling back to the uniform law on a box when the solve fails.
MinimizeResult minimize_fekete(int n, const Potential& V, const MinimizeOptions& options = {});

/// Same, but seeded from a measure that is already available.
MinimizeResult minimize_fekete(int n, const Potential& V, const eq::EquilibriumMeasure& mu0,
                               const MinimizeOptions& options = {});

/// Symmetric positive definite 2×2 matrix; Q(x) = xᵀ M x.
struct QuadraticForm {
    double a = 1.0, b = 0.0, c = 1.0;  // M = [[a, b], [b, c]]

    /// Throws InvalidParameter unless positive definite.
    void validate() const;
    double operator()(const Vec3& x) const { return a * x[0] * x[0] + 2.0 * b * x[0] * x[1] + c * x[1] * x[1]; }
};

/// w_n = −Σ_{i≠j} log|x_i − x_j| + n Σ Q(x_i), minimized as in minimize_fekete.
MinimizeResult minimize_local_wn(int n, const QuadraticForm& Q, const MinimizeOptions& options = {});

/// Terms of H_n = n²ℱ(μ_0) − (n/2) log n + (1/π) W(∇h'_n, 𝟏) + 2n Σ ζ(x_i) for V = |x|², d = 2.
struct SplittingReport {
    double lhs = 0.0;
    double mean_field_term = 0.0;
    double log_term = 0.0;
    double w_term = 0.0;
    double zeta_term = 0.0;
    double residual = 0.0;
    double relative_residual = 0.0;  // residual / |lhs|, or residual when lhs = 0
    /// ½∫_{|x'−x'_i|>η}|∇h'_n|² + π n log η at a few η (blown-up units), ending at the η → 0 limit.
    std::vector<std::pair<double, double>> eta_trace;
};

struct SplittingOptions {
    double tolerance = 1e-10;  // absolute tolerance of the outer quadratures (blown-up units)
    int max_pieces = 4000;  // per one-dimensional integral
};

/// Evaluates every term of the splitting identity independently. The W term is a direct
/// quadrature of |∇h'_n|² for the blown-up configuration x' = √n x with the closed-form disk
/// potential, plus the exact multipole tail outside a ball containing all charges.
SplittingReport splitting_check(const PointConfiguration& config, const SplittingOptions& options = {});

struct WindowCount {
    Vec3 centre;     // blown-up coordinates
    double ell = 0.0;
    int count = 0;
    double expected = 0.0;
    double deviation = 0.0;  // |count − expected|
};

/// Counts blown-up points x' = n^{1/d} x in the cubes K_ℓ(a) of side ℓ and compares with the
/// blown-up μ_0 mass. Windows not inside the blown-up support throw InvalidParameter unless
/// require_inside is false.
std::vector<WindowCount> window_point_counts(const PointConfiguration& config, const eq::EquilibriumMeasure& mu0,
                                             std::span<const Vec3> centres, double ell, bool require_inside = true);

/// max |F_emp(r_k) − F_μ0(r_k)| over the radii r_k enclosing μ_0 mass k/bins, k = 1..bins−1,
/// for the circle law (V = |x|², d = 2), where r_k = √(k/bins). With smoothing > 0 each point is
/// spread uniformly over a disk of that radius first.
struct RadialCdfCheck {
    std::vector<double> radii;
    std::vector<double> empirical;
    std::vector<double> expected;
    double max_deviation = 0.0;
};
RadialCdfCheck circle_law_cdf(std::span<const Vec3> points, int bins = 10, double smoothing = 0.0);

}  // namespace coulomb::gas
