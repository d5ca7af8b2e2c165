#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "coulomb/errors.hpp"

namespace coulomb::detail {

/// Rows diag_i x_i − Σ_j w_ij x_j with w_ij ≥ 0, stored compressed.
struct StencilMatrix {
    std::vector<double> diag;
    std::vector<std::size_t> start{0};
    std::vector<std::uint32_t> col;
    std::vector<double> weight;

    std::size_t rows() const { return diag.size(); }
    void add_row(double d) {
        diag.push_back(d);
        start.push_back(col.size());
    }
    void add_neighbor(std::uint32_t j, double w) {
        col.push_back(j);
        weight.push_back(w);
        start.back() = col.size();
    }
    double apply_row(std::size_t i, const std::vector<double>& x) const {
        double s = diag[i] * x[i];
        for (std::size_t p = start[i]; p < start[i + 1]; ++p) s -= weight[p] * x[col[p]];
        return s;
    }
};

struct RelaxationResult {
    long sweeps = 0;
    double residual = 0.0;
};

/// Projected SOR for A x = b + λ, x ≥ lower, λ ≥ 0, λ (x − lower) = 0 (no obstacle where lower = −∞).
/// Rows with fixed[i] keep their value. Stops when the projected-Jacobi natural residual
/// max |x − max(lower, x + (b − Ax)/diag)| falls below tol.
inline RelaxationResult projected_sor(const StencilMatrix& A, const std::vector<double>& b,
                                      const std::vector<double>& lower, const std::vector<char>& fixed,
                                      std::vector<double>& x, double omega, double tol, long max_sweeps,
                                      const char* what) {
    const std::size_t n = A.rows();
    auto natural_residual = [&] {
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i]) continue;
            const double y = std::max(lower[i], x[i] + (b[i] - A.apply_row(i, x)) / A.diag[i]);
            r = std::max(r, std::abs(y - x[i]));
        }
        return r;
    };
    RelaxationResult out;
    const int check_every = 16;
    for (long s = 1; s <= max_sweeps; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i]) continue;
            double acc = b[i];
            for (std::size_t p = A.start[i]; p < A.start[i + 1]; ++p) acc += A.weight[p] * x[A.col[p]];
            const double gs = acc / A.diag[i];
            x[i] = std::max(lower[i], x[i] + omega * (gs - x[i]));
        }
        if (s % check_every == 0) {
            out.residual = natural_residual();
            out.sweeps = s;
            if (out.residual < tol) return out;
        }
    }
    out.residual = natural_residual();
    throw NumericalError(std::string(what) + ": relaxation did not converge (natural residual " +
                             std::to_string(out.residual) + ")",
                         out.residual);
}

inline double default_omega(double nodes_across) {
    return 2.0 / (1.0 + std::sin(3.14159265358979 / std::max(nodes_across, 4.0)));
}

constexpr double kNoObstacle = -std::numeric_limits<double>::infinity();

}  // namespace coulomb::detail
