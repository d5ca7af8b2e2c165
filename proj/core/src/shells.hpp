#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "coulomb/errors.hpp"

namespace coulomb::detail {

inline long shell_count(int dim, int t) {
    if (t == 0) return 1;
    if (dim == 2) return 8L * t;
    return 24L * t * t + 2;
}

/// Calls f(c) for every integer vector c with max_i |c_i| == s.
template <class F>
void for_each_in_shell(int dim, int s, F&& f) {
    if (s == 0) {
        f(std::array<int, 3>{0, 0, 0});
        return;
    }
    if (dim == 2) {
        for (int i = -s; i <= s; ++i) {
            for (int j = -s; j <= s; ++j) {
                if (std::abs(i) == s || std::abs(j) == s) f(std::array<int, 3>{i, j, 0});
            }
        }
        return;
    }
    for (int i = -s; i <= s; ++i) {
        for (int j = -s; j <= s; ++j) {
            for (int k = -s; k <= s; ++k) {
                if (std::abs(i) == s || std::abs(j) == s || std::abs(k) == s) f(std::array<int, 3>{i, j, k});
            }
        }
    }
}

/// Upper bound on Σ_{t>S} count(t) env(t·radius_per_shell − shift) for a non-increasing envelope.
/// Every point of shell t lies at distance ≥ t·radius_per_shell − shift from the evaluation point.
template <class Env>
double shell_tail_bound(int dim, int S, double radius_per_shell, double shift, Env&& env) {
    double acc = 0.0;
    for (int t = S + 1; t < S + 100000; ++t) {
        const double r = t * radius_per_shell - shift;
        if (r <= 0.0) return std::numeric_limits<double>::infinity();
        const double term = static_cast<double>(shell_count(dim, t)) * env(r);
        acc += term;
        if (term == 0.0 || (t > S + 2 && term < 1e-18 * acc)) return acc;
    }
    return acc;
}

/// Smallest S ≥ 1 whose tail bound is below tol; AccuracyError past the cap.
template <class Env>
int required_shells(int dim, double radius_per_shell, double shift, double tol, int cap, const char* what,
                    Env&& env) {
    for (int S = 1; S <= cap; ++S) {
        if (shell_tail_bound(dim, S, radius_per_shell, shift, env) < tol) return S;
    }
    throw AccuracyError(std::string(what) + ": tail bound not reached within " + std::to_string(cap) + " shells");
}

}  // namespace coulomb::detail
