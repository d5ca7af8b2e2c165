#pragma once

#include <stdexcept>
#include <string>

namespace coulomb {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs violate a documented precondition (bad density, τ off the half-plane, s ≤ d, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// A point set is not admissible: coincident points, offsets equal modulo the lattice.
class InvalidConfiguration : public Error {
public:
    using Error::Error;
};

/// Evaluation requested at a kernel singularity.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// The potential is outside the class the solver handles (e.g. ΔV < 0 on the support).
class ModelError : public Error {
public:
    using Error::Error;
};

/// A certified tolerance could not be reached within the hard caps.
class AccuracyError : public Error {
public:
    using Error::Error;
};

/// An iterative solver failed to converge.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Support of the equilibrium measure reaches the largest admissible domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// An observable is not defined for the given sample (e.g. too few interior points).
class UndefinedObservable : public Error {
public:
    using Error::Error;
};

}  // namespace coulomb
