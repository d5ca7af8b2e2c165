#pragma once

#include <memory>
#include <string>
#include <vector>

#include "coulomb/vec.hpp"

namespace coulomb {

/// Confining potential V: built-in quadratic, radial table, or a parsed expression in x, y, z, r.
class Potential {
public:
    enum class Kind { Quadratic, RadialTable, Expression };

    /// V(x) = coefficient·|x − centre|².
    static Potential quadratic(int dim, double coefficient = 1.0, const Vec3& centre = {0.0, 0.0, 0.0});
    /// V(x) = v(|x|) from samples (r_i, v_i), r strictly increasing from 0; quadratic extension beyond the table.
    static Potential radial_table(int dim, std::vector<double> r, std::vector<double> v);
    /// Expression with + − * / ^, parentheses, numbers, variables x y z r and functions log sqrt exp.
    static Potential parse(int dim, const std::string& text);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    const std::string& description() const { return description_; }
    /// True when V depends on |x − centre| only; the solver then uses the radial reduction.
    bool is_radial() const { return kind_ != Kind::Expression; }
    const Vec3& centre() const { return centre_; }
    /// Coefficient of the quadratic kind (1 for the others).
    double coefficient() const { return coefficient_; }

    double value(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const;
    /// Exact for the quadratic kind, central differences of the gradient otherwise.
    double laplacian(const Vec3& x) const;
    double radial_value(double r) const;

    /// Potential translated by a: W(x) = V(x − a).
    Potential translated(const Vec3& a) const;

    /// Checks growth against 2 log|x| (d = 2) or plain growth (d = 3) along coordinate rays.
    bool is_confining() const;

    struct Impl;

private:
    Kind kind_ = Kind::Quadratic;
    int dim_ = 2;
    double coefficient_ = 1.0;
    Vec3 centre_{0.0, 0.0, 0.0};
    Vec3 shift_{0.0, 0.0, 0.0};
    std::string description_;
    std::shared_ptr<const Impl> impl_;
};

}  // namespace coulomb
