#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "coulomb/vec.hpp"

namespace coulomb {

enum class GridGeometry { Cartesian, Polar, Radial };

/// Scalar field sampled at the nodes of a structured grid.
///
/// Cartesian: nodes lower + (i, j, k)·spacing, shape[a] nodes per axis, x fastest.
/// Polar: a single centre node followed by rings r_i = i·dr (i ≥ 1) of shape[1] angles each.
/// Radial: nodes r_i = i·dr of a radially symmetric field in `dim` dimensions.
class GridField {
public:
    GridField() = default;

    static GridField cartesian(int dim, const Vec3& lower, double spacing, const std::array<int, 3>& shape);
    static GridField polar(double radius, int radial_nodes, int angular_nodes);
    static GridField radial(int dim, double radius, int nodes);

    GridGeometry geometry() const { return geometry_; }
    int dim() const { return dim_; }
    const std::array<int, 3>& shape() const { return shape_; }
    double spacing() const { return spacing_; }
    const Vec3& lower() const { return lower_; }
    /// Outer radius (polar, radial) or the upper corner's first coordinate offset (Cartesian).
    double extent() const;
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    std::size_t index(int i, int j = 0, int k = 0) const;
    /// Position of a node; radial grids report (r, 0, 0).
    Vec3 node(std::size_t idx) const;
    /// Volume of the node's control cell (clipped to the domain).
    double cell_measure(std::size_t idx) const;
    /// Σ value · cell_measure.
    double integrate() const;
    /// Value at an arbitrary point: multilinear (Cartesian), bilinear in (r, θ) (polar), linear in r (radial).
    /// Zero outside the grid.
    double sample(const Vec3& x) const;
    /// Same grid, new values.
    GridField with_values(std::vector<double> v) const;

    /// Self-describing CSV: a comment line with the geometry, then "x,y[,z],value" rows.
    void write_csv(std::ostream& os) const;
    std::string geometry_name() const;

private:
    GridGeometry geometry_ = GridGeometry::Cartesian;
    int dim_ = 2;
    Vec3 lower_{0.0, 0.0, 0.0};
    double spacing_ = 1.0;
    std::array<int, 3> shape_{1, 1, 1};
    std::vector<double> values_;
};

}  // namespace coulomb
