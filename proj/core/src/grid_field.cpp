#include "coulomb/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "coulomb/errors.hpp"

namespace coulomb {

namespace {
constexpr double kPi = std::numbers::pi;
}

GridField GridField::cartesian(int dim, const Vec3& lower, double spacing, const std::array<int, 3>& shape) {
    if (dim != 2 && dim != 3) throw InvalidParameter("grid dimension must be 2 or 3");
    if (!(spacing > 0.0)) throw InvalidParameter("grid spacing must be positive");
    GridField g;
    g.geometry_ = GridGeometry::Cartesian;
    g.dim_ = dim;
    g.lower_ = lower;
    g.spacing_ = spacing;
    g.shape_ = {shape[0], shape[1], dim == 3 ? shape[2] : 1};
    for (int a = 0; a < dim; ++a)
        if (g.shape_[a] < 2) throw InvalidParameter("grid needs at least 2 nodes per axis");
    g.values_.assign(static_cast<std::size_t>(g.shape_[0]) * g.shape_[1] * g.shape_[2], 0.0);
    return g;
}

GridField GridField::polar(double radius, int radial_nodes, int angular_nodes) {
    if (!(radius > 0.0) || radial_nodes < 2 || angular_nodes < 4) throw InvalidParameter("invalid polar grid");
    GridField g;
    g.geometry_ = GridGeometry::Polar;
    g.dim_ = 2;
    g.spacing_ = radius / (radial_nodes - 1);
    g.shape_ = {radial_nodes, angular_nodes, 1};
    g.values_.assign(1 + static_cast<std::size_t>(radial_nodes - 1) * angular_nodes, 0.0);
    return g;
}

GridField GridField::radial(int dim, double radius, int nodes) {
    if (dim != 2 && dim != 3) throw InvalidParameter("grid dimension must be 2 or 3");
    if (!(radius > 0.0) || nodes < 2) throw InvalidParameter("invalid radial grid");
    GridField g;
    g.geometry_ = GridGeometry::Radial;
    g.dim_ = dim;
    g.spacing_ = radius / (nodes - 1);
    g.shape_ = {nodes, 1, 1};
    g.values_.assign(nodes, 0.0);
    return g;
}

double GridField::extent() const {
    if (geometry_ == GridGeometry::Cartesian) return spacing_ * (shape_[0] - 1);
    return spacing_ * (shape_[0] - 1);
}

std::size_t GridField::index(int i, int j, int k) const {
    if (geometry_ == GridGeometry::Polar) {
        if (i == 0) return 0;
        const int m = ((j % shape_[1]) + shape_[1]) % shape_[1];
        return 1 + static_cast<std::size_t>(i - 1) * shape_[1] + m;
    }
    return (static_cast<std::size_t>(k) * shape_[1] + j) * shape_[0] + i;
}

Vec3 GridField::node(std::size_t idx) const {
    switch (geometry_) {
        case GridGeometry::Radial:
            return {spacing_ * static_cast<double>(idx), 0.0, 0.0};
        case GridGeometry::Polar: {
            if (idx == 0) return {0.0, 0.0, 0.0};
            const std::size_t i = 1 + (idx - 1) / shape_[1];
            const std::size_t j = (idx - 1) % shape_[1];
            const double r = spacing_ * static_cast<double>(i);
            const double th = 2.0 * kPi * static_cast<double>(j) / shape_[1];
            return {r * std::cos(th), r * std::sin(th), 0.0};
        }
        case GridGeometry::Cartesian:
        default: {
            const std::size_t i = idx % shape_[0];
            const std::size_t j = (idx / shape_[0]) % shape_[1];
            const std::size_t k = idx / (static_cast<std::size_t>(shape_[0]) * shape_[1]);
            return {lower_[0] + spacing_ * i, lower_[1] + spacing_ * j, lower_[2] + spacing_ * k};
        }
    }
}

double GridField::cell_measure(std::size_t idx) const {
    const double h = spacing_;
    switch (geometry_) {
        case GridGeometry::Radial: {
            const double r = h * static_cast<double>(idx);
            const double lo = std::max(0.0, r - 0.5 * h);
            const double hi = std::min(h * (shape_[0] - 1), r + 0.5 * h);
            return dim_ == 2 ? kPi * (hi * hi - lo * lo) : 4.0 * kPi / 3.0 * (hi * hi * hi - lo * lo * lo);
        }
        case GridGeometry::Polar: {
            if (idx == 0) return kPi * 0.25 * h * h;
            const std::size_t i = 1 + (idx - 1) / shape_[1];
            const double r = h * static_cast<double>(i);
            const double lo = r - 0.5 * h;
            const double hi = std::min(h * (shape_[0] - 1), r + 0.5 * h);
            return 0.5 * (hi * hi - lo * lo) * (2.0 * kPi / shape_[1]);
        }
        case GridGeometry::Cartesian:
        default: {
            double m = 1.0;
            const std::size_t i = idx % shape_[0];
            const std::size_t j = (idx / shape_[0]) % shape_[1];
            const std::size_t k = idx / (static_cast<std::size_t>(shape_[0]) * shape_[1]);
            const std::size_t c[3] = {i, j, k};
            for (int a = 0; a < dim_; ++a) {
                const bool edge = c[a] == 0 || c[a] == static_cast<std::size_t>(shape_[a] - 1);
                m *= edge ? 0.5 * h : h;
            }
            return m;
        }
    }
}

double GridField::integrate() const {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * cell_measure(i);
    return s;
}

double GridField::sample(const Vec3& x) const {
    const double h = spacing_;
    if (geometry_ == GridGeometry::Radial) {
        const double r = norm(x);
        const double t = r / h;
        const int i = static_cast<int>(std::floor(t));
        if (i >= shape_[0] - 1) return i == shape_[0] - 1 && t == i ? values_[i] : 0.0;
        const double f = t - i;
        return (1.0 - f) * values_[i] + f * values_[i + 1];
    }
    if (geometry_ == GridGeometry::Polar) {
        const double r = std::hypot(x[0], x[1]);
        const double t = r / h;
        const int i = static_cast<int>(std::floor(t));
        if (i >= shape_[0] - 1) return 0.0;
        double th = std::atan2(x[1], x[0]);
        if (th < 0) th += 2.0 * kPi;
        const double u = th / (2.0 * kPi) * shape_[1];
        const int j = static_cast<int>(std::floor(u));
        const double fu = u - j;
        const double fr = t - i;
        auto ring = [&](int ii) {
            return (1.0 - fu) * values_[index(ii, j)] + fu * values_[index(ii, j + 1)];
        };
        return (1.0 - fr) * ring(i) + fr * ring(i + 1);
    }
    int base[3] = {0, 0, 0};
    double frac[3] = {0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
        const double t = (x[a] - lower_[a]) / h;
        if (t < 0.0 || t > shape_[a] - 1) return 0.0;
        base[a] = std::min(static_cast<int>(std::floor(t)), shape_[a] - 2);
        frac[a] = t - base[a];
    }
    double s = 0.0;
    const int corners = dim_ == 3 ? 8 : 4;
    for (int c = 0; c < corners; ++c) {
        double w = 1.0;
        int id[3] = {0, 0, 0};
        for (int a = 0; a < dim_; ++a) {
            const int bit = (c >> a) & 1;
            id[a] = base[a] + bit;
            w *= bit ? frac[a] : 1.0 - frac[a];
        }
        if (w != 0.0) s += w * values_[index(id[0], id[1], id[2])];
    }
    return s;
}

GridField GridField::with_values(std::vector<double> v) const {
    if (v.size() != values_.size()) throw InvalidParameter("value array does not match the grid");
    GridField g = *this;
    g.values_ = std::move(v);
    return g;
}

std::string GridField::geometry_name() const {
    switch (geometry_) {
        case GridGeometry::Radial: return "radial";
        case GridGeometry::Polar: return "polar";
        default: return "cartesian";
    }
}

void GridField::write_csv(std::ostream& os) const {
    os << "# geometry=" << geometry_name() << " dim=" << dim_ << " spacing=" << std::setprecision(17) << spacing_
       << " shape=" << shape_[0] << "x" << shape_[1] << "x" << shape_[2] << "\n";
    if (geometry_ == GridGeometry::Radial) {
        os << "r,value\n";
    } else if (dim_ == 3) {
        os << "x,y,z,value\n";
    } else {
        os << "x,y,value\n";
    }
    os << std::setprecision(12);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const Vec3 p = node(i);
        if (geometry_ == GridGeometry::Radial) {
            os << p[0];
        } else {
            os << p[0] << ',' << p[1];
            if (dim_ == 3) os << ',' << p[2];
        }
        os << ',' << values_[i] << '\n';
    }
}

}  // namespace coulomb
