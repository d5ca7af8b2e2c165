#include "coulomb/renormalized.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "coulomb/errors.hpp"

namespace coulomb::renorm {

Extrapolation extrapolate_eta(std::span<const EtaSample> trace) {
    if (trace.size() < 3) throw InvalidParameter("extrapolation needs at least 3 eta samples");
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (!(trace[i].eta < trace[i - 1].eta)) throw InvalidParameter("eta trace must be strictly decreasing");

    const auto pts = trace.subspan(trace.size() - 3);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
        sx += p.eta;
        sy += p.value;
        sxx += p.eta * p.eta;
        sxy += p.eta * p.value;
    }
    const double n = 3.0;
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double limit = (sy - slope * sx) / n;
    double res = 0.0;
    for (const auto& p : pts) res = std::max(res, std::abs(p.value - (limit + slope * p.eta)));
    return {limit, slope, res};
}

std::vector<double> default_eta_list(const Lattice& lattice) {
    const double d = lattice.min_distance();
    if (lattice.dim() == 2) return {0.01 * d, 0.005 * d, 0.0025 * d, 0.00125 * d};
    return {0.008 * d, 0.004 * d, 0.002 * d, 0.001 * d};
}

RenormalizedValue periodic_w(const Lattice& lattice, const EwaldParams& params) {
    const int d = lattice.dim();
    const lattice::EwaldGreen green(lattice, params);
    const auto pts = lattice.offset_positions();
    const std::size_t n = pts.size();

    double pair = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k)
            if (j != k) pair += green.value(pts[j] - pts[k]);

    RenormalizedValue out;
    const double cd = lattice::coulomb_constant(d);
    out.value = cd / (2.0 * lattice.cell_volume()) * (pair + static_cast<double>(n) * green.self_constant());
    out.convention.dim = d;
    out.convention.coulomb_constant = cd;
    return out;
}

LatticeScan lattice_scan(double density, int resolution, int threads, const EwaldParams& params) {
    if (resolution < 2) throw InvalidParameter("lattice scan resolution must be >= 2");
    if (!(density > 0.0)) throw InvalidParameter("density must be positive");
    const auto grid = lattice::fundamental_domain_grid(resolution);
    LatticeScan scan;
    scan.density = density;
    scan.points.resize(grid.size());

    auto work = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < grid.size(); i += step)
            scan.points[i] = {grid[i], periodic_w(lattice::make_lattice_from_tau(grid[i], density), params).value};
    };
    const int nt = std::max(1, threads);
    if (nt == 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(work, static_cast<std::size_t>(t), static_cast<std::size_t>(nt));
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < scan.points.size(); ++i) {
        const double wi = scan.points[i].w, wb = scan.points[best].w;
        const double tie = 1e-12 * std::max(1.0, std::abs(wb));
        if (wi < wb - tie || (std::abs(wi - wb) <= tie && scan.points[best].tau.re() < 0.0 && scan.points[i].tau.re() >= 0.0))
            best = i;
    }
    scan.argmin = scan.points[best].tau;
    scan.w_min = scan.points[best].w;
    return scan;
}

}  // namespace coulomb::renorm
