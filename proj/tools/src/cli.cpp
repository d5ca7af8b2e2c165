#include "coulomb_cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "coulomb/coulomb_gas.hpp"
#include "coulomb/equilibrium.hpp"
#include "coulomb/errors.hpp"
#include "coulomb/gibbs.hpp"
#include "coulomb/lattice.hpp"
#include "coulomb/potential.hpp"
#include "coulomb/renormalized.hpp"
#include "output.hpp"

namespace coulomb::cli {

namespace fs = std::filesystem;

namespace {

// Union of every subcommand's parameters; each subcommand binds the subset it uses.
struct Params {
    std::string out;
    std::string config;
    int threads = 1;

    std::string potential = "quadratic";
    int dim = 2;
    double spacing = 0.0;
    double half_width = 0.0;
    double tolerance = 0.0;
    bool no_radial = false;

    std::string domain = "disk";
    double radius = 1.0;
    double width = 2.0;
    double height = 1.0;
    int angular_nodes = 0;
    std::string lambda_factors = "0.9,2,10,100,1000";
    std::string lambdas;

    int n = 0;
    std::uint64_t seed = 1;
    int starts = 8;
    int max_iterations = 20000;
    double mu0_spacing = 1.0 / 64.0;
    std::string input;
    double spread_radius = 1.2;

    int resolution = 16;
    double density = 1.0;
    std::string lattice = "triangular";
    double tau_re = 0.0;
    double tau_im = 1.0;
    std::string methods = "periodic,window,smeared";
    std::string shape = "uniform";
    std::string etas;
    std::string lattices = "sc,bcc,fcc";

    double beta = 0.0;
    long steps = 4000;
    long burn_in = 1000;
    double step_scale = 0.0;
    bool no_anneal = false;
    double beta0 = 1e-4;
    int per_decade = 4;
};

std::vector<double> parse_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) continue;
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (pos != item.size() || !std::isfinite(v)) throw InvalidParameter("bad number '" + item + "' in --" + what);
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void check_spacing(const Params& p) {
    if (p.spacing < 0.0 || !std::isfinite(p.spacing)) throw InvalidParameter("--spacing must be positive");
}

Potential make_potential(const Params& p) {
    if (p.dim != 2 && p.dim != 3) throw InvalidParameter("--dim must be 2 or 3");
    const std::string& s = p.potential;
    if (s == "quadratic") return Potential::quadratic(p.dim);
    if (s.rfind("quadratic:", 0) == 0) {
        const auto c = parse_list(s.substr(10), "potential");
        if (c.size() != 1 || !(c[0] > 0.0)) throw InvalidParameter("quadratic:<c> needs c > 0");
        return Potential::quadratic(p.dim, c[0]);
    }
    Potential V = Potential::parse(p.dim, s);
    if (!V.is_confining()) throw InvalidParameter("potential '" + s + "' is not confining");
    return V;
}

bool is_unit_quadratic(const Potential& V) {
    return V.kind() == Potential::Kind::Quadratic && V.coefficient() == 1.0 && V.centre()[0] == 0.0 &&
           V.centre()[1] == 0.0 && V.centre()[2] == 0.0;
}

eq::Domain make_domain(const Params& p) {
    if (p.domain == "disk") {
        if (!(p.radius > 0.0)) throw InvalidParameter("--radius must be positive");
        return eq::Domain::disk(p.radius);
    }
    if (p.domain == "rectangle") {
        if (!(p.width > 0.0) || !(p.height > 0.0)) throw InvalidParameter("--width and --height must be positive");
        return eq::Domain::rectangle(p.width, p.height);
    }
    throw InvalidParameter("--domain must be disk or rectangle");
}

lattice::Lattice make_lattice_2d(const Params& p) {
    if (!(p.density > 0.0)) throw InvalidParameter("--density must be positive");
    if (p.lattice == "square") return lattice::Lattice::square(p.density);
    if (p.lattice == "triangular" || p.lattice == "hexagonal") return lattice::Lattice::triangular(p.density);
    if (p.lattice == "tau") return lattice::make_lattice_from_tau({{p.tau_re, p.tau_im}}, p.density);
    throw InvalidParameter("--lattice must be square, triangular or tau");
}

lattice::Lattice make_lattice_3d(const std::string& name, double density) {
    if (name == "sc") return lattice::Lattice::simple_cubic(density);
    if (name == "bcc") return lattice::Lattice::body_centered_cubic(density);
    if (name == "fcc") return lattice::Lattice::face_centered_cubic(density);
    throw InvalidParameter("unknown 3D lattice '" + name + "' (sc, bcc, fcc)");
}

renorm::SmearingShape make_shape(const std::string& s) {
    if (s == "uniform") return renorm::SmearingShape::UniformBall;
    if (s == "bump") return renorm::SmearingShape::SmoothBump;
    throw InvalidParameter("--shape must be uniform or bump");
}

void require_positive(double v, const char* flag) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(std::string("--") + flag + " must be positive");
}

json vec_json(const Vec3& x, int dim) {
    json a = json::array();
    for (int k = 0; k < dim; ++k) a.push_back(x[k]);
    return a;
}

json points_json(const gas::PointConfiguration& c) {
    json a = json::array();
    for (const auto& x : c.points) a.push_back(vec_json(x, c.dim));
    return a;
}

std::string csv_of(const gas::PointConfiguration& c) {
    std::ostringstream ss;
    c.write_csv(ss);
    return ss.str();
}

std::string csv_of(const GridField& g) {
    std::ostringstream ss;
    g.write_csv(ss);
    return ss.str();
}

json eta_trace_json(const renorm::RenormalizedValue& v) {
    json a = json::array();
    for (const auto& s : v.eta_trace) a.push_back({{"eta", s.eta}, {"value", s.value}, {"field_energy", s.field_energy}});
    return a;
}

json renorm_json(const renorm::RenormalizedValue& v) {
    return {{"value", v.value}, {"extrapolation_residual", v.extrapolation_residual}, {"eta_trace", eta_trace_json(v)}};
}

// A prepared command: validated inputs captured, ready to run against an output directory.
using Job = std::function<json(RunOutput&, std::ostream&)>;

// ---------------------------------------------------------------------------------------------

Job equilibrium_job(const Params& p) {
    const Potential V = make_potential(p);
    check_spacing(p);
    eq::GridSpec g;
    g.spacing = p.spacing > 0.0 ? p.spacing : 1.0 / 64.0;
    require_positive(g.spacing, "spacing");
    if (p.half_width < 0.0) throw InvalidParameter("--half-width must be non-negative");
    g.half_width = p.half_width;
    if (p.tolerance > 0.0) g.tolerance = p.tolerance;
    g.use_radial_symmetry = !p.no_radial;
    return [V, g](RunOutput& o, std::ostream& out) {
        const auto mu = eq::solve_equilibrium_measure(V, g);
        const double F = eq::mean_field_energy(mu, V);
        double rmax = 0.0, dmax = 0.0, support = 0.0;
        for (std::size_t i = 0; i < mu.density.size(); ++i) {
            if (mu.support_mask[i] > 0.5) {
                rmax = std::max(rmax, norm(mu.density.node(i) - (mu.radial() ? Vec3{} : mu.centre)));
                support += mu.density.cell_measure(i);
            }
            dmax = std::max(dmax, mu.density[i]);
        }
        json profile = json::array();
        const double h = g.spacing;
        for (int k = 0; k * h <= 1.25 * rmax + h; ++k) {
            const double r = k * h;
            const Vec3 x = mu.radial() ? Vec3{r, 0.0, 0.0} : mu.centre + Vec3{r, 0.0, 0.0};
            profile.push_back({r, mu.density_at(x)});
        }
        o.write_text("density.csv", csv_of(mu.density));
        if (mu.zeta.size()) o.write_text("zeta.csv", csv_of(mu.zeta));
        json r;
        r["dim"] = mu.dim();
        r["geometry"] = mu.density.geometry_name();
        r["mean_field_energy"] = F;
        r["el_constant"] = mu.el_constant;
        r["total_mass"] = mu.total_mass();
        r["support_radius"] = rmax;
        r["support_measure"] = support;
        r["density_max"] = dmax;
        r["sweeps"] = mu.stats.sweeps;
        r["enlargements"] = mu.stats.enlargements;
        r["complementarity"] = mu.stats.complementarity;
        r["profile"] = profile;
        out << "mean-field energy " << F << ", support radius " << rmax << '\n';
        return r;
    };
}

Job meissner_job(const Params& p) {
    const eq::Domain D = make_domain(p);
    check_spacing(p);
    eq::PlanarGrid g;
    g.spacing = p.spacing > 0.0 ? p.spacing : 1.0 / 200.0;
    require_positive(g.spacing, "spacing");
    g.angular_nodes = p.angular_nodes;
    if (p.tolerance > 0.0) g.tolerance = p.tolerance;
    return [D, g](RunOutput& o, std::ostream& out) {
        const auto m = eq::solve_meissner_h0(D, g);
        o.write_text("h0.csv", csv_of(m.h0));
        json r;
        r["domain"] = D.kind == eq::Domain::Kind::Disk ? "disk" : "rectangle";
        r["lambda_omega"] = m.lambda_omega;
        r["max_deviation"] = m.max_deviation;
        r["residual"] = m.residual;
        r["sweeps"] = m.sweeps;
        if (D.kind == eq::Domain::Kind::Disk) {
            const double exact = eq::disk_lambda_omega_exact(D.radius);
            r["lambda_omega_exact"] = exact;
            r["relative_error"] = std::abs(m.lambda_omega - exact) / exact;
        }
        json profile = json::array();
        const double half = D.kind == eq::Domain::Kind::Disk ? D.radius : 0.5 * D.width;
        const Vec3 c = D.kind == eq::Domain::Kind::Disk ? Vec3{} : Vec3{0.5 * D.width, 0.5 * D.height, 0.0};
        for (int k = 0; k <= 100; ++k) {
            const double x = -half + 2.0 * half * k / 100.0;
            profile.push_back({x, m.h0.sample(c + Vec3{x * (1.0 - 1e-12), 0.0, 0.0})});
        }
        r["profile"] = profile;
        out << "lambda_omega " << m.lambda_omega << '\n';
        return r;
    };
}

Job obstacle_job(const Params& p) {
    const eq::Domain D = make_domain(p);
    check_spacing(p);
    eq::PlanarGrid g;
    g.spacing = p.spacing > 0.0 ? p.spacing : 1.0 / 200.0;
    require_positive(g.spacing, "spacing");
    g.angular_nodes = p.angular_nodes;
    if (p.tolerance > 0.0) g.tolerance = p.tolerance;
    const auto absolute = parse_list(p.lambdas, "lambda");
    const auto factors = parse_list(p.lambda_factors, "lambda-factors");
    for (double v : absolute) require_positive(v, "lambda");
    for (double v : factors) require_positive(v, "lambda-factors");
    if (absolute.empty() && factors.empty()) throw InvalidParameter("no lambda values given");
    return [D, g, absolute, factors](RunOutput& o, std::ostream& out) {
        const auto m = eq::solve_meissner_h0(D, g);
        std::vector<std::pair<double, double>> lams;  // (factor, λ)
        if (!absolute.empty())
            for (double l : absolute) lams.emplace_back(l / m.lambda_omega, l);
        else
            for (double f : factors) lams.emplace_back(f, f * m.lambda_omega);
        std::sort(lams.begin(), lams.end());
        const bool disk = D.kind == eq::Domain::Kind::Disk;
        json runs = json::array();
        bool monotone = true;
        double prev_cov = -1.0;
        std::vector<std::vector<bool>> masks;
        for (std::size_t k = 0; k < lams.size(); ++k) {
            const auto res = eq::solve_gl_obstacle(lams[k].second, D, g);
            std::vector<bool> mask(res.omega_mask.size());
            for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = res.omega_mask[i] > 0.5;
            if (!masks.empty())
                for (std::size_t i = 0; i < mask.size(); ++i)
                    if (masks.back()[i] && !mask[i]) monotone = false;
            if (res.coverage < prev_cov) monotone = false;
            prev_cov = res.coverage;
            masks.push_back(std::move(mask));
            o.write_text("mu_" + std::to_string(k) + ".csv", csv_of(res.mu));
            json run;
            run["lambda"] = res.lambda;
            run["lambda_over_lambda_omega"] = lams[k].first;
            run["obstacle"] = res.obstacle;
            run["coverage"] = res.coverage;
            if (disk) run["coverage_exact"] = eq::disk_coverage_exact(res.lambda, D.radius);
            run["interior_density"] = res.interior_density;
            run["target_density"] = 1.0 - 1.0 / (2.0 * res.lambda);
            run["complementarity"] = res.complementarity;
            run["sweeps"] = res.sweeps;
            json profile = json::array();
            const double half = disk ? D.radius : 0.5 * D.width;
            const Vec3 c = disk ? Vec3{} : Vec3{0.5 * D.width, 0.5 * D.height, 0.0};
            for (int j = 0; j <= 100; ++j) {
                const double x = -half + 2.0 * half * j / 100.0;
                profile.push_back({x, res.mu.sample(c + Vec3{x * (1.0 - 1e-12), 0.0, 0.0})});
            }
            run["profile"] = profile;
            runs.push_back(run);
            out << "lambda " << res.lambda << ": coverage " << res.coverage << ", density " << res.interior_density
                << '\n';
        }
        json r;
        r["domain"] = disk ? "disk" : "rectangle";
        r["lambda_omega"] = m.lambda_omega;
        r["runs"] = runs;
        r["monotone"] = monotone;
        return r;
    };
}

json circle_law_json(const gas::RadialCdfCheck& c, double smoothing) {
    return {{"radii", c.radii},
            {"empirical", c.empirical},
            {"expected", c.expected},
            {"max_deviation", c.max_deviation},
            {"smoothing", smoothing}};
}

Job fekete_job(const Params& p) {
    if (p.n < 1) throw InvalidParameter("--n must be at least 1");
    const Potential V = make_potential(p);
    gas::MinimizeOptions mo;
    mo.starts = p.starts;
    if (mo.starts < 1) throw InvalidParameter("--starts must be at least 1");
    if (p.tolerance > 0.0) mo.tolerance = p.tolerance;
    mo.max_iterations = p.max_iterations;
    if (mo.max_iterations < 1) throw InvalidParameter("--max-iterations must be at least 1");
    mo.seed = p.seed;
    mo.threads = p.threads;
    mo.mu0_spacing = p.mu0_spacing;
    require_positive(mo.mu0_spacing, "mu0-spacing");
    const int n = p.n;
    return [V, mo, n](RunOutput& o, std::ostream& out) {
        const auto res = gas::minimize_fekete(n, V, mo);
        o.write_text("fekete_points.csv", csv_of(res.config));
        json starts = json::array();
        for (const auto& s : res.starts)
            starts.push_back({{"seed", s.seed},
                              {"energy", s.energy},
                              {"gradient_norm", s.gradient_norm},
                              {"iterations", s.iterations},
                              {"restarts", s.restarts},
                              {"converged", s.converged}});
        json r;
        r["n"] = n;
        r["dim"] = V.dim();
        r["energy"] = res.energy;
        r["gradient_norm"] = res.gradient_norm;
        r["spread"] = res.spread;
        r["best_basin_hits"] = res.best_basin_hits;
        r["seeded_from_mu0"] = res.seeded_from_mu0;
        r["starts"] = starts;
        if (V.dim() == 2 && is_unit_quadratic(V) && n >= 1) {
            const double s = 1.0 / std::sqrt(static_cast<double>(n));
            r["circle_law"] = circle_law_json(gas::circle_law_cdf(res.config.points, 10, s), s);
        }
        r["points"] = points_json(res.config);
        out << "energy " << res.energy << ", spread " << res.spread << " over " << res.starts.size() << " starts\n";
        return r;
    };
}

Job split_check_job(const Params& p) {
    gas::PointConfiguration cfg;
    cfg.dim = 2;
    if (!p.input.empty()) {
        std::ifstream is(p.input);
        if (!is) throw InvalidParameter("cannot read --input " + p.input);
        cfg = gas::PointConfiguration::read_csv(is, 2);
    } else {
        if (p.n < 1) throw InvalidParameter("--n must be at least 1");
        require_positive(p.spread_radius, "spread-radius");
        std::mt19937_64 rng(p.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < p.n; ++i) {
            const double r = p.spread_radius * std::sqrt(u(rng)), t = 2.0 * std::numbers::pi * u(rng);
            cfg.points.push_back({r * std::cos(t), r * std::sin(t), 0.0});
        }
    }
    cfg.validate();
    gas::SplittingOptions so;
    if (p.tolerance > 0.0) so.tolerance = p.tolerance;
    return [cfg, so](RunOutput& o, std::ostream& out) {
        const auto rep = gas::splitting_check(cfg, so);
        o.write_text("split_points.csv", csv_of(cfg));
        json trace = json::array();
        for (const auto& [eta, v] : rep.eta_trace) trace.push_back({{"eta", eta}, {"value", v}});
        json r;
        r["n"] = cfg.size();
        r["hamiltonian"] = rep.lhs;
        r["mean_field_term"] = rep.mean_field_term;
        r["log_term"] = rep.log_term;
        r["w_term"] = rep.w_term;
        r["zeta_term"] = rep.zeta_term;
        r["residual"] = rep.residual;
        r["relative_residual"] = rep.relative_residual;
        r["eta_trace"] = trace;
        r["points"] = points_json(cfg);
        out << "residual " << rep.residual << " (relative " << rep.relative_residual << ")\n";
        return r;
    };
}

Job lattice_scan_job(const Params& p) {
    if (p.resolution < 2) throw InvalidParameter("--resolution must be at least 2");
    require_positive(p.density, "density");
    const int res = p.resolution, threads = p.threads;
    const double density = p.density;
    return [=](RunOutput& o, std::ostream& out) {
        const auto scan = renorm::lattice_scan(density, res, threads);
        std::ostringstream csv;
        csv.precision(17);
        csv << "re_tau,im_tau,w\n";
        json pts = json::array();
        for (const auto& s : scan.points) {
            csv << s.tau.re() << ',' << s.tau.im() << ',' << s.w << '\n';
            pts.push_back({s.tau.re(), s.tau.im(), s.w});
        }
        o.write_text("lattice_scan.csv", csv.str());
        const auto hex = lattice::ModularParameter::hexagonal();
        const double w_sq = renorm::periodic_w(lattice::make_lattice_from_tau(lattice::ModularParameter::square(), density)).value;
        const double w_hex = renorm::periodic_w(lattice::make_lattice_from_tau(hex, density)).value;
        const bool is_hex = scan.argmin.re() == hex.re() && std::abs(scan.argmin.im() - hex.im()) < 1e-12;
        json r;
        r["resolution"] = res;
        r["density"] = density;
        r["argmin"] = {{"re", scan.argmin.re()}, {"im", scan.argmin.im()}};
        r["w_min"] = scan.w_min;
        r["argmin_is_hexagonal"] = is_hex;
        r["w_square"] = w_sq;
        r["w_hexagonal"] = w_hex;
        r["gap_square_minus_hexagonal"] = w_sq - w_hex;
        r["points"] = pts;
        out << "argmin tau = " << scan.argmin.re() << " + " << scan.argmin.im() << "i, W = " << scan.w_min << '\n';
        return r;
    };
}

Job renorm_job(const Params& p) {
    const auto L = make_lattice_2d(p);
    const auto methods = split_words(p.methods);
    if (methods.empty()) throw InvalidParameter("--methods is empty");
    for (const auto& m : methods)
        if (m != "periodic" && m != "window" && m != "smeared") throw InvalidParameter("unknown method '" + m + "'");
    const auto shape = make_shape(p.shape);
    auto etas = parse_list(p.etas, "eta");
    for (double e : etas) require_positive(e, "eta");
    if (etas.empty()) etas = renorm::default_eta_list(L);
    const std::string name = p.lattice;
    return [=](RunOutput&, std::ostream& out) {
        json r;
        r["lattice"] = name;
        r["density"] = L.density();
        r["eta_list"] = etas;
        json vals = json::object();
        std::map<std::string, double> v;
        for (const auto& m : methods) {
            renorm::RenormalizedValue rv;
            if (m == "periodic") rv = renorm::periodic_w(L);
            else if (m == "window") rv = renorm::window_w(L, etas);
            else rv = renorm::smeared_w(L, shape, etas);
            vals[m] = renorm_json(rv);
            v[m] = rv.value;
            out << m << ": " << rv.value << '\n';
        }
        r["values"] = vals;
        if (v.count("periodic")) {
            json diff = json::object();
            for (const auto& [m, x] : v)
                if (m != "periodic") diff[m] = std::abs(x - v["periodic"]);
            r["difference_from_periodic"] = diff;
        }
        return r;
    };
}

Job jellium3d_job(const Params& p) {
    require_positive(p.density, "density");
    const auto names = split_words(p.lattices);
    if (names.empty()) throw InvalidParameter("--lattices is empty");
    std::vector<lattice::Lattice> lats;
    for (const auto& nm : names) lats.push_back(make_lattice_3d(nm, p.density));
    const auto shape = make_shape(p.shape);
    const auto etas = parse_list(p.etas, "eta");
    for (double e : etas) require_positive(e, "eta");
    return [=](RunOutput&, std::ostream& out) {
        json entries = json::array();
        std::vector<std::pair<double, std::string>> order;
        for (std::size_t k = 0; k < lats.size(); ++k) {
            const auto list = etas.empty() ? renorm::default_eta_list(lats[k]) : etas;
            const auto sm = renorm::smeared_w(lats[k], shape, list);
            const auto per = renorm::periodic_w(lats[k]);
            json e = renorm_json(sm);
            e["lattice"] = names[k];
            e["stable"] = sm.extrapolation_residual < 1e-3;
            e["periodic_value"] = per.value;
            e["difference_from_periodic"] = std::abs(sm.value - per.value);
            entries.push_back(e);
            order.emplace_back(sm.value, names[k]);
            out << names[k] << ": " << sm.value << " (residual " << sm.extrapolation_residual << ")\n";
        }
        std::sort(order.begin(), order.end());
        json ord = json::array();
        for (const auto& o : order) ord.push_back(o.second);
        json r;
        r["density"] = lats.front().density();
        r["shape"] = shape == renorm::SmearingShape::UniformBall ? "uniform" : "bump";
        r["lattices"] = entries;
        r["ordering_lowest_first"] = ord;
        return r;
    };
}

Job sample_job(const Params& p) {
    if (p.n < 2) throw InvalidParameter("--n must be at least 2");
    require_positive(p.beta, "beta");
    if (p.steps < 1 || p.burn_in < 0) throw InvalidParameter("--steps must be positive and --burn-in non-negative");
    if (p.step_scale < 0.0) throw InvalidParameter("--step-scale must be non-negative");
    const Potential V = make_potential(p);
    gibbs::ChainOptions co;
    co.step_scale = p.step_scale;
    co.anneal = !p.no_anneal;
    if (V.dim() == 3) co.histogram_bins = 24;
    if (V.dim() == 3 || p.n < 7) co.psi6_every = 0;
    const int n = p.n;
    const double beta = p.beta;
    const long steps = p.steps, burn = p.burn_in;
    const std::uint64_t seed = p.seed;
    return [=](RunOutput& o, std::ostream& out) {
        const auto st = gibbs::run_chain(n, beta, V, steps, burn, seed, co);
        o.write_text("sample_points.csv", csv_of(st.final_config));
        std::ostringstream tr;
        tr.precision(17);
        tr << "sweep,energy\n";
        for (std::size_t k = 0; k < st.energy_trace.size(); ++k) tr << k << ',' << st.energy_trace[k] << '\n';
        o.write_text("energy_trace.csv", tr.str());
        o.write_text("density_histogram.csv", csv_of(st.density_histogram));
        json r;
        r["n"] = n;
        r["beta"] = beta;
        r["dim"] = V.dim();
        r["mean_energy"] = st.mean_energy;
        r["energy_standard_error"] = st.energy_standard_error;
        r["autocorrelation_time"] = st.autocorrelation_time;
        r["acceptance"] = st.acceptance;
        r["step_scale"] = st.step_scale;
        r["max_energy_drift"] = st.max_energy_drift;
        if (co.psi6_every > 0 && !st.psi6_trace.empty()) {
            r["mean_psi6"] = st.mean_psi6;
            r["psi6_standard_error"] = st.psi6_standard_error;
        } else {
            r["mean_psi6"] = nullptr;
        }
        if (V.dim() == 2 && is_unit_quadratic(V)) {
            std::vector<Vec3> pooled;
            for (const auto& s : st.snapshots) pooled.insert(pooled.end(), s.points.begin(), s.points.end());
            if (pooled.empty()) pooled = st.final_config.points;
            r["circle_law"] = circle_law_json(gas::circle_law_cdf(pooled, 10, 0.0), 0.0);
        }
        r["warnings"] = st.warnings;
        r["energy_trace"] = st.energy_trace;
        r["points"] = points_json(st.final_config);
        out << "mean energy " << st.mean_energy << " +- " << st.energy_standard_error << ", acceptance "
            << st.acceptance << '\n';
        for (const auto& w : st.warnings) out << "warning: " << w << '\n';
        return r;
    };
}

Job free_energy_job(const Params& p) {
    if (p.n < 2) throw InvalidParameter("--n must be at least 2");
    require_positive(p.beta, "beta");
    require_positive(p.beta0, "beta0");
    if (!(p.beta0 < p.beta)) throw InvalidParameter("--beta0 must be below --beta");
    if (p.per_decade < 1) throw InvalidParameter("--per-decade must be at least 1");
    if (p.steps < 1 || p.burn_in < 0) throw InvalidParameter("--steps must be positive and --burn-in non-negative");
    const Potential V = make_potential(p);
    if (V.kind() != Potential::Kind::Quadratic) throw InvalidParameter("free-energy needs a quadratic potential");
    const auto grid = gibbs::geometric_beta_grid(p.beta0, p.beta, p.per_decade);
    gibbs::FreeEnergyOptions fo;
    fo.sweeps = p.steps;
    fo.burn_in = p.burn_in;
    fo.seed = p.seed;
    if (V.dim() == 3) fo.chain.histogram_bins = 24;
    const int n = p.n;
    const double beta = p.beta;
    return [=](RunOutput&, std::ostream& out) {
        const auto est = gibbs::free_energy_leading(n, beta, V, grid, fo);
        json pts = json::array();
        for (const auto& g : est.grid)
            pts.push_back({{"beta", g.beta},
                           {"mean_energy", g.mean_energy},
                           {"standard_error", g.standard_error},
                           {"acceptance", g.acceptance},
                           {"autocorrelation_time", g.autocorrelation_time}});
        json r;
        r["n"] = n;
        r["beta"] = est.beta;
        r["log_z"] = est.log_z;
        r["log_z_error"] = est.error;
        r["reference_log_z"] = est.reference_log_z;
        r["leading_term"] = est.leading_term;
        r["leading_term_error"] = est.leading_term_error;
        r["log_n_correction"] = "(n/2) log n added to -(1/beta) log Z before dividing by n^2";
        if (V.dim() == 2 && is_unit_quadratic(V)) r["mean_field_energy"] = 0.75;
        r["flagged"] = est.flagged;
        r["warnings"] = est.warnings;
        r["grid"] = pts;
        out << "log Z " << est.log_z << " +- " << est.error << ", leading term " << est.leading_term << '\n';
        return r;
    };
}

// ---------------------------------------------------------------------------------------------

struct Command {
    const char* name;
    const char* help;
    std::function<void(CLI::App&, Params&)> bind;
    std::function<Job(const Params&)> prepare;
};

void bind_potential(CLI::App& s, Params& p) {
    s.add_option("--potential", p.potential, "quadratic, quadratic:<c>, or an expression in x, y, z, r");
    s.add_option("--dim", p.dim, "space dimension (2 or 3)");
}

void bind_domain(CLI::App& s, Params& p) {
    s.add_option("--domain", p.domain, "disk or rectangle");
    s.add_option("--radius", p.radius, "disk radius");
    s.add_option("--width", p.width, "rectangle width");
    s.add_option("--height", p.height, "rectangle height");
    s.add_option("--spacing", p.spacing, "radial step or mesh size (default 1/200)");
    s.add_option("--angular-nodes", p.angular_nodes, "nodes per ring on the disk (0: default)");
    s.add_option("--tolerance", p.tolerance, "relaxation stopping threshold");
}

const std::vector<Command>& commands() {
    static const std::vector<Command> cmds = {
        {"equilibrium", "equilibrium measure of a confining potential",
         [](CLI::App& s, Params& p) {
             bind_potential(s, p);
             s.add_option("--spacing", p.spacing, "grid spacing (default 1/64)");
             s.add_option("--half-width", p.half_width, "initial box half side or radius (0: automatic)");
             s.add_option("--tolerance", p.tolerance, "relaxation stopping threshold");
             s.add_flag("--no-radial", p.no_radial, "solve on the full grid even for radial V");
         },
         equilibrium_job},
        {"meissner", "h_0 and lambda_Omega on a disk or rectangle", bind_domain, meissner_job},
        {"obstacle", "mean-field vortex density as an obstacle problem",
         [](CLI::App& s, Params& p) {
             bind_domain(s, p);
             s.add_option("--lambda-factors", p.lambda_factors, "comma list of lambda / lambda_Omega");
             s.add_option("--lambda", p.lambdas, "comma list of absolute lambda (overrides the factors)");
         },
         obstacle_job},
        {"fekete", "multi-start minimization of H_n",
         [](CLI::App& s, Params& p) {
             s.add_option("--n", p.n, "number of points")->required();
             bind_potential(s, p);
             s.add_option("--starts", p.starts, "number of random starts");
             s.add_option("--tolerance", p.tolerance, "gradient tolerance (max over points)");
             s.add_option("--max-iterations", p.max_iterations, "iterations per start");
             s.add_option("--seed", p.seed, "random seed");
             s.add_option("--mu0-spacing", p.mu0_spacing, "grid spacing of the seeding equilibrium measure");
         },
         fekete_job},
        {"split-check", "term-by-term check of the splitting identity (V = |x|^2, d = 2)",
         [](CLI::App& s, Params& p) {
             s.add_option("--n", p.n, "number of random points")->required();
             s.add_option("--seed", p.seed, "random seed");
             s.add_option("--spread-radius", p.spread_radius, "points are uniform on the disk of this radius");
             s.add_option("--input", p.input, "CSV configuration to use instead of random points");
             s.add_option("--tolerance", p.tolerance, "absolute quadrature tolerance");
         },
         split_check_job},
        {"lattice-scan", "W over the fundamental domain of lattice shapes",
         [](CLI::App& s, Params& p) {
             s.add_option("--resolution", p.resolution, "grid nodes per axis of the fundamental domain");
             s.add_option("--density", p.density, "point density");
         },
         lattice_scan_job},
        {"renorm", "renormalized energy of a 2D lattice by several methods",
         [](CLI::App& s, Params& p) {
             s.add_option("--lattice", p.lattice, "square, triangular or tau");
             s.add_option("--tau-re", p.tau_re, "Re tau for --lattice tau");
             s.add_option("--tau-im", p.tau_im, "Im tau for --lattice tau");
             s.add_option("--density", p.density, "point density");
             s.add_option("--methods", p.methods, "comma list of periodic, window, smeared");
             s.add_option("--shape", p.shape, "smearing profile: uniform or bump");
             s.add_option("--eta", p.etas, "comma list of eta (default: fractions of the minimal distance)");
         },
         renorm_job},
        {"jellium3d", "smeared-charge energy of 3D lattices",
         [](CLI::App& s, Params& p) {
             s.add_option("--lattices", p.lattices, "comma list of sc, bcc, fcc");
             s.add_option("--density", p.density, "point density");
             s.add_option("--shape", p.shape, "smearing profile: uniform or bump");
             s.add_option("--eta", p.etas, "comma list of eta (default: fractions of the minimal distance)");
         },
         jellium3d_job},
        {"sample", "Metropolis sampling of the Gibbs measure",
         [](CLI::App& s, Params& p) {
             s.add_option("--n", p.n, "number of points")->required();
             s.add_option("--beta", p.beta, "inverse temperature")->required();
             bind_potential(s, p);
             s.add_option("--steps", p.steps, "sweeps in total");
             s.add_option("--burn-in", p.burn_in, "sweeps discarded");
             s.add_option("--seed", p.seed, "random seed");
             s.add_option("--step-scale", p.step_scale, "initial proposal width (0: automatic)");
             s.add_flag("--no-anneal", p.no_anneal, "keep beta fixed during the burn-in");
         },
         sample_job},
        {"free-energy", "thermodynamic integration of log Z",
         [](CLI::App& s, Params& p) {
             s.add_option("--n", p.n, "number of points")->required();
             s.add_option("--beta", p.beta, "target inverse temperature")->required();
             bind_potential(s, p);
             s.add_option("--beta0", p.beta0, "smallest beta of the grid");
             s.add_option("--per-decade", p.per_decade, "grid points per decade of beta");
             s.add_option("--steps", p.steps, "sweeps per grid point");
             s.add_option("--burn-in", p.burn_in, "burn-in sweeps per grid point");
             s.add_option("--seed", p.seed, "random seed");
         },
         free_energy_job},
    };
    return cmds;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InvalidParameter*>(&e) || dynamic_cast<const InvalidConfiguration*>(&e) ||
        dynamic_cast<const ModelError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
        dynamic_cast<const SingularityError*>(&e) || dynamic_cast<const UndefinedObservable*>(&e))
        return kValidation;
    return kNumerical;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidParameter("cannot read config file " + path);
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidParameter(path + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::replace(key.begin(), key.end(), '_', '-');
        if (key.empty()) throw InvalidParameter(path + ":" + std::to_string(lineno) + ": empty key");
        out.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return out;
}

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    Params p;
    CLI::App app{"Coulomb gas and renormalized energy computations", "coulomb"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", COULOMB_VERSION);
    std::map<std::string, CLI::App*> subs;
    for (const auto& c : commands()) {
        CLI::App* s = app.add_subcommand(c.name, c.help);
        s->add_option("--out", p.out, std::string("output directory (default: $") + kOutputDirEnv + " or ./coulomb-out)");
        s->add_option("--config", p.config, "key = value file; flags given on the command line win");
        s->add_option("--threads", p.threads, "worker threads (1 is bit-reproducible)");
        c.bind(*s, p);
        subs[c.name] = s;
    }

    // Config entries go in front of the explicit flags so that TakeLast lets the flags win.
    std::vector<std::string> args = args_in;
    if (args.empty()) args.push_back("coulomb");
    try {
        std::optional<std::string> config_path;
        for (std::size_t i = 2; i < args.size(); ++i) {
            if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
        }
        if (config_path && args.size() > 1) {
            std::vector<std::string> merged(args.begin(), args.begin() + 2);
            for (const auto& [k, v] : read_config(*config_path)) {
                if (k == "config") continue;
                merged.push_back("--" + k + "=" + v);
            }
            merged.insert(merged.end(), args.begin() + 2, args.end());
            args = std::move(merged);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const auto sel = app.get_subcommands();
        out << (sel.empty() ? app.help() : sel.front()->help());
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << COULOMB_VERSION << '\n';
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        const auto sel = app.get_subcommands();
        err << (sel.empty() ? app.help() : sel.front()->help());
        return kUsage;
    }
    if (p.threads < 1) {
        err << "error: --threads must be at least 1\n";
        return kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    const Command* cmd = nullptr;
    for (const auto& c : commands())
        if (sub->get_name() == c.name) cmd = &c;

    json config;
    config["command"] = cmd->name;
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "out" || name == "config" || name.empty()) continue;
        std::string v = opt->count() ? opt->results().back() : opt->get_default_str();
        if (opt->get_type_size() == 0 && v.empty()) v = opt->count() ? "true" : "false";
        config[name] = v;
    }

    Job job;
    try {
        job = cmd->prepare(p);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }

    fs::path dir;
    if (!p.out.empty()) dir = p.out;
    else if (const char* env = std::getenv(kOutputDirEnv); env && *env) dir = env;
    else dir = "coulomb-out";

    json run_config = config;
    run_config["out"] = dir.string();
    if (!p.config.empty()) run_config["config_file"] = p.config;
    const json ledger = convention_ledger();
    RunOutput output(dir, cmd->name, run_config, ledger);
    auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
    try {
        output.begin();
        json report;
        report["command"] = cmd->name;
        report["version"] = COULOMB_VERSION;
        report["config"] = config;
        report["conventions"] = ledger;
        report["results"] = job(output, out);
        output.write_json("report.json", report);
        emit_plotdata(report, output);
        output.finish(true, seconds());
        out << "report: " << (dir / "report.json").string() << '\n';
        return kOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        try {
            output.finish(false, seconds(), e.what());
        } catch (const std::exception&) {
        }
        if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return kNumerical;
        return exit_code_for(e);
    }
}

}  // namespace coulomb::cli
