#include <cmath>
#include <string>
#include <vector>

#include "output.hpp"

namespace coulomb::cli {

namespace {

using Rows = std::vector<std::vector<double>>;

Rows pairs(const json& a) {
    Rows rows;
    for (const auto& e : a) {
        std::vector<double> r;
        for (const auto& v : e) r.push_back(v.get<double>());
        rows.push_back(std::move(r));
    }
    return rows;
}

// Points with their radius appended.
Rows cloud(const json& pts) {
    Rows rows;
    for (const auto& p : pts) {
        std::vector<double> r;
        double s = 0.0;
        for (const auto& v : p) {
            r.push_back(v.get<double>());
            s += r.back() * r.back();
        }
        r.push_back(std::sqrt(s));
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<std::string> cloud_columns(const json& res) {
    if (res.value("dim", 2) == 3) return {"x", "y", "z", "r"};
    return {"x", "y", "r"};
}

Rows eta_rows(const json& trace) {
    Rows rows;
    for (const auto& s : trace) rows.push_back({s["eta"].get<double>(), s["value"].get<double>()});
    return rows;
}

void circle_law(const json& res, RunOutput& o) {
    if (!res.contains("circle_law")) return;
    const auto& c = res["circle_law"];
    Rows rows;
    for (std::size_t k = 0; k < c["radii"].size(); ++k)
        rows.push_back({c["radii"][k].get<double>(), c["empirical"][k].get<double>(), c["expected"][k].get<double>()});
    o.write_plot("radial_cdf", {"r", "empirical", "circle_law"}, rows, "radial distribution function at the deciles");
}

}  // namespace

void emit_plotdata(const json& report, RunOutput& o) {
    const std::string cmd = report.at("command");
    const json& res = report.at("results");
    if (cmd == "equilibrium") {
        o.write_plot("density_profile", {"r", "density"}, pairs(res["profile"]), "equilibrium density along a ray");
    } else if (cmd == "meissner") {
        o.write_plot("h0_profile", {"x", "h0"}, pairs(res["profile"]), "h_0 along the horizontal midline");
    } else if (cmd == "obstacle") {
        Rows table, profiles;
        for (const auto& r : res["runs"]) {
            table.push_back({r["lambda"].get<double>(), r["lambda_over_lambda_omega"].get<double>(),
                             r["coverage"].get<double>(), r["interior_density"].get<double>(),
                             r["target_density"].get<double>()});
            for (const auto& q : r["profile"])
                profiles.push_back({r["lambda"].get<double>(), q[0].get<double>(), q[1].get<double>()});
        }
        o.write_plot("obstacle_coverage", {"lambda", "lambda_over_lambda_omega", "coverage", "density", "target"},
                     table, "coincidence-set fraction and interior density against lambda");
        o.write_plot("obstacle_profiles", {"lambda", "x", "mu"}, profiles,
                     "vortex density along the horizontal midline, one block per lambda");
    } else if (cmd == "fekete") {
        o.write_plot("fekete_points", cloud_columns(res), cloud(res["points"]), "best local minimizer of H_n");
        Rows e;
        for (const auto& s : res["starts"]) e.push_back({static_cast<double>(e.size()), s["energy"].get<double>()});
        o.write_plot("start_energies", {"start", "energy"}, e, "final energy of each start");
        circle_law(res, o);
    } else if (cmd == "split-check") {
        o.write_plot("split_points", {"x", "y", "r"}, cloud(res["points"]), "configuration");
        o.write_plot("eta_trace", {"eta", "excised_energy"}, eta_rows(res["eta_trace"]),
                     "excised field energy with counterterm; eta = 0 is the limit");
    } else if (cmd == "lattice-scan") {
        o.write_plot("lattice_scan", {"re_tau", "im_tau", "w"}, pairs(res["points"]), "W over the fundamental domain");
    } else if (cmd == "renorm") {
        for (const auto& [m, v] : res["values"].items())
            if (!v["eta_trace"].empty())
                o.write_plot("eta_trace_" + m, {"eta", "value"}, eta_rows(v["eta_trace"]), m + " value against eta");
    } else if (cmd == "jellium3d") {
        for (const auto& l : res["lattices"])
            o.write_plot("eta_trace_" + l["lattice"].get<std::string>(), {"eta", "value"}, eta_rows(l["eta_trace"]),
                         "smeared energy against eta");
    } else if (cmd == "sample") {
        o.write_plot("sample_points", cloud_columns(res), cloud(res["points"]), "final configuration of the chain");
        Rows e;
        for (const auto& v : res["energy_trace"]) e.push_back({static_cast<double>(e.size()), v.get<double>()});
        o.write_plot("energy_trace", {"sweep", "energy"}, e, "H_n after each post-burn-in sweep");
        circle_law(res, o);
    } else if (cmd == "free-energy") {
        Rows g;
        for (const auto& q : res["grid"])
            g.push_back({q["beta"].get<double>(), q["mean_energy"].get<double>(), q["standard_error"].get<double>()});
        o.write_plot("mean_energy", {"beta", "mean_energy", "standard_error"}, g, "<H_n> along the beta grid");
    }
}

}  // namespace coulomb::cli
