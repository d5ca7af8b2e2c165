#include "output.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "coulomb/errors.hpp"
#include "coulomb/lattice.hpp"
#include "coulomb/renormalized.hpp"

#ifndef COULOMB_VERSION
#define COULOMB_VERSION "unknown"
#endif

namespace coulomb::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << content;
    os.close();
    if (!os) throw IoError("write failed: " + path.string());
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

}  // namespace

RunOutput::RunOutput(fs::path dir, std::string command, json config, json conventions)
    : dir_(std::move(dir)), command_(std::move(command)), config_(std::move(config)),
      conventions_(std::move(conventions)) {}

void RunOutput::begin() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    write_manifest("running", 0.0, {});
}

void RunOutput::write_text(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    files_.push_back(name);
}

void RunOutput::write_json(const std::string& name, const json& value) { write_text(name, value.dump(2) + "\n"); }

void RunOutput::write_plot(const std::string& name, const std::vector<std::string>& columns,
                           const std::vector<std::vector<double>>& rows, const std::string& description) {
    std::ostringstream ss;
    ss << "#";
    for (const auto& c : columns) ss << ' ' << c;
    ss << '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) ss << (k ? " " : "") << fmt(row[k]);
        ss << '\n';
    }
    const std::string file = "plot/" + name + ".dat";
    write_text(file, ss.str());
    plot_index_.push_back({{"file", file}, {"columns", columns}, {"rows", rows.size()}, {"description", description}});
}

void RunOutput::finish(bool ok, double wall_seconds, const std::string& message) {
    if (ok && !plot_index_.empty()) write_json("plot/index.json", plot_index_);
    write_manifest(ok ? "complete" : "failed", wall_seconds, message);
}

void RunOutput::write_manifest(const std::string& status, double wall_seconds, const std::string& message) {
    json m;
    m["command"] = command_;
    m["status"] = status;
    m["version"] = COULOMB_VERSION;
    m["config"] = config_;
    m["conventions"] = conventions_;
    m["wall_clock_seconds"] = wall_seconds;
    json files = json::array();
    for (const auto& f : files_)
        if (fs::exists(dir_ / f)) files.push_back(f);
    m["files"] = files;
    if (!message.empty()) m["error"] = message;
    write_file(dir_ / "manifest.json", m.dump(2) + "\n");
}

json convention_ledger() {
    using renorm::SmearingShape;
    json led;
    led["kernel"] = {{"d2", "g(x) = -log|x|"}, {"d3", "g(x) = 1/|x|"}};
    led["coulomb_constant"] = {{"d2", lattice::coulomb_constant(2)}, {"d3", lattice::coulomb_constant(3)}};
    led["laplace_convention"] = "-Laplacian g = c_d delta_0";
    led["pair_order"] = "ordered pairs i != j (each unordered pair counted twice)";
    led["hamiltonian"] = "H_n = sum_{i!=j} g(x_i - x_j) + n sum_i V(x_i)";
    led["gibbs_weight"] = "exp(-beta H_n)";
    led["field_energy_prefactor"] = 0.5;
    led["window_counterterm"] = "+ c_d/2 * n * log(eta) (2D: pi n log eta)";
    led["mean_field_energy"] = "F(mu) = int int g dmu dmu + int V dmu";
    led["blow_up"] = "x' = n^(1/d) x";
    json self = json::object();
    for (int d : {2, 3})
        for (auto shape : {SmearingShape::UniformBall, SmearingShape::SmoothBump}) {
            const auto c = renorm::self_energy_constants({shape, 0.1, d});
            const std::string key = std::string(shape == SmearingShape::UniformBall ? "uniform_ball" : "smooth_bump") +
                                    "_d" + std::to_string(d);
            self[key] = {{"kappa", c.kappa}, {"gamma2", c.gamma2}};
        }
    led["smeared_self_energy"] = self;
    led["smeared_self_energy_form"] = "kappa_d g(eta) + gamma_2 [d = 2]";
    return led;
}

}  // namespace coulomb::cli
