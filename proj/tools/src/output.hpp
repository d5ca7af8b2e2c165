#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace coulomb::cli {

/// Output could not be written.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using json = nlohmann::ordered_json;

/// Output directory of one run. The manifest is written by begin() and rewritten by finish();
/// every file written through this object is listed in it.
class RunOutput {
public:
    RunOutput(std::filesystem::path dir, std::string command, json config, json conventions);

    const std::filesystem::path& dir() const { return dir_; }
    void begin();
    void write_text(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const json& value);
    /// Whitespace-separated table for gnuplot, recorded in plot/index.json.
    void write_plot(const std::string& name, const std::vector<std::string>& columns,
                    const std::vector<std::vector<double>>& rows, const std::string& description);
    void finish(bool ok, double wall_seconds, const std::string& message = {});
    const std::vector<std::string>& files() const { return files_; }

private:
    void write_manifest(const std::string& status, double wall_seconds, const std::string& message);

    std::filesystem::path dir_;
    std::string command_;
    json config_;
    json conventions_;
    std::vector<std::string> files_;
    json plot_index_ = json::array();
};

/// Constants in force for every computation; embedded in each report and manifest.
json convention_ledger();

/// Plot tables derived from a finished report (dispatch on report["command"]).
void emit_plotdata(const json& report, RunOutput& output);

}  // namespace coulomb::cli
