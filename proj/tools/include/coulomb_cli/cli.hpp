#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coulomb::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 1,  // invalid parameter, configuration, model, domain, singularity
    kNumerical = 2,   // accuracy or convergence failure, I/O failure
    kUsage = 64,
};

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "COULOMB_OUTPUT_DIR";

/// Runs one subcommand. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat "key = value" file; '#' starts a comment. Keys are long flag names without dashes.
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path);

}  // namespace coulomb::cli
