#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace netvis::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// `args` excludes the program name. Subcommands:
///   serve --config FILE
///   validate FILE
///   layout FILE [--algo NAME] [--seed N] [--iterations N] [--grouping METHOD] [--out FILE]
///   export-kml FILE [--levels LIST] [--emit-levels N] [--min-lod LIST] [--no-links]
///              [--meta-edges] [--name TEXT] [--out FILE]
///   compact DATA_DIR
///   gen [--n N] [--m M] [--seed N] [--ip-fraction F] [--geo-fraction F] [--out FILE]
/// Exit codes: 0 success, 1 invalid input or I/O failure, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace netvis::cli
