#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rsma::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNumerical = 2;

/// Runs one subcommand. args[0] is the program name. Messages go to `out`/`err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// --threads if positive, else RSMA_UNFOLD_THREADS, else 1.
int resolve_threads(int flag_value);

}  // namespace rsma::cli
