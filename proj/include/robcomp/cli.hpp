#pragma once

#include <iosfwd>

namespace robcomp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;

/// Subcommands audit, bound, train, attack, prune, gen-data. Reports go to --out
/// (or `out` when absent); failures also emit an error object there.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace robcomp
