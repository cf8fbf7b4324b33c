#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qpd {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int mismatch = 1;      ///< `dims` found a formula/enumeration mismatch
inline constexpr int config = 2;        ///< bad arguments, model file or input files
inline constexpr int not_converged = 3;  ///< solver or cutoff iteration failed
inline constexpr int internal = 4;      ///< broken internal invariant
}  // namespace exit_code

/// Entry point of the `qpd` tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qpd
