#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfp {

// Exit codes: 0 ok, 1 usage, 2 infeasible/degenerate, 3 I/O, 4 validation
// failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitValidation = 4;

// Runs the command line (argv without the program name). All output goes to
// the given streams so the front end stays a thin shell around the library.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace mfp
