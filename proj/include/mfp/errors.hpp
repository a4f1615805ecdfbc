#pragma once

#include <stdexcept>
#include <string>

namespace mfp {

// Domain errors for arguments outside their contract (even code distance,
// probability out of (0,1), odd block size, ...).
struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// No feasible choice exists under the given bounds. Carries the closest
// product achieved so callers can report how far off the budget was.
struct infeasible_error : std::runtime_error {
    double best_product = 0.0;
    int d_max = 0;
    explicit infeasible_error(const std::string& msg) : std::runtime_error(msg) {}
    infeasible_error(const std::string& msg, double best, int dmax)
        : std::runtime_error(msg), best_product(best), d_max(dmax) {}
};

// Requested output error is not below the input error, so no distillation
// schedule is needed or possible.
struct degenerate_target : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Circuit text rejected; carries the 1-based line number of the offence.
struct parse_error : std::runtime_error {
    int line = 0;
    parse_error(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

}  // namespace mfp
