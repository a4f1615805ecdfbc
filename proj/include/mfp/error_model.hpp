#pragma once

#include <string>

#include "mfp/errors.hpp"

namespace mfp {

enum class PlumbingMode { paper_simplified, derivation_exact };

// Constants of the fitted surface-code logical error model and the unit
// conventions used to convert geometric volume (plumbing pieces) into
// absolute volume (qubits-rounds).
//
//   p_L(d, pg)  = prefactor * (base_scale * pg)^((d+1)/2)   per round
//   P_L(d, pg)  = d * (base_scale * pg)^((d+1)/2)           per plumbing piece
//                 (paper_simplified), or
//               = 2 * 3 * (5d/4) * p_L(d, pg)               (derivation_exact)
//
// A plumbing piece has edge length 5d/4. One unit of d in time is one round
// of error detection; one unit of d in each spatial direction is two qubits,
// so a piece spans qubits_per_d2 * (5d/4)^2 qubits for rounds_per_d * (5d/4)
// rounds.
struct CostModel {
    double prefactor = 0.1;
    double base_scale = 100.0;
    PlumbingMode plumbing_mode = PlumbingMode::paper_simplified;
    double qubits_per_d2 = 4.0;
    double rounds_per_d = 1.0;
};

// Logical X error probability per round of a distance-d square patch.
// d must be odd and >= 3; 0 < pg < 1. Clamped to [0, 1].
double logical_error_per_round(int d, double pg, const CostModel& m);

// Upper bound on the logical error probability of one plumbing piece.
// Clamped to [0, 1]. See CostModel for the two modes.
double plumbing_piece_error(int d, double pg, const CostModel& m);

// Smallest odd d >= 3 with v_geom * plumbing_piece_error(d, pg) < budget.
// Throws infeasible_error (carrying the smallest achieved product) when no
// d <= d_max satisfies the bound.
int min_distance(double v_geom, double pg, double budget, const CostModel& m,
                 int d_max = 199);

// The fit is only meaningful for base_scale * pg < 1; callers attach a
// warning to results computed past that point.
bool fit_out_of_range(double pg, const CostModel& m);

const char* to_string(PlumbingMode mode);
PlumbingMode plumbing_mode_from_string(const std::string& s);

}  // namespace mfp
