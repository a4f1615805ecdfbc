#include "mfp/error_model.hpp"

#include <cmath>
#include <algorithm>

namespace mfp {

namespace {

void check_distance(int d) {
    if (d < 3 || d % 2 == 0) {
        throw invalid_parameter("code distance must be an odd integer >= 3, got " +
                                std::to_string(d));
    }
}

void check_gate_error(double pg) {
    if (!(pg > 0.0) || !(pg < 1.0)) {
        throw invalid_parameter("gate error rate must lie in (0, 1), got " +
                                std::to_string(pg));
    }
}

double per_round_unclamped(int d, double pg, const CostModel& m) {
    return m.prefactor * std::pow(m.base_scale * pg, 0.5 * (d + 1));
}

double per_piece_unclamped(int d, double pg, const CostModel& m) {
    if (m.plumbing_mode == PlumbingMode::paper_simplified) {
        return d * std::pow(m.base_scale * pg, 0.5 * (d + 1));
    }
    // Two defect types, three logical error classes, 5d/4 rounds per piece.
    return 2.0 * 3.0 * (5.0 * d / 4.0) * per_round_unclamped(d, pg, m);
}

}  // namespace

double logical_error_per_round(int d, double pg, const CostModel& m) {
    check_distance(d);
    check_gate_error(pg);
    return std::min(1.0, per_round_unclamped(d, pg, m));
}

double plumbing_piece_error(int d, double pg, const CostModel& m) {
    check_distance(d);
    check_gate_error(pg);
    return std::min(1.0, per_piece_unclamped(d, pg, m));
}

int min_distance(double v_geom, double pg, double budget, const CostModel& m,
                 int d_max) {
    check_gate_error(pg);
    if (!(v_geom > 0.0)) {
        throw invalid_parameter("geometric volume must be positive");
    }
    if (!(budget > 0.0)) {
        throw invalid_parameter("logical error budget must be positive");
    }
    double best = -1.0;
    for (int d = 3; d <= d_max; d += 2) {
        const double product = v_geom * std::min(1.0, per_piece_unclamped(d, pg, m));
        if (product < budget) {
            return d;
        }
        if (best < 0.0 || product < best) {
            best = product;
        }
    }
    throw infeasible_error("no odd distance <= " + std::to_string(d_max) +
                               " brings " + std::to_string(v_geom) +
                               " plumbing pieces under the budget " +
                               std::to_string(budget) +
                               " (closest product " + std::to_string(best) + ")",
                           best, d_max);
}

bool fit_out_of_range(double pg, const CostModel& m) {
    return m.base_scale * pg >= 1.0;
}

const char* to_string(PlumbingMode mode) {
    return mode == PlumbingMode::paper_simplified ? "paper_simplified"
                                                  : "derivation_exact";
}

PlumbingMode plumbing_mode_from_string(const std::string& s) {
    if (s == "paper_simplified") return PlumbingMode::paper_simplified;
    if (s == "derivation_exact") return PlumbingMode::derivation_exact;
    throw invalid_parameter("unknown plumbing mode '" + s + "'");
}

}  // namespace mfp
