#pragma once

#include <string>

#include "mfp/errors.hpp"

namespace mfp {

enum class ProtocolKind { FifteenToOne, Block };

// A distillation stage kind: the 15-to-1 protocol, or the 3k+8 -> k block
// protocol for even k >= 2.
struct ProtocolSpec {
    ProtocolKind kind = ProtocolKind::FifteenToOne;
    int k = 0;  // meaningful for Block only

    static ProtocolSpec fifteen_to_one();
    static ProtocolSpec block(int k);

    int n_inputs() const;   // 15, or 3k+8
    int n_outputs() const;  // 1, or k

    // The transversal-operator property is stated for k = 2 + 4j. Other even
    // k are accepted; callers surface this as a warning, not an error.
    bool transversal_condition_met() const;

    std::string name() const;  // "15-1" or "block(k)"
};

// Leading-order distilled error of one stage: 35 p^3 or (3k+1) p^2,
// clamped to 1.
double output_error(const ProtocolSpec& spec, double p_in);

// Exact inverse of output_error scaled so that the distilled error is
// p_target / (1 + eps): cbrt(p_target / (35 (1+eps))) or
// sqrt(p_target / ((3k+1)(1+eps))). Throws degenerate_target if the result
// reaches 1 (target too loose to need distillation).
double required_input_error(const ProtocolSpec& spec, double p_target, double eps);

// Plumbing-piece count of one structure: 192, or 96k + 216.
double geometric_volume(const ProtocolSpec& spec);

// First-order rejection estimate: 15 p or (3k+8) p, clamped to 1. Only valid
// for (3k+8) p << 1; see rejection_estimate_valid.
double rejection_probability(const ProtocolSpec& spec, double p_in);

inline constexpr double kRejectionValidityThreshold = 0.3;

bool rejection_estimate_valid(const ProtocolSpec& spec, double p_in);

}  // namespace mfp
