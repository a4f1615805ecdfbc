#include "mfp/protocols.hpp"

#include <algorithm>
#include <cmath>

namespace mfp {

namespace {

void check_probability(double p, const char* what) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw invalid_parameter(std::string(what) + " must lie in (0, 1), got " +
                                std::to_string(p));
    }
}

void check_eps(double eps) {
    if (!(eps > 0.0)) {
        throw invalid_parameter("eps must be positive, got " + std::to_string(eps));
    }
}

}  // namespace

ProtocolSpec ProtocolSpec::fifteen_to_one() {
    return ProtocolSpec{ProtocolKind::FifteenToOne, 0};
}

ProtocolSpec ProtocolSpec::block(int k) {
    if (k < 2 || k % 2 != 0) {
        throw invalid_parameter("block size k must be an even integer >= 2, got " +
                                std::to_string(k));
    }
    return ProtocolSpec{ProtocolKind::Block, k};
}

int ProtocolSpec::n_inputs() const {
    return kind == ProtocolKind::FifteenToOne ? 15 : 3 * k + 8;
}

int ProtocolSpec::n_outputs() const {
    return kind == ProtocolKind::FifteenToOne ? 1 : k;
}

bool ProtocolSpec::transversal_condition_met() const {
    return kind == ProtocolKind::FifteenToOne || k % 4 == 2;
}

std::string ProtocolSpec::name() const {
    return kind == ProtocolKind::FifteenToOne ? "15-1"
                                              : "block(" + std::to_string(k) + ")";
}

double output_error(const ProtocolSpec& spec, double p_in) {
    check_probability(p_in, "input error");
    const double raw = spec.kind == ProtocolKind::FifteenToOne
                           ? 35.0 * p_in * p_in * p_in
                           : (3.0 * spec.k + 1.0) * p_in * p_in;
    return std::min(1.0, raw);
}

double required_input_error(const ProtocolSpec& spec, double p_target, double eps) {
    check_probability(p_target, "target error");
    check_eps(eps);
    double p;
    if (spec.kind == ProtocolKind::FifteenToOne) {
        p = std::cbrt(p_target / (35.0 * (1.0 + eps)));
    } else {
        p = std::sqrt(p_target / ((3.0 * spec.k + 1.0) * (1.0 + eps)));
    }
    if (p >= 1.0) {
        throw degenerate_target("target " + std::to_string(p_target) +
                                " is too loose to need " + spec.name() +
                                " distillation");
    }
    return p;
}

double geometric_volume(const ProtocolSpec& spec) {
    return spec.kind == ProtocolKind::FifteenToOne ? 192.0 : 96.0 * spec.k + 216.0;
}

double rejection_probability(const ProtocolSpec& spec, double p_in) {
    check_probability(p_in, "input error");
    return std::min(1.0, spec.n_inputs() * p_in);
}

bool rejection_estimate_valid(const ProtocolSpec& spec, double p_in) {
    return rejection_probability(spec, p_in) <= kRejectionValidityThreshold;
}

}  // namespace mfp
