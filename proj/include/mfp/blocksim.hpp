#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mfp/errors.hpp"

namespace mfp {

// Gate-level description of a block-distillation circuit. The T gadget is
// collapsed to a fault site: under the Z-only, perfect-Clifford model a bad
// ancilla is exactly a Z inserted at the site's circuit position.
//
// Measurement lines declare memberships: `MeasCheck{q, c}` adds qubit q's
// X-measurement flip to check c's parity, `MeasOut{q, n}` adds it to output
// n's byproduct parity. A qubit may carry several membership lines; it is
// measured once and no gate may act on it afterwards.
enum class OpKind { PrepPlus, PrepA, Cnot, TSite, MeasCheck, MeasOut, Output };

struct Op {
    OpKind kind;
    int a = -1;  // qubit (control for Cnot, output_id for Output)
    int b = -1;  // target / site_id / check_id / output_id / qubit for Output
};

struct CircuitIR {
    int k = 0;
    int n_qubits = 0;
    int t_site_count = 0;
    std::vector<Op> ops;
    std::array<std::vector<int>, 3> check_supports;     // measured qubits per check
    std::vector<std::array<int, 3>> byproduct_supports; // per output: X_{n+2} X_{k+2} X_{k+3}
    std::vector<int> output_wires;                      // per output

    int n_outputs() const { return static_cast<int>(output_wires.size()); }
};

// Z-error bit per T site, index = site_id.
struct ErrorPattern {
    std::vector<uint8_t> bits;

    static ErrorPattern zeros(int n_sites) { return ErrorPattern{std::vector<uint8_t>(n_sites, 0)}; }
    int weight() const;
};

// Flips are relative to a noiseless reference run of the same circuit, which
// by construction reports all-zero.
struct FrameResult {
    std::array<uint8_t, 3> check_flips{};
    std::vector<uint8_t> output_errors;
    bool accepted = false;
};

struct WeightCensus {
    int weight = 0;
    long long total = 0;
    long long detected = 0;
    long long undetected_benign = 0;
    long long undetected_harmful = 0;          // distinct patterns harming >= 1 output
    std::vector<long long> harmful_per_output; // incidence counts per output
};

struct FaultCensus {
    int k = 0;
    int n_sites = 0;
    std::vector<WeightCensus> per_weight;  // weights 1..max_weight
};

struct SimStats {
    long long shots = 0;
    uint64_t seed = 0;
    long long accepted = 0;
    std::vector<long long> output_error_counts;  // among accepted shots
    double acceptance_estimate = 0.0;
    double acceptance_std_error = 0.0;
    std::vector<double> output_error_estimate;   // conditional on acceptance
    std::vector<double> output_error_std_error;
};

struct ExactStats {
    double acceptance = 0.0;
    std::vector<double> per_output_error;  // conditional on acceptance
};

struct ValidationReport {
    int k = 0;
    int n_sites = 0;
    bool pass = false;
    bool weight1_ok = false;
    bool weight2_ok = false;
    bool rejection_ok = false;
    int expected_coefficient = 0;           // 3k+1
    int rejection_coefficient = 0;          // detected weight-1 count, expect 3k+8
    std::vector<int> weight1_escapes;       // site ids of undetected single faults
    std::vector<long long> per_output_harmful;
    std::vector<std::vector<int>> violations;  // offending patterns (site id lists)
    std::string to_json() const;
};

// Builds the 3k+8 -> k block-distillation circuit for even k >= 2.
//
// Layout: block qubits 0..k+3 with the distance-2 code's X stabilizers
// X_0 X_2..X_{k+2} (check 1) and X_1 X_2..X_{k+1} X_{k+3} (check 2); a top
// ancilla measuring the transversal T^dag X T product (check 0); one output
// wire per logical qubit, teleported out through CNOTs from its logical-Z
// support {n+2, k+2, k+3} with byproduct decode X_{n+2} X_{k+2} X_{k+3}.
// T sites come in three layers (k+2, k+4, k+2 sites): the first two precede
// the top-check fan, the final layer follows it and is covered by the two
// stabilizer products. One repeated unit cell per output extends the circuit
// to any even k.
CircuitIR generate_block_circuit(int k);

CircuitIR parse_circuit(const std::string& text);
std::string serialize_circuit(const CircuitIR& c);

// Propagates the Z frame through the circuit: T_SITE(q, i) toggles qubit q's
// bit iff e[i]; CNOT(c, t) XORs the target's bit into the control's; an
// X-basis measurement flip equals the measured qubit's accumulated bit.
// Output n's error is its wire bit XOR its byproduct parity.
FrameResult simulate_frame(const CircuitIR& c, const ErrorPattern& e);

// Exact classification of every pattern of weight 1..max_weight (<= 3).
// Throws when the pattern count exceeds 10^7.
FaultCensus enumerate_faults(const CircuitIR& c, int max_weight);

// Full 2^(3k+8) sum of p^|e| (1-p)^(N-|e|) over classified patterns.
// Requires 3k+8 <= 24.
ExactStats exact_statistics(const CircuitIR& c, double p);

// Reproducible Monte Carlo: shots are processed in fixed-size shards with
// subseeds derived from (seed, shard index), so results are independent of
// thread count and a sharded run merges to the same totals.
SimStats run_monte_carlo(const CircuitIR& c, double p, long long shots,
                         uint64_t seed, int threads = 1);
SimStats run_monte_carlo_shard(const CircuitIR& c, double p, long long shots,
                               uint64_t raw_seed);
uint64_t derive_subseed(uint64_t seed, uint64_t index);
SimStats merge_stats(const SimStats& a, const SimStats& b);

inline constexpr long long kMonteCarloShardSize = 1 << 16;

// Passes iff every weight-1 fault is detected, the per-output undetected
// harmful weight-2 count equals 3k+1, and the first-order rejection
// coefficient equals 3k+8.
ValidationReport validate_circuit(const CircuitIR& c);

// JSON report for a Monte Carlo run, with the exact-sum comparison attached
// when available.
std::string stats_to_json(const SimStats& s, double p, int k,
                          const ExactStats* exact);

}  // namespace mfp
