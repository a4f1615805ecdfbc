#include "mfp/blocksim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace mfp {

int ErrorPattern::weight() const {
    int w = 0;
    for (uint8_t b : bits) w += b != 0;
    return w;
}

namespace {

constexpr long long kEnumerationGuard = 10'000'000;

void check_structure(const CircuitIR& c) {
    const auto in_range = [&](int q) { return q >= 0 && q < c.n_qubits; };
    std::vector<uint8_t> measured(c.n_qubits, 0);
    std::vector<uint8_t> site_seen(c.t_site_count, 0);
    std::array<std::vector<int>, 3> check_supports;
    std::vector<std::vector<int>> out_supports;
    std::vector<int> output_wires;
    std::vector<int> output_ids;

    int sites = 0;
    for (const auto& op : c.ops) {
        switch (op.kind) {
            case OpKind::PrepPlus:
            case OpKind::PrepA:
                if (!in_range(op.a)) throw invalid_parameter("prep qubit out of range");
                if (measured[op.a]) throw invalid_parameter("prep after measurement");
                break;
            case OpKind::Cnot:
                if (!in_range(op.a) || !in_range(op.b)) {
                    throw invalid_parameter("CNOT qubit out of range");
                }
                if (op.a == op.b) throw invalid_parameter("CNOT control equals target");
                if (measured[op.a] || measured[op.b]) {
                    throw invalid_parameter("gate on measured qubit");
                }
                break;
            case OpKind::TSite:
                if (!in_range(op.a)) throw invalid_parameter("T qubit out of range");
                if (op.b < 0 || op.b >= c.t_site_count) {
                    throw invalid_parameter("T site id out of range");
                }
                if (site_seen[op.b]) throw invalid_parameter("duplicate T site id");
                if (measured[op.a]) throw invalid_parameter("gate on measured qubit");
                site_seen[op.b] = 1;
                ++sites;
                break;
            case OpKind::MeasCheck: {
                if (!in_range(op.a)) throw invalid_parameter("MEASX qubit out of range");
                if (op.b < 0 || op.b > 2) throw invalid_parameter("check id must be 0, 1 or 2");
                auto& sup = check_supports[op.b];
                if (std::find(sup.begin(), sup.end(), op.a) != sup.end()) {
                    throw invalid_parameter("duplicate check membership");
                }
                sup.push_back(op.a);
                measured[op.a] = 1;
                break;
            }
            case OpKind::MeasOut: {
                if (!in_range(op.a)) throw invalid_parameter("MEASX qubit out of range");
                if (op.b < 0) throw invalid_parameter("negative output id");
                if (static_cast<std::size_t>(op.b) >= out_supports.size()) {
                    out_supports.resize(op.b + 1);
                }
                auto& sup = out_supports[op.b];
                if (std::find(sup.begin(), sup.end(), op.a) != sup.end()) {
                    throw invalid_parameter("duplicate byproduct membership");
                }
                sup.push_back(op.a);
                measured[op.a] = 1;
                break;
            }
            case OpKind::Output:
                if (!in_range(op.b)) throw invalid_parameter("output qubit out of range");
                if (op.a < 0) throw invalid_parameter("negative output id");
                output_ids.push_back(op.a);
                output_wires.push_back(op.b);
                break;
        }
    }
    if (sites != c.t_site_count) {
        throw invalid_parameter("T site ids must cover 0..t_site_count-1 with no gaps");
    }
    int checks_present = 0;
    for (const auto& sup : check_supports) checks_present += !sup.empty();
    if (checks_present != 3) {
        throw invalid_parameter("expected 3 checks, found " +
                                std::to_string(checks_present));
    }
    const int k = static_cast<int>(output_wires.size());
    if (k < 2 || k % 2 != 0) {
        throw invalid_parameter("circuit must have an even number >= 2 of outputs");
    }
    if (k != c.k) throw invalid_parameter("output count does not match k");
    if (c.t_site_count != 3 * k + 8) {
        throw invalid_parameter("expected " + std::to_string(3 * k + 8) +
                                " T sites for k=" + std::to_string(k));
    }
    std::vector<uint8_t> id_seen(k, 0);
    for (int id : output_ids) {
        if (id >= k || id_seen[id]) throw invalid_parameter("output ids must be 0..k-1");
        id_seen[id] = 1;
    }
    if (static_cast<int>(out_supports.size()) != k) {
        throw invalid_parameter("byproduct supports must cover outputs 0..k-1");
    }
    for (int n = 0; n < k; ++n) {
        if (out_supports[n].size() != 3) {
            throw invalid_parameter("output " + std::to_string(n) +
                                    " needs a 3-element byproduct support");
        }
    }
    for (int n = 0; n < k; ++n) {
        if (measured[output_wires[n]]) {
            throw invalid_parameter("output wire is measured");
        }
    }
}

// Fills the derived fields (check/byproduct supports, output wires) from ops.
void derive_tables(CircuitIR& c) {
    for (auto& sup : c.check_supports) sup.clear();
    c.byproduct_supports.clear();
    c.output_wires.clear();

    std::vector<std::vector<int>> out_supports;
    std::vector<std::pair<int, int>> outputs;  // (id, qubit)
    for (const auto& op : c.ops) {
        if (op.kind == OpKind::MeasCheck) {
            c.check_supports[op.b].push_back(op.a);
        } else if (op.kind == OpKind::MeasOut) {
            if (static_cast<std::size_t>(op.b) >= out_supports.size()) {
                out_supports.resize(op.b + 1);
            }
            out_supports[op.b].push_back(op.a);
        } else if (op.kind == OpKind::Output) {
            outputs.emplace_back(op.a, op.b);
        }
    }
    std::sort(outputs.begin(), outputs.end());
    c.k = static_cast<int>(outputs.size());
    c.output_wires.resize(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        c.output_wires[i] = outputs[i].second;
    }
    c.byproduct_supports.resize(out_supports.size());
    for (std::size_t n = 0; n < out_supports.size(); ++n) {
        if (out_supports[n].size() == 3) {
            std::copy_n(out_supports[n].begin(), 3, c.byproduct_supports[n].begin());
        }
    }
}

}  // namespace

CircuitIR generate_block_circuit(int k) {
    if (k < 2 || k % 2 != 0) {
        throw invalid_parameter("k must be an even integer >= 2, got " +
                                std::to_string(k));
    }
    CircuitIR c;
    c.k = k;
    c.t_site_count = 3 * k + 8;
    const int ancilla = k + 4;
    const int wire0 = k + 5;
    c.n_qubits = 2 * k + 5;

    const auto carrier = [&](int n) { return n + 2; };

    for (int q = 0; q <= k + 3; ++q) c.ops.push_back({OpKind::PrepPlus, q});
    c.ops.push_back({OpKind::PrepPlus, ancilla});
    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::PrepPlus, wire0 + n});

    // Layer 1: the |A>-making T sites on the k+2 plus-prepared wires.
    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::TSite, carrier(n), n});
    c.ops.push_back({OpKind::TSite, 0, k});
    c.ops.push_back({OpKind::TSite, 1, k + 1});

    // Entangling fans from the two shared qubits onto every carrier.
    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::Cnot, k + 2, carrier(n)});
    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::Cnot, k + 3, carrier(n)});

    // Layer 2: transversal sites on the whole block.
    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::TSite, carrier(n), k + 2 + n});
    c.ops.push_back({OpKind::TSite, 0, 2 * k + 2});
    c.ops.push_back({OpKind::TSite, 1, 2 * k + 3});
    c.ops.push_back({OpKind::TSite, k + 2, 2 * k + 4});
    c.ops.push_back({OpKind::TSite, k + 3, 2 * k + 5});

    // Transversal-check fan: the top ancilla collects every block qubit.
    for (int q = 0; q <= k + 3; ++q) c.ops.push_back({OpKind::Cnot, ancilla, q});

    // Final layer, covered by the stabilizer products rather than the top check.
    for (int n = 0; n < k; ++n) {
        c.ops.push_back({OpKind::TSite, carrier(n), 2 * k + 6 + n});
    }
    c.ops.push_back({OpKind::TSite, k + 2, 3 * k + 6});
    c.ops.push_back({OpKind::TSite, k + 3, 3 * k + 7});

    // Teleport each logical qubit onto its output wire through its
    // logical-Z support {n+2, k+2, k+3}.
    for (int n = 0; n < k; ++n) {
        c.ops.push_back({OpKind::Cnot, carrier(n), wire0 + n});
        c.ops.push_back({OpKind::Cnot, k + 2, wire0 + n});
        c.ops.push_back({OpKind::Cnot, k + 3, wire0 + n});
    }

    // Terminal X-basis measurements. Check 0 is the single top-qubit report;
    // checks 1 and 2 are the products X_0 X_2..X_{k+2} and
    // X_1 X_2..X_{k+1} X_{k+3}; output n decodes X_{n+2} X_{k+2} X_{k+3}.
    c.ops.push_back({OpKind::MeasCheck, ancilla, 0});
    c.ops.push_back({OpKind::MeasCheck, 0, 1});
    c.ops.push_back({OpKind::MeasCheck, 1, 2});
    for (int n = 0; n < k; ++n) {
        c.ops.push_back({OpKind::MeasCheck, carrier(n), 1});
        c.ops.push_back({OpKind::MeasCheck, carrier(n), 2});
        c.ops.push_back({OpKind::MeasOut, carrier(n), n});
    }
    c.ops.push_back({OpKind::MeasCheck, k + 2, 1});
    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::MeasOut, k + 2, n});
    c.ops.push_back({OpKind::MeasCheck, k + 3, 2});
    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::MeasOut, k + 3, n});

    for (int n = 0; n < k; ++n) c.ops.push_back({OpKind::Output, n, wire0 + n});

    derive_tables(c);
    check_structure(c);
    return c;
}

std::string serialize_circuit(const CircuitIR& c) {
    std::string out = "QUBITS " + std::to_string(c.n_qubits) + "\n";
    for (const auto& op : c.ops) {
        switch (op.kind) {
            case OpKind::PrepPlus:
                out += "PREP+ " + std::to_string(op.a) + "\n";
                break;
            case OpKind::PrepA:
                out += "PREPA " + std::to_string(op.a) + "\n";
                break;
            case OpKind::Cnot:
                out += "CNOT " + std::to_string(op.a) + " " + std::to_string(op.b) + "\n";
                break;
            case OpKind::TSite:
                out += "T " + std::to_string(op.a) + " " + std::to_string(op.b) + "\n";
                break;
            case OpKind::MeasCheck:
                out += "MEASX " + std::to_string(op.a) + " CHECK " +
                       std::to_string(op.b) + "\n";
                break;
            case OpKind::MeasOut:
                out += "MEASX " + std::to_string(op.a) + " OUT-SUPPORT " +
                       std::to_string(op.b) + "\n";
                break;
            case OpKind::Output:
                out += "OUTPUT " + std::to_string(op.a) + " " + std::to_string(op.b) +
                       "\n";
                break;
        }
    }
    return out;
}

CircuitIR parse_circuit(const std::string& text) {
    CircuitIR c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool qubits_seen = false;
    int t_sites = 0;

    const auto parse_int = [&](const std::string& tok) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(tok, &pos);
        } catch (const std::exception&) {
            throw parse_error(lineno, "expected integer, got '" + tok + "'");
        }
        if (pos != tok.size()) {
            throw parse_error(lineno, "expected integer, got '" + tok + "'");
        }
        return v;
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        std::string t;
        while (ls >> t) tok.push_back(t);
        if (tok.empty()) continue;

        const std::string& op = tok[0];
        const auto want = [&](std::size_t n) {
            if (tok.size() != n + 1) {
                throw parse_error(lineno, op + " expects " + std::to_string(n) +
                                              " argument(s)");
            }
        };
        if (op == "QUBITS") {
            want(1);
            if (qubits_seen) throw parse_error(lineno, "duplicate QUBITS line");
            c.n_qubits = parse_int(tok[1]);
            if (c.n_qubits <= 0) throw parse_error(lineno, "QUBITS must be positive");
            qubits_seen = true;
            continue;
        }
        if (!qubits_seen) throw parse_error(lineno, "QUBITS must come first");
        if (op == "PREP+") {
            want(1);
            c.ops.push_back({OpKind::PrepPlus, parse_int(tok[1])});
        } else if (op == "PREPA") {
            want(1);
            c.ops.push_back({OpKind::PrepA, parse_int(tok[1])});
        } else if (op == "CNOT") {
            want(2);
            c.ops.push_back({OpKind::Cnot, parse_int(tok[1]), parse_int(tok[2])});
        } else if (op == "T") {
            want(2);
            c.ops.push_back({OpKind::TSite, parse_int(tok[1]), parse_int(tok[2])});
            ++t_sites;
        } else if (op == "MEASX") {
            if (tok.size() != 4) {
                throw parse_error(lineno, "MEASX expects: MEASX <q> CHECK|OUT-SUPPORT <id>");
            }
            if (tok[2] == "CHECK") {
                c.ops.push_back({OpKind::MeasCheck, parse_int(tok[1]), parse_int(tok[3])});
            } else if (tok[2] == "OUT-SUPPORT") {
                c.ops.push_back({OpKind::MeasOut, parse_int(tok[1]), parse_int(tok[3])});
            } else {
                throw parse_error(lineno, "MEASX role must be CHECK or OUT-SUPPORT");
            }
        } else if (op == "OUTPUT") {
            want(2);
            c.ops.push_back({OpKind::Output, parse_int(tok[1]), parse_int(tok[2])});
        } else {
            throw parse_error(lineno, "unknown opcode '" + op + "'");
        }
    }
    if (!qubits_seen) throw parse_error(lineno, "missing QUBITS line");
    c.t_site_count = t_sites;
    derive_tables(c);
    try {
        check_structure(c);
    } catch (const invalid_parameter& e) {
        throw parse_error(lineno, e.what());
    }
    return c;
}

FrameResult simulate_frame(const CircuitIR& c, const ErrorPattern& e) {
    if (static_cast<int>(e.bits.size()) != c.t_site_count) {
        throw invalid_parameter("error pattern length does not match T site count");
    }
    std::vector<uint8_t> bits(c.n_qubits, 0);
    std::array<uint8_t, 3> checks{};
    std::vector<uint8_t> byproduct(c.k, 0);
    for (const auto& op : c.ops) {
        switch (op.kind) {
            case OpKind::Cnot:
                bits[op.a] ^= bits[op.b];
                break;
            case OpKind::TSite:
                bits[op.a] ^= e.bits[op.b];
                break;
            case OpKind::MeasCheck:
                checks[op.b] ^= bits[op.a];
                break;
            case OpKind::MeasOut:
                byproduct[op.b] ^= bits[op.a];
                break;
            default:
                break;
        }
    }
    FrameResult r;
    r.check_flips = checks;
    r.output_errors.resize(c.k);
    for (int n = 0; n < c.k; ++n) {
        r.output_errors[n] = bits[c.output_wires[n]] ^ byproduct[n];
    }
    r.accepted = !(checks[0] | checks[1] | checks[2]);
    return r;
}

namespace {

// Per-site fault signature: bit 0..2 = check flips, bit 3+n = output n error.
// The frame map is GF(2)-linear, so a pattern's result is the XOR of its
// sites' signatures.
struct Sig {
    std::array<uint64_t, 3> w{};

    void set(int bit) { w[bit >> 6] |= 1ull << (bit & 63); }
    bool test(int bit) const { return (w[bit >> 6] >> (bit & 63)) & 1u; }
    void operator^=(const Sig& o) {
        w[0] ^= o.w[0];
        w[1] ^= o.w[1];
        w[2] ^= o.w[2];
    }
    friend Sig operator^(Sig a, const Sig& b) {
        a ^= b;
        return a;
    }
    bool detected() const { return w[0] & 7u; }
    bool harmful() const { return (w[0] >> 3) | w[1] | w[2]; }
};

std::vector<Sig> site_signatures(const CircuitIR& c) {
    if (c.k + 3 > 192) {
        throw invalid_parameter("fault signatures support k <= 189");
    }
    std::vector<Sig> sigs(c.t_site_count);
    ErrorPattern e = ErrorPattern::zeros(c.t_site_count);
    for (int i = 0; i < c.t_site_count; ++i) {
        e.bits[i] = 1;
        const FrameResult r = simulate_frame(c, e);
        e.bits[i] = 0;
        for (int j = 0; j < 3; ++j) {
            if (r.check_flips[j]) sigs[i].set(j);
        }
        for (int n = 0; n < c.k; ++n) {
            if (r.output_errors[n]) sigs[i].set(3 + n);
        }
    }
    return sigs;
}

double binomial(int n, int r) {
    double v = 1.0;
    for (int i = 0; i < r; ++i) v = v * (n - i) / (i + 1);
    return v;
}

void tally(WeightCensus& wc, const Sig& sig, int k) {
    ++wc.total;
    if (sig.detected()) {
        ++wc.detected;
        return;
    }
    if (!sig.harmful()) {
        ++wc.undetected_benign;
        return;
    }
    ++wc.undetected_harmful;
    for (int n = 0; n < k; ++n) {
        if (sig.test(3 + n)) ++wc.harmful_per_output[n];
    }
}

}  // namespace

FaultCensus enumerate_faults(const CircuitIR& c, int max_weight) {
    if (max_weight < 1 || max_weight > 3) {
        throw invalid_parameter("max_weight must be 1..3");
    }
    const int n = c.t_site_count;
    double patterns = 0.0;
    for (int w = 1; w <= max_weight; ++w) patterns += binomial(n, w);
    if (patterns > static_cast<double>(kEnumerationGuard)) {
        throw invalid_parameter(
            "too many patterns to enumerate (" + std::to_string(patterns) +
            "); use Monte Carlo instead");
    }
    const std::vector<Sig> sigs = site_signatures(c);

    FaultCensus census;
    census.k = c.k;
    census.n_sites = n;
    for (int w = 1; w <= max_weight; ++w) {
        WeightCensus wc;
        wc.weight = w;
        wc.harmful_per_output.assign(c.k, 0);
        if (w == 1) {
            for (int i = 0; i < n; ++i) tally(wc, sigs[i], c.k);
        } else if (w == 2) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) tally(wc, sigs[i] ^ sigs[j], c.k);
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const Sig sij = sigs[i] ^ sigs[j];
                    for (int l = j + 1; l < n; ++l) tally(wc, sij ^ sigs[l], c.k);
                }
        }
        census.per_weight.push_back(std::move(wc));
    }
    return census;
}

ExactStats exact_statistics(const CircuitIR& c, double p) {
    const int n = c.t_site_count;
    if (n > 24) {
        throw invalid_parameter("exact statistics require 3k+8 <= 24 (k <= 5)");
    }
    if (!(p >= 0.0) || !(p <= 1.0)) {
        throw invalid_parameter("p must lie in [0, 1]");
    }
    const std::vector<Sig> sigs = site_signatures(c);

    // Probability of a pattern by weight.
    std::vector<double> tbl(n + 1);
    for (int w = 0; w <= n; ++w) {
        tbl[w] = std::pow(p, w) * std::pow(1.0 - p, n - w);
    }

    double acceptance = 0.0;
    std::vector<double> joint(c.k, 0.0);
    Sig sig;
    uint32_t cur = 0;
    int weight = 0;
    // Pattern 0.
    acceptance += tbl[0];
    const uint64_t end = 1ull << n;
    for (uint64_t m = 1; m < end; ++m) {
        const int site = std::countr_zero(m);
        cur ^= 1u << site;
        weight += (cur >> site) & 1u ? +1 : -1;
        sig ^= sigs[site];
        if (sig.detected()) continue;
        const double prob = tbl[weight];
        acceptance += prob;
        if (sig.harmful()) {
            for (int q = 0; q < c.k; ++q) {
                if (sig.test(3 + q)) joint[q] += prob;
            }
        }
    }
    ExactStats stats;
    stats.acceptance = acceptance;
    stats.per_output_error.resize(c.k, 0.0);
    for (int q = 0; q < c.k; ++q) {
        stats.per_output_error[q] = acceptance > 0.0 ? joint[q] / acceptance : 0.0;
    }
    return stats;
}

uint64_t derive_subseed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

void fill_estimates(SimStats& s) {
    const double a = s.shots > 0 ? static_cast<double>(s.accepted) / s.shots : 0.0;
    s.acceptance_estimate = a;
    s.acceptance_std_error = s.shots > 0 ? std::sqrt(a * (1.0 - a) / s.shots) : 0.0;
    s.output_error_estimate.assign(s.output_error_counts.size(), 0.0);
    s.output_error_std_error.assign(s.output_error_counts.size(), 0.0);
    for (std::size_t q = 0; q < s.output_error_counts.size(); ++q) {
        if (s.accepted > 0) {
            const double e = static_cast<double>(s.output_error_counts[q]) / s.accepted;
            s.output_error_estimate[q] = e;
            s.output_error_std_error[q] = std::sqrt(e * (1.0 - e) / s.accepted);
        }
    }
}

}  // namespace

SimStats run_monte_carlo_shard(const CircuitIR& c, double p, long long shots,
                               uint64_t raw_seed) {
    if (shots < 0) throw invalid_parameter("shots must be nonnegative");
    if (!(p >= 0.0) || !(p <= 1.0)) throw invalid_parameter("p must lie in [0, 1]");
    const std::vector<Sig> sigs = site_signatures(c);
    const int n = c.t_site_count;

    SimStats s;
    s.shots = shots;
    s.seed = raw_seed;
    s.output_error_counts.assign(c.k, 0);

    std::mt19937_64 rng(raw_seed);
    constexpr double kInv = 1.0 / 9007199254740992.0;  // 2^-53
    for (long long shot = 0; shot < shots; ++shot) {
        Sig sig;
        for (int i = 0; i < n; ++i) {
            const double u = static_cast<double>(rng() >> 11) * kInv;
            if (u < p) sig ^= sigs[i];
        }
        if (sig.detected()) continue;
        ++s.accepted;
        if (sig.harmful()) {
            for (int q = 0; q < c.k; ++q) {
                if (sig.test(3 + q)) ++s.output_error_counts[q];
            }
        }
    }
    fill_estimates(s);
    return s;
}

SimStats merge_stats(const SimStats& a, const SimStats& b) {
    if (a.output_error_counts.size() != b.output_error_counts.size()) {
        throw invalid_parameter("cannot merge stats with different output counts");
    }
    SimStats s;
    s.shots = a.shots + b.shots;
    s.seed = a.seed;
    s.accepted = a.accepted + b.accepted;
    s.output_error_counts.resize(a.output_error_counts.size());
    for (std::size_t q = 0; q < s.output_error_counts.size(); ++q) {
        s.output_error_counts[q] = a.output_error_counts[q] + b.output_error_counts[q];
    }
    fill_estimates(s);
    return s;
}

SimStats run_monte_carlo(const CircuitIR& c, double p, long long shots,
                         uint64_t seed, int threads) {
    if (shots < 1) throw invalid_parameter("shots must be >= 1");
    const long long n_shards = (shots + kMonteCarloShardSize - 1) / kMonteCarloShardSize;

    std::vector<SimStats> shard_stats(n_shards);
    const auto run_shard = [&](long long i) {
        const long long lo = i * kMonteCarloShardSize;
        const long long count = std::min(kMonteCarloShardSize, shots - lo);
        shard_stats[i] = run_monte_carlo_shard(c, p, count, derive_subseed(seed, i));
    };
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    if (threads == 1 || n_shards == 1) {
        for (long long i = 0; i < n_shards; ++i) run_shard(i);
    } else {
        std::atomic<long long> next{0};
        std::vector<std::thread> pool;
        const int nthreads = std::min<long long>(threads, n_shards);
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const long long i = next.fetch_add(1);
                    if (i >= n_shards) return;
                    run_shard(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    SimStats total = shard_stats[0];
    for (long long i = 1; i < n_shards; ++i) total = merge_stats(total, shard_stats[i]);
    total.seed = seed;
    return total;
}

ValidationReport validate_circuit(const CircuitIR& c) {
    ValidationReport rep;
    rep.k = c.k;
    rep.n_sites = c.t_site_count;
    rep.expected_coefficient = 3 * c.k + 1;

    const std::vector<Sig> sigs = site_signatures(c);
    for (int i = 0; i < c.t_site_count; ++i) {
        if (!sigs[i].detected()) {
            rep.weight1_escapes.push_back(i);
            rep.violations.push_back({i});
        }
    }
    rep.weight1_ok = rep.weight1_escapes.empty();
    rep.rejection_coefficient =
        c.t_site_count - static_cast<int>(rep.weight1_escapes.size());
    rep.rejection_ok = rep.rejection_coefficient == c.t_site_count;

    const FaultCensus census = enumerate_faults(c, 2);
    rep.per_output_harmful = census.per_weight[1].harmful_per_output;
    rep.weight2_ok = true;
    for (long long count : rep.per_output_harmful) {
        if (count != rep.expected_coefficient) rep.weight2_ok = false;
    }
    if (!rep.weight2_ok) {
        // List undetected-harmful pairs so the mismatch can be inspected.
        constexpr int kMaxListed = 50;
        for (int i = 0; i < c.t_site_count && (int)rep.violations.size() < kMaxListed; ++i) {
            for (int j = i + 1; j < c.t_site_count; ++j) {
                const Sig sig = sigs[i] ^ sigs[j];
                if (!sig.detected() && sig.harmful()) {
                    rep.violations.push_back({i, j});
                    if ((int)rep.violations.size() >= kMaxListed) break;
                }
            }
        }
    }
    rep.pass = rep.weight1_ok && rep.weight2_ok && rep.rejection_ok;
    return rep;
}

std::string stats_to_json(const SimStats& s, double p, int k,
                          const ExactStats* exact) {
    nlohmann::json j;
    j["k"] = k;
    j["p"] = p;
    j["shots"] = s.shots;
    j["seed"] = s.seed;
    j["accepted"] = s.accepted;
    j["acceptance"] = {{"estimate", s.acceptance_estimate},
                       {"std_error", s.acceptance_std_error}};
    j["per_output_error"] = nlohmann::json::array();
    for (std::size_t q = 0; q < s.output_error_counts.size(); ++q) {
        j["per_output_error"].push_back({{"count", s.output_error_counts[q]},
                                         {"estimate", s.output_error_estimate[q]},
                                         {"std_error", s.output_error_std_error[q]}});
    }
    if (exact != nullptr) {
        j["exact"] = {{"acceptance", exact->acceptance},
                      {"per_output_error", exact->per_output_error}};
    }
    return j.dump(2) + "\n";
}

std::string ValidationReport::to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["n_sites"] = n_sites;
    j["pass"] = pass;
    j["weight1"] = {{"ok", weight1_ok}, {"escapes", weight1_escapes}};
    j["weight2"] = {{"ok", weight2_ok},
                    {"expected_coefficient", expected_coefficient},
                    {"per_output_harmful", per_output_harmful}};
    j["rejection"] = {{"ok", rejection_ok},
                      {"coefficient", rejection_coefficient},
                      {"expected", n_sites}};
    j["violations"] = violations;
    return j.dump(2) + "\n";
}

}  // namespace mfp
