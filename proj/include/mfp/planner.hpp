#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mfp/error_model.hpp"
#include "mfp/protocols.hpp"

namespace mfp {

// One level of a distillation pipeline. Multiplicity counts structures of
// this level per final output state and may be fractional for block levels
// (one block serves k outputs).
struct StagePlan {
    ProtocolSpec spec;
    int distance = 0;
    double eps = 0.0;
    double target_error = 0.0;          // error this level must deliver
    double required_input_error = 0.0;  // error its inputs must have
    double logical_budget = 0.0;        // eps * target / (1 + eps)
    double abs_volume = 0.0;            // qubits-rounds of one structure
    double multiplicity = 0.0;          // structures per final output state
};

// A solved pipeline, top level first. total_volume_per_output is the sum of
// multiplicity * abs_volume over stages, which equals the inside-out
// recurrence (V_block + n_inputs * V_per_input) / k.
struct Schedule {
    std::vector<StagePlan> stages;
    double p_in = 0.0;
    double p_out = 0.0;
    double pg = 0.0;
    double total_volume_per_output = 0.0;
    bool include_retry_factor = false;
    std::vector<std::string> warnings;

    int levels() const { return static_cast<int>(stages.size()); }
    int sum_block_k() const;
    int top_distance() const { return stages.empty() ? 0 : stages.front().distance; }
    std::vector<int> distances() const;
    std::vector<int> block_ks() const;  // outermost first
};

struct SearchConfig {
    // 33 log-spaced points in [2^-5, 2^5].
    static std::vector<double> default_eps_grid();

    std::vector<double> eps_grid = default_eps_grid();
    int k_min = 2;
    int k_max = 128;
    int max_15to1_levels = 4;
    int d_max = 199;
    bool include_retry_factor = false;

    const std::vector<double>& eps_points() const;
};

enum class Strategy { only_15to1, one_block, two_block, best_of_all };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

// Geometric volume (plumbing pieces) -> absolute volume (qubits-rounds):
// v_geom * qubits_per_d2 * rounds_per_d * (5d/4)^3.
double absolute_volume(double v_geom, int d, const CostModel& m);

// Concatenated 15-to-1 schedule built top-down from the target. Levels are
// added while the required input error is below p_in; each level's distance
// satisfies 192 * P_L(d) < eps * t / (1 + eps).
Schedule plan_15to1_chain(double p_in, double p_out, double eps, double pg,
                          const CostModel& m, const SearchConfig& cfg);

// Up to two block levels (outermost first) fed by a 15-to-1 chain, which is
// empty when the innermost block's required input error already exceeds p_in.
Schedule plan_block_pipeline(double p_in, double p_out, const std::vector<int>& ks,
                             double eps, double pg, const CostModel& m,
                             const SearchConfig& cfg);

// Exhaustive grid search over eps (and block sizes, as the strategy requires)
// returning the feasible schedule of minimum volume per output. Ties break
// deterministically: fewer levels, smaller sum of k, smaller top distance,
// then lexicographic distances, block sizes and eps.
Schedule optimize(double p_in, double p_out, Strategy strategy, double pg,
                  const CostModel& m, const SearchConfig& cfg, int threads = 1);

struct TableRecord {
    double p_in = 0.0;
    double p_out = 0.0;
    Strategy strategy = Strategy::only_15to1;
    bool feasible = false;
    double volume_qubit_rounds = 0.0;
    int levels = 0;
    std::vector<int> distances;
    double eps = 0.0;
    int k1 = 0;  // outermost block size, 0 when absent
    int k2 = 0;
    bool winner = false;
    std::string note;  // binding constraint for infeasible cells
};

// One record per (p_out, p_in, strategy), rows ordered p_out outer, p_in
// inner, strategy last. pg defaults to p_in / 10 unless pg_override is set.
// The winner flag marks the strategy with strictly smallest volume per cell.
std::vector<TableRecord> emit_tables(const std::vector<double>& p_in_list,
                                     const std::vector<double>& p_out_list,
                                     const std::vector<Strategy>& strategies,
                                     std::optional<double> pg_override,
                                     const CostModel& m, const SearchConfig& cfg,
                                     int threads = 1);

std::string records_to_csv(const std::vector<TableRecord>& records);
std::string records_to_json(const std::vector<TableRecord>& records);
std::string schedule_to_json(const Schedule& s, const std::string& strategy,
                             const CostModel& m);
std::string schedule_to_text(const Schedule& s, const std::string& strategy);

// Plain key=value configuration (# comments). Recognised keys:
//   error_model.prefactor, error_model.base_scale, error_model.plumbing_mode,
//   volume.qubits_per_d2, volume.rounds_per_d,
//   search.eps_min, search.eps_max, search.eps_points,
//   search.k_min, search.k_max, search.max_15to1_levels, search.d_max
void apply_config_file(const std::string& path, CostModel& m, SearchConfig& cfg);
void apply_config_text(const std::string& text, CostModel& m, SearchConfig& cfg);

}  // namespace mfp
