#include "mfp/planner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>

namespace mfp {

namespace {

double level_budget(double target, double eps) { return eps * target / (1.0 + eps); }

void add_stage_warnings(const StagePlan& st, double pg, const CostModel& m,
                        std::vector<std::string>& warnings) {
    if (fit_out_of_range(pg, m)) {
        warnings.push_back("error-model fit evaluated at base_scale*pg >= 1");
    }
    if (!rejection_estimate_valid(st.spec, st.required_input_error)) {
        warnings.push_back("first-order rejection estimate for " + st.spec.name() +
                           " exceeds " + std::to_string(kRejectionValidityThreshold));
    }
    if (!st.spec.transversal_condition_met()) {
        warnings.push_back(st.spec.name() +
                           ": transversal-operator property is only stated for k = 2+4j");
    }
}

double retry_factor(const StagePlan& st) {
    const double rej = rejection_probability(st.spec, st.required_input_error);
    if (rej >= 1.0) {
        throw infeasible_error("rejection estimate saturates for " + st.spec.name());
    }
    return 1.0 / (1.0 - rej);
}

void finalize_schedule(Schedule& s, double pg, const CostModel& m) {
    double total = 0.0;
    for (auto& st : s.stages) {
        if (s.include_retry_factor) {
            st.multiplicity *= retry_factor(st);
        }
        total += st.multiplicity * st.abs_volume;
    }
    s.total_volume_per_output = total;
    for (const auto& st : s.stages) {
        add_stage_warnings(st, pg, m, s.warnings);
    }
    std::sort(s.warnings.begin(), s.warnings.end());
    s.warnings.erase(std::unique(s.warnings.begin(), s.warnings.end()),
                     s.warnings.end());
}

// Strict total order on schedules for the argmin reduction. Volume first,
// then the documented tie-breaks, then eps so that any two grid points
// compare unequal and the reduction is order-independent.
bool schedule_less(const Schedule& a, const Schedule& b) {
    const auto key = [](const Schedule& s) {
        return std::make_tuple(s.total_volume_per_output, s.levels(), s.sum_block_k(),
                               s.top_distance(), s.distances(), s.block_ks(),
                               s.stages.empty() ? 0.0 : s.stages.front().eps);
    };
    return key(a) < key(b);
}

}  // namespace

int Schedule::sum_block_k() const {
    int sum = 0;
    for (const auto& st : stages) {
        if (st.spec.kind == ProtocolKind::Block) sum += st.spec.k;
    }
    return sum;
}

std::vector<int> Schedule::distances() const {
    std::vector<int> ds;
    ds.reserve(stages.size());
    for (const auto& st : stages) ds.push_back(st.distance);
    return ds;
}

std::vector<int> Schedule::block_ks() const {
    std::vector<int> ks;
    for (const auto& st : stages) {
        if (st.spec.kind == ProtocolKind::Block) ks.push_back(st.spec.k);
    }
    return ks;
}

std::vector<double> SearchConfig::default_eps_grid() {
    std::vector<double> grid;
    const int n = 33;
    for (int i = 0; i < n; ++i) {
        const double exponent = -5.0 + 10.0 * i / (n - 1);
        grid.push_back(std::pow(2.0, exponent));
    }
    return grid;
}

const std::vector<double>& SearchConfig::eps_points() const {
    if (eps_grid.empty()) {
        throw invalid_parameter("eps grid must be nonempty");
    }
    return eps_grid;
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::only_15to1: return "15-1";
        case Strategy::one_block: return "block";
        case Strategy::two_block: return "block2";
        case Strategy::best_of_all: return "best";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "15-1" || s == "15to1") return Strategy::only_15to1;
    if (s == "block" || s == "block1") return Strategy::one_block;
    if (s == "block2") return Strategy::two_block;
    if (s == "best") return Strategy::best_of_all;
    throw invalid_parameter("unknown strategy '" + s + "'");
}

double absolute_volume(double v_geom, int d, const CostModel& m) {
    if (!(v_geom > 0.0)) {
        throw invalid_parameter("geometric volume must be positive");
    }
    const double edge = 5.0 * d / 4.0;
    return v_geom * m.qubits_per_d2 * m.rounds_per_d * edge * edge * edge;
}

Schedule plan_15to1_chain(double p_in, double p_out, double eps, double pg,
                          const CostModel& m, const SearchConfig& cfg) {
    if (!(p_out < p_in)) {
        throw degenerate_target("p_out must be below p_in (" + std::to_string(p_out) +
                                " >= " + std::to_string(p_in) + ")");
    }
    Schedule s;
    s.p_in = p_in;
    s.p_out = p_out;
    s.pg = pg;
    s.include_retry_factor = cfg.include_retry_factor;

    const ProtocolSpec spec = ProtocolSpec::fifteen_to_one();
    double target = p_out;
    double multiplicity = 1.0;
    for (;;) {
        StagePlan st;
        st.spec = spec;
        st.eps = eps;
        st.target_error = target;
        st.logical_budget = level_budget(target, eps);
        st.distance = min_distance(geometric_volume(spec), pg, st.logical_budget, m,
                                   cfg.d_max);
        st.required_input_error = required_input_error(spec, target, eps);
        st.abs_volume = absolute_volume(geometric_volume(spec), st.distance, m);
        st.multiplicity = multiplicity;
        s.stages.push_back(st);
        if (st.required_input_error >= p_in) break;
        if (s.levels() >= cfg.max_15to1_levels) {
            throw infeasible_error("15-1 chain needs more than " +
                                   std::to_string(cfg.max_15to1_levels) + " levels");
        }
        target = st.required_input_error;
        multiplicity *= spec.n_inputs();
    }
    finalize_schedule(s, pg, m);
    return s;
}

Schedule plan_block_pipeline(double p_in, double p_out, const std::vector<int>& ks,
                             double eps, double pg, const CostModel& m,
                             const SearchConfig& cfg) {
    if (ks.empty()) return plan_15to1_chain(p_in, p_out, eps, pg, m, cfg);
    if (ks.size() > 2) {
        throw invalid_parameter("at most two block levels are supported");
    }
    if (!(p_out < p_in)) {
        throw degenerate_target("p_out must be below p_in");
    }

    Schedule s;
    s.p_in = p_in;
    s.p_out = p_out;
    s.pg = pg;
    s.include_retry_factor = cfg.include_retry_factor;

    double target = p_out;
    double multiplicity = 1.0;
    for (int k : ks) {
        const ProtocolSpec spec = ProtocolSpec::block(k);
        StagePlan st;
        st.spec = spec;
        st.eps = eps;
        st.target_error = target;
        st.logical_budget = level_budget(target, eps);
        st.distance = min_distance(geometric_volume(spec), pg, st.logical_budget, m,
                                   cfg.d_max);
        st.required_input_error = required_input_error(spec, target, eps);
        st.abs_volume = absolute_volume(geometric_volume(spec), st.distance, m);
        multiplicity /= spec.n_outputs();
        st.multiplicity = multiplicity;
        s.stages.push_back(st);
        target = st.required_input_error;
        multiplicity *= spec.n_inputs();
    }

    // 15-to-1 chain supplying the innermost block, unless raw states suffice.
    if (target < p_in) {
        const Schedule chain = plan_15to1_chain(p_in, target, eps, pg, m, cfg);
        for (StagePlan st : chain.stages) {
            st.multiplicity *= multiplicity;
            s.stages.push_back(st);
        }
    }
    finalize_schedule(s, pg, m);
    return s;
}

namespace {

struct Candidate {
    double eps;
    std::vector<int> ks;
};

std::vector<Candidate> build_candidates(Strategy strategy, const SearchConfig& cfg) {
    std::vector<Candidate> cands;
    const auto& eps_grid = cfg.eps_points();
    std::vector<int> kvals;
    for (int k = std::max(2, cfg.k_min + (cfg.k_min % 2)); k <= cfg.k_max; k += 2) {
        kvals.push_back(k);
    }
    const auto add_for = [&](Strategy st) {
        for (double eps : eps_grid) {
            switch (st) {
                case Strategy::only_15to1:
                    cands.push_back({eps, {}});
                    break;
                case Strategy::one_block:
                    for (int k : kvals) cands.push_back({eps, {k}});
                    break;
                case Strategy::two_block:
                    for (int k1 : kvals)
                        for (int k2 : kvals) cands.push_back({eps, {k1, k2}});
                    break;
                default:
                    break;
            }
        }
    };
    if (strategy == Strategy::best_of_all) {
        add_for(Strategy::only_15to1);
        add_for(Strategy::one_block);
        add_for(Strategy::two_block);
    } else {
        add_for(strategy);
    }
    return cands;
}

}  // namespace

Schedule optimize(double p_in, double p_out, Strategy strategy, double pg,
                  const CostModel& m, const SearchConfig& cfg, int threads) {
    const std::vector<Candidate> cands = build_candidates(strategy, cfg);
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    threads = std::min<int>(threads, static_cast<int>(cands.size()));
    threads = std::max(threads, 1);

    struct Partial {
        std::optional<Schedule> best;
        std::string first_failure;
        std::size_t failures = 0;
    };

    const auto run_range = [&](std::size_t lo, std::size_t hi) {
        Partial part;
        for (std::size_t i = lo; i < hi; ++i) {
            try {
                Schedule s = plan_block_pipeline(p_in, p_out, cands[i].ks,
                                                 cands[i].eps, pg, m, cfg);
                if (!part.best || schedule_less(s, *part.best)) {
                    part.best = std::move(s);
                }
            } catch (const infeasible_error& e) {
                if (part.first_failure.empty()) part.first_failure = e.what();
                ++part.failures;
            } catch (const degenerate_target&) {
                throw;  // applies to every candidate equally
            }
        }
        return part;
    };

    std::vector<Partial> parts;
    if (threads == 1) {
        parts.push_back(run_range(0, cands.size()));
    } else {
        std::vector<std::future<Partial>> futs;
        const std::size_t chunk = (cands.size() + threads - 1) / threads;
        for (int t = 0; t < threads; ++t) {
            const std::size_t lo = t * chunk;
            const std::size_t hi = std::min(cands.size(), lo + chunk);
            if (lo >= hi) break;
            futs.push_back(std::async(std::launch::async, run_range, lo, hi));
        }
        for (auto& f : futs) parts.push_back(f.get());
    }

    std::optional<Schedule> best;
    std::string first_failure;
    std::size_t failures = 0;
    for (auto& part : parts) {
        if (part.best && (!best || schedule_less(*part.best, *best))) {
            best = std::move(part.best);
        }
        if (first_failure.empty()) first_failure = part.first_failure;
        failures += part.failures;
    }
    if (!best) {
        throw infeasible_error("all " + std::to_string(failures) +
                               " grid candidates infeasible; binding constraint: " +
                               first_failure);
    }
    return *best;
}

std::vector<TableRecord> emit_tables(const std::vector<double>& p_in_list,
                                     const std::vector<double>& p_out_list,
                                     const std::vector<Strategy>& strategies,
                                     std::optional<double> pg_override,
                                     const CostModel& m, const SearchConfig& cfg,
                                     int threads) {
    if (p_in_list.empty() || p_out_list.empty() || strategies.empty()) {
        throw invalid_parameter("table grids must be nonempty");
    }
    struct Cell {
        double p_in, p_out;
        Strategy strategy;
    };
    std::vector<Cell> cells;
    for (double p_out : p_out_list)
        for (double p_in : p_in_list)
            for (Strategy st : strategies) cells.push_back({p_in, p_out, st});

    std::vector<TableRecord> records(cells.size());
    const auto eval_cell = [&](std::size_t i) {
        const Cell& c = cells[i];
        TableRecord r;
        r.p_in = c.p_in;
        r.p_out = c.p_out;
        r.strategy = c.strategy;
        const double pg = pg_override ? *pg_override : c.p_in / 10.0;
        try {
            const Schedule s = optimize(c.p_in, c.p_out, c.strategy, pg, m, cfg, 1);
            r.feasible = true;
            r.volume_qubit_rounds = s.total_volume_per_output;
            r.levels = s.levels();
            r.distances = s.distances();
            r.eps = s.stages.empty() ? 0.0 : s.stages.front().eps;
            const auto ks = s.block_ks();
            r.k1 = ks.size() > 0 ? ks[0] : 0;
            r.k2 = ks.size() > 1 ? ks[1] : 0;
        } catch (const std::runtime_error& e) {
            r.feasible = false;
            r.note = e.what();
        }
        records[i] = std::move(r);
    };

    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    if (threads == 1 || cells.size() <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) eval_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const int nthreads = std::min<int>(threads, static_cast<int>(cells.size()));
        for (int t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= cells.size()) return;
                    eval_cell(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    // Winner flags: strictly smallest volume among the cell's feasible records.
    for (double p_out : p_out_list) {
        for (double p_in : p_in_list) {
            std::size_t best = records.size();
            for (std::size_t i = 0; i < records.size(); ++i) {
                const auto& r = records[i];
                if (r.p_in != p_in || r.p_out != p_out || !r.feasible) continue;
                if (best == records.size() ||
                    r.volume_qubit_rounds < records[best].volume_qubit_rounds) {
                    best = i;
                }
            }
            if (best < records.size()) records[best].winner = true;
        }
    }
    return records;
}

namespace {

std::string join_distances(const std::vector<int>& ds) {
    std::string out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(ds[i]);
    }
    return out;
}

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.1e", v);
    return buf;
}

nlohmann::json record_to_json(const TableRecord& r) {
    nlohmann::json j;
    j["p_in"] = r.p_in;
    j["p_out"] = r.p_out;
    j["strategy"] = to_string(r.strategy);
    if (r.feasible) {
        j["volume_qubit_rounds"] = r.volume_qubit_rounds;
        j["levels"] = r.levels;
        j["distances"] = r.distances;
        j["eps"] = r.eps;
    } else {
        j["volume_qubit_rounds"] = nullptr;
        j["levels"] = nullptr;
        j["distances"] = nlohmann::json::array();
        j["eps"] = nullptr;
        j["infeasible_reason"] = r.note;
    }
    j["k1"] = r.k1;
    j["k2"] = r.k2;
    j["winner"] = r.winner;
    return j;
}

}  // namespace

std::string records_to_csv(const std::vector<TableRecord>& records) {
    std::string out =
        "p_in,p_out,strategy,volume_qubit_rounds,levels,distances,eps,k1,k2,winner\n";
    for (const auto& r : records) {
        out += fmt_full(r.p_in);
        out += ',';
        out += fmt_full(r.p_out);
        out += ',';
        out += to_string(r.strategy);
        out += ',';
        out += r.feasible ? fmt_full(r.volume_qubit_rounds) : "inf";
        out += ',';
        out += r.feasible ? std::to_string(r.levels) : "";
        out += ',';
        out += join_distances(r.distances);
        out += ',';
        out += r.feasible ? fmt_full(r.eps) : "";
        out += ',';
        out += std::to_string(r.k1);
        out += ',';
        out += std::to_string(r.k2);
        out += ',';
        out += r.winner ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string records_to_json(const std::vector<TableRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) arr.push_back(record_to_json(r));
    return arr.dump(2) + "\n";
}

std::string schedule_to_json(const Schedule& s, const std::string& strategy,
                             const CostModel& m) {
    nlohmann::json j;
    j["p_in"] = s.p_in;
    j["p_out"] = s.p_out;
    j["pg"] = s.pg;
    j["strategy"] = strategy;
    j["total_volume_per_output"] = s.total_volume_per_output;
    j["include_retry_factor"] = s.include_retry_factor;
    j["stages"] = nlohmann::json::array();
    for (const auto& st : s.stages) {
        nlohmann::json js;
        js["protocol"] = st.spec.kind == ProtocolKind::Block ? "block" : "15-1";
        if (st.spec.kind == ProtocolKind::Block) js["k"] = st.spec.k;
        js["distance"] = st.distance;
        js["eps"] = st.eps;
        js["target_error"] = st.target_error;
        js["required_input_error"] = st.required_input_error;
        js["logical_budget"] = st.logical_budget;
        js["abs_volume"] = st.abs_volume;
        js["multiplicity"] = st.multiplicity;
        j["stages"].push_back(js);
    }
    j["cost_model"] = {
        {"prefactor", m.prefactor},
        {"base_scale", m.base_scale},
        {"plumbing_mode", to_string(m.plumbing_mode)},
        {"qubits_per_d2", m.qubits_per_d2},
        {"rounds_per_d", m.rounds_per_d},
        {"note",
         "absolute volume = v_geom * qubits_per_d2 * rounds_per_d * (5d/4)^3; the "
         "conversion constant is configurable and absolute values carry it"},
    };
    j["warnings"] = s.warnings;
    return j.dump(2) + "\n";
}

std::string schedule_to_text(const Schedule& s, const std::string& strategy) {
    std::ostringstream out;
    out << "strategy " << strategy << ": p_in " << fmt_short(s.p_in) << " -> p_out "
        << fmt_short(s.p_out) << " (pg " << fmt_short(s.pg) << ")\n";
    int level = 0;
    for (const auto& st : s.stages) {
        out << "  level " << level++ << ": " << st.spec.name() << " d=" << st.distance
            << " eps=" << fmt_full(st.eps) << " target=" << fmt_short(st.target_error)
            << " input<=" << fmt_short(st.required_input_error)
            << " budget=" << fmt_short(st.logical_budget) << " x"
            << fmt_full(st.multiplicity) << " volume=" << fmt_short(st.abs_volume)
            << "\n";
    }
    out << "  total volume per output: " << fmt_short(s.total_volume_per_output)
        << " qubits-rounds\n";
    for (const auto& w : s.warnings) out << "  warning: " << w << "\n";
    return out.str();
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_text(const std::string& text, CostModel& m, SearchConfig& cfg) {
    std::istringstream in(text);
    std::string line;
    double eps_min = 0.0, eps_max = 0.0;
    int eps_points = 0;
    bool eps_touched = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw parse_error(lineno, "expected key=value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "error_model.prefactor") m.prefactor = std::stod(value);
            else if (key == "error_model.base_scale") m.base_scale = std::stod(value);
            else if (key == "error_model.plumbing_mode")
                m.plumbing_mode = plumbing_mode_from_string(value);
            else if (key == "volume.qubits_per_d2") m.qubits_per_d2 = std::stod(value);
            else if (key == "volume.rounds_per_d") m.rounds_per_d = std::stod(value);
            else if (key == "search.eps_min") { eps_min = std::stod(value); eps_touched = true; }
            else if (key == "search.eps_max") { eps_max = std::stod(value); eps_touched = true; }
            else if (key == "search.eps_points") { eps_points = std::stoi(value); eps_touched = true; }
            else if (key == "search.k_min") cfg.k_min = std::stoi(value);
            else if (key == "search.k_max") cfg.k_max = std::stoi(value);
            else if (key == "search.max_15to1_levels") cfg.max_15to1_levels = std::stoi(value);
            else if (key == "search.d_max") cfg.d_max = std::stoi(value);
            else throw parse_error(lineno, "unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw parse_error(lineno, "bad value for '" + key + "'");
        }
    }
    if (eps_touched) {
        if (!(eps_min > 0.0) || !(eps_max >= eps_min) || eps_points < 1) {
            throw invalid_parameter("search.eps_* must give a nonempty positive grid");
        }
        cfg.eps_grid.clear();
        for (int i = 0; i < eps_points; ++i) {
            const double t = eps_points == 1 ? 0.0 : static_cast<double>(i) / (eps_points - 1);
            cfg.eps_grid.push_back(eps_min * std::pow(eps_max / eps_min, t));
        }
    }
    if (!(m.prefactor > 0.0) || !(m.base_scale > 0.0) || !(m.qubits_per_d2 > 0.0) ||
        !(m.rounds_per_d > 0.0)) {
        throw invalid_parameter("cost model constants must be positive");
    }
}

void apply_config_file(const std::string& path, CostModel& m, SearchConfig& cfg) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    apply_config_text(ss.str(), m, cfg);
}

}  // namespace mfp
