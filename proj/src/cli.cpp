#include "mfp/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mfp/blocksim.hpp"
#include "mfp/planner.hpp"

namespace mfp {

namespace {

void load_configs(const std::string& explicit_path, CostModel& m, SearchConfig& cfg) {
    std::string path = explicit_path;
    if (path.empty()) {
        if (const char* env = std::getenv("MFP_CONFIG")) path = env;
    }
    if (!path.empty()) apply_config_file(path, m, cfg);
}

std::vector<double> pout_decades(double hi, double lo) {
    if (!(hi >= lo) || !(hi < 1.0) || !(lo > 0.0)) {
        throw invalid_parameter("p_out range must satisfy 0 < lo <= hi < 1");
    }
    std::vector<double> out;
    const double e0 = std::log10(hi);
    const long i0 = std::lround(e0);
    if (std::abs(e0 - i0) < 1e-9) {
        // Exact powers of ten step by exponent so the emitted values match
        // the literals a caller would write.
        for (long e = i0;; --e) {
            const double p = std::pow(10.0, static_cast<double>(e));
            if (p < lo * 0.999999) break;
            out.push_back(p);
        }
    } else {
        for (double p = hi; p >= lo * 0.999999; p /= 10.0) out.push_back(p);
    }
    return out;
}

CircuitIR load_or_generate(const std::string& circuit_path, bool have_k, int k,
                           std::ostream& err, int* fail_code) {
    if (!circuit_path.empty()) {
        std::ifstream f(circuit_path);
        if (!f) {
            err << "error: cannot open '" << circuit_path << "'\n";
            *fail_code = kExitIo;
            return {};
        }
        std::ostringstream ss;
        ss << f.rdbuf();
        try {
            return parse_circuit(ss.str());
        } catch (const parse_error& e) {
            err << "error: " << circuit_path << ": " << e.what() << "\n";
            *fail_code = kExitUsage;
            return {};
        }
    }
    if (!have_k) {
        err << "error: provide --k or --circuit\n";
        *fail_code = kExitUsage;
        return {};
    }
    try {
        return generate_block_circuit(k);
    } catch (const invalid_parameter& e) {
        err << "error: " << e.what() << "\n";
        *fail_code = kExitUsage;
        return {};
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    CLI::App app{
        "Magic-state factory planner: distillation schedules under a "
        "surface-code cost model, plus a Z-frame verifier for block-code "
        "distillation circuits"};
    app.name("mfp");
    app.require_subcommand(1);

    struct {
        double pin = 0.0, pout = 0.0, pg = 0.0;
        std::string strategy = "best", config, format = "human";
        int threads = 0;
        bool retry = false;
    } plan_args;
    auto* plan = app.add_subcommand("plan", "Optimize one distillation schedule");
    plan->add_option("--pin", plan_args.pin, "input state error rate")->required();
    plan->add_option("--pout", plan_args.pout, "target output error rate")->required();
    plan->add_option("--strategy", plan_args.strategy, "15-1 | block | block2 | best");
    auto* plan_pg =
        plan->add_option("--pg", plan_args.pg, "physical gate error rate (default pin/10)");
    plan->add_option("--config", plan_args.config, "config file path (or MFP_CONFIG)");
    plan->add_option("--format", plan_args.format, "human | json");
    plan->add_option("--threads", plan_args.threads, "worker threads (0 = all)");
    plan->add_flag("--include-retry", plan_args.retry,
                   "multiply multiplicities by 1/(1-rejection)");

    struct {
        std::vector<double> pins{1e-2, 1e-3, 1e-4};
        std::vector<double> pout_range{1e-5, 1e-20};
        std::vector<std::string> strategies{"15-1", "block", "block2"};
        double pg = 0.0;
        std::string out_path = "-", format = "csv", config;
        int threads = 0;
    } table_args;
    auto* table = app.add_subcommand("table", "Emit the benchmark volume grid");
    table->add_option("--pin-list", table_args.pins, "input error rates")
        ->delimiter(',');
    table->add_option("--pout-range", table_args.pout_range,
                      "highest and lowest target error (stepped by decades)")
        ->delimiter(',')
        ->expected(2);
    table->add_option("--strategies", table_args.strategies,
                      "subset of: 15-1,block,block2")
        ->delimiter(',');
    auto* table_pg = table->add_option("--pg", table_args.pg,
                                       "fixed gate error rate (default pin/10)");
    table->add_option("--out", table_args.out_path, "output path ('-' = stdout)");
    table->add_option("--format", table_args.format, "csv | json");
    table->add_option("--config", table_args.config, "config file path (or MFP_CONFIG)");
    table->add_option("--threads", table_args.threads, "worker threads (0 = all)");

    struct {
        int k = 0;
        double p = 0.0;
        long long shots = 0;
        uint64_t seed = 0;
        std::string circuit;
        int threads = 0;
    } sim_args;
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo a block circuit");
    auto* sim_k = simulate->add_option("--k", sim_args.k, "block size (even)");
    simulate->add_option("--p", sim_args.p, "Z error probability per T site")
        ->required();
    simulate->add_option("--shots", sim_args.shots, "number of shots")->required();
    simulate->add_option("--seed", sim_args.seed, "RNG seed");
    simulate->add_option("--circuit", sim_args.circuit, "circuit file instead of --k");
    simulate->add_option("--threads", sim_args.threads, "worker threads (0 = all)");

    struct {
        int k = 0;
        std::string circuit;
    } val_args;
    auto* validate = app.add_subcommand("validate", "Exhaustive fault check");
    auto* val_k = validate->add_option("--k", val_args.k, "block size (even)");
    validate->add_option("--circuit", val_args.circuit, "circuit file instead of --k");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (plan->parsed()) {
            if (!(plan_args.pin > 0.0 && plan_args.pin < 1.0) ||
                !(plan_args.pout > 0.0 && plan_args.pout < 1.0)) {
                err << "error: --pin and --pout must lie in (0, 1)\n";
                return kExitUsage;
            }
            CostModel m;
            SearchConfig cfg;
            load_configs(plan_args.config, m, cfg);
            cfg.include_retry_factor = plan_args.retry;
            const double pg =
                plan_pg->count() ? plan_args.pg : plan_args.pin / 10.0;
            const Strategy strategy = strategy_from_string(plan_args.strategy);
            const Schedule s = optimize(plan_args.pin, plan_args.pout, strategy, pg, m,
                                        cfg, plan_args.threads);
            if (plan_args.format == "json") {
                out << schedule_to_json(s, to_string(strategy), m);
            } else {
                out << schedule_to_text(s, to_string(strategy));
            }
            return kExitOk;
        }
        if (table->parsed()) {
            CostModel m;
            SearchConfig cfg;
            load_configs(table_args.config, m, cfg);
            std::vector<Strategy> strategies;
            for (const auto& name : table_args.strategies) {
                strategies.push_back(strategy_from_string(name));
            }
            const std::optional<double> pg_override =
                table_pg->count() ? std::optional<double>(table_args.pg) : std::nullopt;
            const auto pouts =
                pout_decades(table_args.pout_range[0], table_args.pout_range[1]);
            const auto records = emit_tables(table_args.pins, pouts, strategies,
                                             pg_override, m, cfg, table_args.threads);
            const std::string payload = table_args.format == "json"
                                            ? records_to_json(records)
                                            : records_to_csv(records);
            if (table_args.out_path == "-") {
                out << payload;
            } else {
                std::ofstream f(table_args.out_path);
                if (!f || !(f << payload)) {
                    err << "error: cannot write '" << table_args.out_path << "'\n";
                    return kExitIo;
                }
            }
            return kExitOk;
        }
        if (simulate->parsed()) {
            int fail_code = kExitOk;
            const CircuitIR circuit = load_or_generate(
                sim_args.circuit, sim_k->count() > 0, sim_args.k, err, &fail_code);
            if (fail_code != kExitOk) return fail_code;
            const SimStats stats = run_monte_carlo(circuit, sim_args.p, sim_args.shots,
                                                   sim_args.seed, sim_args.threads);
            ExactStats exact;
            const bool have_exact = circuit.t_site_count <= 24;
            if (have_exact) exact = exact_statistics(circuit, sim_args.p);
            out << stats_to_json(stats, sim_args.p, circuit.k,
                                 have_exact ? &exact : nullptr);
            return kExitOk;
        }
        if (validate->parsed()) {
            int fail_code = kExitOk;
            const CircuitIR circuit = load_or_generate(
                val_args.circuit, val_k->count() > 0, val_args.k, err, &fail_code);
            if (fail_code != kExitOk) return fail_code;
            const ValidationReport report = validate_circuit(circuit);
            out << report.to_json();
            return report.pass ? kExitOk : kExitValidation;
        }
    } catch (const parse_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const invalid_parameter& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const degenerate_target& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const infeasible_error& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    }
    err << "usage error: no command given\n";
    return kExitUsage;
}

}  // namespace mfp
