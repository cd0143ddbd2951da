#include "slacksim/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "slacksim/analysis.hpp"
#include "slacksim/config.hpp"
#include "slacksim/engine.hpp"
#include "slacksim/numfmt.hpp"
#include "slacksim/workloads.hpp"

namespace slacksim {

namespace {

namespace fs = std::filesystem;

void write_text_file(const std::string& dir, const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RuntimeFailure("cannot create output directory: " + dir);
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot open for writing: " + path);
    out << content;
    if (!out) throw RuntimeFailure("failed writing: " + path);
    std::cout << "wrote " << path << "\n";
}

std::string app_name_for(const std::string& trace_path) {
    return fs::path(trace_path).stem().string();
}

std::string output_dir_or_env(const std::string& flag_value) {
    if (const char* env = std::getenv("SLACKSIM_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return flag_value;
}

struct GenerateOptions {
    std::string pattern;
    int ranks = 0;
    int iters = 1;
    std::string comp_mean = "10ms";
    double imbalance = 0.0;
    double jitter = 0.0;
    std::uint64_t bytes = 0;
    std::uint64_t seed = 0;
    std::string name;
    std::string output;
};

int cmd_generate(const GenerateOptions& opt) {
    GeneratorSpec spec;
    spec.pattern = pattern_from_name(opt.pattern);
    spec.n_ranks = opt.ranks;
    spec.n_iterations = opt.iters;
    spec.comp_mean = parse_duration(opt.comp_mean);
    spec.imbalance = opt.imbalance;
    spec.jitter = opt.jitter;
    spec.message_bytes = opt.bytes;
    spec.seed = opt.seed;
    spec.name = opt.name;
    const Workload w = generate(spec);

    std::string path = opt.output;
    if (path.empty()) path = w.name + ".workload.json";
    write_workload(w, path);

    std::size_t n_tasks = 0;
    for (const auto& tl : w.tasks) n_tasks += tl.size();
    // Expected Tcomm share from a Baseline run on the default machine.
    const SimResult probe =
        run_simulation(w, default_machine(), PolicySpec::make(PolicyKind::Baseline));
    const double total = probe.totals.sum();
    const double tcomm = probe.totals.slack + probe.totals.copy + probe.totals.overhead;
    std::cout << "workload: " << w.name << "\n"
              << "ranks: " << w.n_ranks << "\n"
              << "tasks: " << n_tasks << "\n"
              << "expected_tcomm_share_pct: "
              << fmt_double(total > 0.0 ? tcomm / total * 100.0 : 0.0) << "\n"
              << "wrote " << path << "\n";
    return 0;
}

int cmd_simulate(const std::string& config_path) {
    const RunConfig cfg = RunConfig::from_file(config_path);
    if (cfg.workloads.size() != 1) {
        throw ConfigError("simulate expects exactly one workload in the config");
    }
    if (cfg.policies.size() != 1) {
        throw ConfigError("simulate expects exactly one policy in the config");
    }
    const Workload w = cfg.workloads.front().load();
    const SimResult result = run_simulation(w, cfg.machine, cfg.policies.front());
    emit_report(result, w, cfg.machine, cfg.output_dir);
    std::cout << sim_result_summary_text(result);
    std::cout << "reports in " << cfg.output_dir << "\n";
    return 0;
}

int cmd_replay(const std::string& trace_path, const std::string& policy_name,
               const std::string& theta, const std::string& config_path) {
    MachineModel machine = default_machine();
    if (!config_path.empty()) machine = RunConfig::from_file(config_path).machine;
    PolicySpec spec = PolicySpec::make(policy_kind_from_name(policy_name));
    if (!theta.empty()) spec.theta = parse_duration(theta);
    const std::vector<TraceRecord> records = read_trace(trace_path);
    const CoverageResult cov = replay_trace(records, spec, machine);
    std::cout << "policy: " << cov.policy_name << "\n"
              << "records: " << cov.n_records << "\n"
              << "total_s: " << fmt_double(cov.total_s) << "\n"
              << "reduced_s: " << fmt_double(cov.reduced_s) << "\n"
              << "coverage_pct: " << fmt_double(cov.coverage_pct) << "\n"
              << "tcomm_pct: " << fmt_double(cov.tcomm_pct) << "\n"
              << "tslack_pct: " << fmt_double(cov.tslack_pct) << "\n"
              << "avg_mpi_ms: " << fmt_double(cov.avg_mpi_ms) << "\n";
    return 0;
}

int cmd_compare(const std::string& config_path) {
    const RunConfig cfg = RunConfig::from_file(config_path);
    if (cfg.workloads.empty()) throw ConfigError("compare needs at least one workload");
    const std::vector<PolicySpec> policies =
        cfg.policies.empty() ? default_policy_set() : cfg.policies;
    std::vector<ComparisonRow> rows;
    for (const WorkloadSource& src : cfg.workloads) {
        rows.push_back(compare_policies(src.load(), cfg.machine, policies));
    }
    const std::string csv = render_compare_csv(rows);
    write_text_file(cfg.output_dir, "compare.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_coverage(const std::vector<std::string>& trace_paths, const std::string& config_path,
                 const std::string& out_dir_flag) {
    MachineModel machine = default_machine();
    std::vector<PolicySpec> policies = default_coverage_policies();
    std::string out_dir = output_dir_or_env(out_dir_flag);
    if (!config_path.empty()) {
        const RunConfig cfg = RunConfig::from_file(config_path);
        machine = cfg.machine;
        if (!cfg.policies.empty()) policies = cfg.policies;
        out_dir = cfg.output_dir;
    }
    std::vector<std::pair<std::string, std::vector<TraceRecord>>> apps;
    for (const std::string& path : trace_paths) {
        apps.emplace_back(app_name_for(path), read_trace(path));
    }
    const std::vector<CoverageRow> rows = coverage_table(apps, policies, machine);
    const std::string csv = render_coverage_csv(rows);
    write_text_file(out_dir, "coverage.csv", csv);
    std::cout << csv;
    return 0;
}

int cmd_predict(const std::vector<std::string>& trace_paths, const std::string& min_duration,
                const std::string& csv_path) {
    const double min_dur = parse_duration(min_duration);
    std::vector<std::pair<std::string, PredictionReport>> reports;
    for (const std::string& path : trace_paths) {
        const std::vector<TraceRecord> records = read_trace(path);
        reports.emplace_back(app_name_for(path), predictability(records, min_dur));
    }
    for (const auto& [app, rep] : reports) {
        std::cout << "app: " << app << "\n"
                  << "min_duration_s: " << fmt_double(rep.min_duration) << "\n"
                  << "records: " << rep.n_records << "\n";
        const auto print = [](const char* variant, const PredictionStats& s) {
            std::cout << variant << ": predicted " << s.n_predicted << ", smape t_comp "
                      << fmt_double(s.smape_t_comp) << ", t_slack "
                      << fmt_double(s.smape_t_slack) << ", t_copy "
                      << fmt_double(s.smape_t_copy) << "\n";
        };
        print("with_previous_info", rep.with_info);
        print("without_previous_info", rep.without_info);
    }
    if (!csv_path.empty()) {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw RuntimeFailure("cannot open for writing: " + csv_path);
        out << render_prediction_csv(reports);
        std::cout << "wrote " << csv_path << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"slacksim: deterministic simulator of MPI slack and DVFS runtimes"};
    app.require_subcommand(1);

    GenerateOptions gen;
    CLI::App* generate_cmd = app.add_subcommand(
        "generate", "Generate a synthetic workload and write it to a file");
    generate_cmd
        ->add_option("--pattern", gen.pattern,
                     "balanced-barrier | imbalanced-barrier | irregular-alternating | "
                     "short-phase | p2p-ring | bsp-stencil")
        ->required();
    generate_cmd->add_option("--ranks", gen.ranks, "number of ranks (>= 2)")->required();
    generate_cmd->add_option("--iters", gen.iters, "iterations (default 1)");
    generate_cmd->add_option("--comp-mean", gen.comp_mean,
                             "mean compute time per task, e.g. 7ms (default 10ms)");
    generate_cmd->add_option("--imbalance", gen.imbalance, "comp spread fraction in [0, 1]");
    generate_cmd->add_option("--jitter", gen.jitter, "per-draw randomness fraction in [0, 1)");
    generate_cmd->add_option("--bytes", gen.bytes, "message payload bytes");
    generate_cmd->add_option("--seed", gen.seed, "PRNG seed");
    generate_cmd->add_option("--name", gen.name, "workload name (default: the pattern)");
    generate_cmd->add_option("--output,-o", gen.output,
                             "output path (default <name>.workload.json)");

    std::string sim_config;
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "Run one workload under one policy and emit reports");
    simulate_cmd->add_option("--config", sim_config, "run configuration JSON")->required();

    std::string replay_trace_path, replay_policy, replay_theta, replay_config;
    CLI::App* replay_cmd = app.add_subcommand(
        "replay", "Replay a recorded trace open-loop under one policy's timer logic");
    replay_cmd->add_option("--trace", replay_trace_path, "trace CSV path")->required();
    replay_cmd->add_option("--policy", replay_policy, "policy name")->required();
    replay_cmd->add_option("--theta", replay_theta, "timeout override, e.g. 500us");
    replay_cmd->add_option("--config", replay_config, "config JSON for the machine model");

    std::string cmp_config;
    CLI::App* compare_cmd = app.add_subcommand(
        "compare", "Run a policy set on workload(s) and write the comparison table");
    compare_cmd->add_option("--config", cmp_config, "run configuration JSON")->required();

    std::vector<std::string> cov_traces;
    std::string cov_config, cov_out = "out";
    CLI::App* coverage_cmd = app.add_subcommand(
        "coverage", "Slack-isolation potential table from recorded traces");
    coverage_cmd->add_option("--trace", cov_traces, "trace CSV path (repeatable)")->required();
    coverage_cmd->add_option("--config", cov_config, "config JSON (machine, policies, output)");
    coverage_cmd->add_option("--out-dir", cov_out, "output directory (default out)");

    std::vector<std::string> pred_traces;
    std::string pred_min = "500ms", pred_csv;
    CLI::App* predict_cmd = app.add_subcommand(
        "predict", "Last-value predictability (SMAPE) of recorded traces");
    predict_cmd->add_option("--trace", pred_traces, "trace CSV path (repeatable)")->required();
    predict_cmd->add_option("--min-duration", pred_min,
                            "drop records whose total duration is <= this (default 500ms)");
    predict_cmd->add_option("--csv", pred_csv, "also write the report as CSV to this path");

    CLI::App* defaults_cmd =
        app.add_subcommand("defaults", "Print every built-in default as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (generate_cmd->parsed()) return cmd_generate(gen);
        if (simulate_cmd->parsed()) return cmd_simulate(sim_config);
        if (replay_cmd->parsed()) {
            return cmd_replay(replay_trace_path, replay_policy, replay_theta, replay_config);
        }
        if (compare_cmd->parsed()) return cmd_compare(cmp_config);
        if (coverage_cmd->parsed()) return cmd_coverage(cov_traces, cov_config, cov_out);
        if (predict_cmd->parsed()) return cmd_predict(pred_traces, pred_min, pred_csv);
        if (defaults_cmd->parsed()) {
            std::cout << defaults_json();
            return 0;
        }
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const RuntimeFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const std::string& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace slacksim
