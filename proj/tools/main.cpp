// bdlab command line: poison a corpus, evaluate a (simulated or remote)
// model, run the attacker-payoff game, simulate dataset-pollution
// cascades, and merge reports.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdlab/cascade.hpp"
#include "bdlab/config.hpp"
#include "bdlab/errors.hpp"
#include "bdlab/pipeline.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<unsigned> parallelism;
};

bdlab::RunConfig resolve_config(const GlobalArgs& args) {
    bdlab::ConfigOverrides overrides;
    overrides.seed = args.seed;
    overrides.output_dir = args.out_dir;
    overrides.parallelism = args.parallelism;
    if (args.config_path.empty()) {
        return bdlab::default_run_config(overrides);
    }
    return bdlab::load_run_config(args.config_path, overrides);
}

int cmd_poison(const GlobalArgs& args) {
    const bdlab::RunConfig config = resolve_config(args);
    const bdlab::PoisonSummary summary = bdlab::run_poison(config);
    std::size_t total = 0;
    std::cout << "seed " << config.seed << ": poisoned corpus of "
              << summary.corpus_size << " samples\n";
    for (const auto& [trigger_id, count] : summary.per_arm_counts) {
        std::cout << "  arm " << trigger_id << ": " << count << " samples\n";
        total += count;
    }
    std::cout << "  total " << total << " annotated\n";
    std::cout << "wrote " << summary.poisoned_corpus_path << "\n";
    std::cout << "wrote " << summary.annotations_path << "\n";
    return 0;
}

int cmd_eval(const GlobalArgs& args) {
    const bdlab::RunConfig config = resolve_config(args);
    const bdlab::EvalOutcome outcome = bdlab::run_eval(config);
    std::cout << "seed " << config.seed << ": eval config "
              << outcome.report.config_id << "\n";
    for (const auto& [k, v] : outcome.report.pass_at_k_clean) {
        std::cout << "  pass@" << k << " clean: " << v << "\n";
    }
    for (const auto& [k, v] : outcome.report.pass_at_k_triggered) {
        std::cout << "  pass@" << k << " triggered: " << v << "\n";
    }
    if (outcome.report.asr) {
        std::cout << "  ASR: " << *outcome.report.asr << "\n";
    }
    if (outcome.report.mcsr) {
        std::cout << "  MCSR: " << *outcome.report.mcsr << "\n";
    }
    if (outcome.report.expos_r) {
        std::cout << "  ExposR: " << *outcome.report.expos_r << "\n";
    }
    if (outcome.failed_requests > 0) {
        std::cerr << "warning: " << outcome.failed_requests
                  << " generation requests failed and were skipped\n";
    }
    std::cout << "wrote " << outcome.report_json_path << "\n";
    std::cout << "wrote " << outcome.report_csv_path << "\n";
    return 0;
}

int cmd_simgame(const GlobalArgs& args, const std::string& scenario_path) {
    bdlab::RunConfig config = resolve_config(args);
    if (!scenario_path.empty()) {
        config.game_scenario_path = scenario_path;
    }
    const bdlab::SimgameOutcome outcome = bdlab::run_simgame(config);
    std::cout << "adaptive preferred: "
              << (outcome.adaptive_preferred ? "yes" : "no") << "\n";
    std::cout << "wrote " << outcome.json_path << "\n";
    std::cout << "wrote " << outcome.csv_path << "\n";
    return 0;
}

int cmd_cascade(const GlobalArgs& args, const std::string& cascade_path,
                std::optional<std::uint64_t> traces) {
    bdlab::RunConfig config = resolve_config(args);
    if (!cascade_path.empty()) {
        config.cascade_config_path = cascade_path;
    }
    if (traces) {
        config.cascade_traces = *traces;
    }
    const bdlab::CascadeOutcome outcome = bdlab::run_cascade_cmd(config);
    std::cout << "seed " << config.seed << ": " << outcome.traces_with_firing
              << "/" << outcome.traces << " traces fired\n";
    std::cout << "wrote " << outcome.traces_csv_path << "\n";
    std::cout << "wrote " << outcome.summary_json_path << "\n";
    return 0;
}

int cmd_report(const GlobalArgs& args,
               const std::vector<std::string>& report_paths) {
    const bdlab::RunConfig config = resolve_config(args);
    const std::string out_path =
        bdlab::run_report_merge(report_paths, config.output_dir);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"backdoor-attack research toolkit for code models"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path,
                   "top-level JSON config file");
    std::uint64_t seed_value = 0;
    auto* seed_opt =
        app.add_option("--seed", seed_value, "override the root seed");
    std::string out_value;
    auto* out_opt =
        app.add_option("--out", out_value, "override the output directory");
    unsigned parallelism_value = 0;
    auto* par_opt = app.add_option("--parallelism", parallelism_value,
                                   "sandbox worker count");

    auto* poison = app.add_subcommand("poison",
                                      "apply a poison plan to a corpus");
    auto* eval = app.add_subcommand("eval",
                                    "evaluate a backend on the eval suite");
    auto* simgame =
        app.add_subcommand("simgame", "compare attacker strategies");
    std::string scenario_path;
    simgame->add_option("--scenario", scenario_path,
                        "game scenario JSON (overrides config)");
    auto* cascade =
        app.add_subcommand("cascade", "simulate dataset pollution rounds");
    std::string cascade_path;
    cascade->add_option("--cascade-config", cascade_path,
                        "cascade config JSON (overrides config)");
    std::uint64_t traces_value = 0;
    auto* traces_opt =
        cascade->add_option("--traces", traces_value, "number of traces");
    auto* report = app.add_subcommand("report", "merge eval reports to CSV");
    std::vector<std::string> report_paths;
    report->add_option("reports", report_paths, "eval_report.json paths");

    CLI11_PARSE(app, argc, argv);

    if (*seed_opt) {
        args.seed = seed_value;
    }
    if (*out_opt) {
        args.out_dir = out_value;
    }
    if (*par_opt) {
        args.parallelism = parallelism_value;
    }

    try {
        if (poison->parsed()) {
            return cmd_poison(args);
        }
        if (eval->parsed()) {
            return cmd_eval(args);
        }
        if (simgame->parsed()) {
            return cmd_simgame(args, scenario_path);
        }
        if (cascade->parsed()) {
            return cmd_cascade(args, cascade_path,
                               *traces_opt ? std::optional<std::uint64_t>(
                                                 traces_value)
                                           : std::nullopt);
        }
        if (report->parsed()) {
            return cmd_report(args, report_paths);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
