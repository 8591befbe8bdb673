#pragma once

#include <memory>
#include <string>
#include <vector>

#include "bdlab/config.hpp"
#include "bdlab/metrics.hpp"
#include "bdlab/model.hpp"
#include "bdlab/poison.hpp"

namespace bdlab {

// Command cores shared by the CLI binary and the language bindings, so
// every entry point exercises the same code path.

struct PoisonSummary {
    std::size_t corpus_size = 0;
    std::vector<std::pair<std::string, std::size_t>> per_arm_counts;
    std::string poisoned_corpus_path;
    std::string annotations_path;
};

/// Apply the configured poison plan and write poisoned_corpus.jsonl and
/// annotations.jsonl under the output directory.
PoisonSummary run_poison(const RunConfig& config);

struct EvalOutcome {
    EvalReport report;
    std::size_t failed_requests = 0;  // remote generate calls given up on
    std::string report_json_path;
    std::string report_csv_path;
};

/// Generate n clean and n per-arm triggered completions per problem,
/// execute everything in the sandbox, aggregate the four metrics and write
/// eval_report.json and eval_report.csv. Fully deterministic under the
/// simulated backend.
EvalOutcome run_eval(const RunConfig& config);

/// Build the generation records run_eval aggregates; exposed for tests
/// and bindings that want the raw per-completion flags.
std::vector<GenerationRecord> collect_records(const RunConfig& config,
                                              ModelBackend& backend);

struct SimgameOutcome {
    std::string json_path;
    std::string csv_path;
    bool adaptive_preferred = false;
};

SimgameOutcome run_simgame(const RunConfig& config);

struct CascadeOutcome {
    std::string traces_csv_path;
    std::string summary_json_path;
    std::size_t traces_with_firing = 0;
    std::size_t traces = 0;
};

CascadeOutcome run_cascade_cmd(const RunConfig& config);

/// Merge eval reports into one CSV with a row per (config_id, k).
std::string run_report_merge(const std::vector<std::string>& report_paths,
                             const std::string& output_dir);

SolutionBook load_solution_book(const std::string& path);

/// The backend selected by the config; simulated backends get their
/// backdoor arms from the poison plan and their trained rate from the
/// plan's total injection rate unless the config pins one.
std::unique_ptr<ModelBackend> make_backend(const RunConfig& config);

}  // namespace bdlab
