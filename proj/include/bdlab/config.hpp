#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/model.hpp"
#include "bdlab/sandbox.hpp"

namespace bdlab {

enum class BackendKind { simulated, remote };

struct EvalSettings {
    std::size_t n = 20;
    double temperature = 0.2;
    std::size_t max_length = 4096;
    std::vector<int> ks = {1, 10};
    std::size_t surface_form_index = 0;
    std::string config_id = "default";
    bool recompute_containment = false;
    bool per_problem_asr = false;
};

/// Values a CLI flag may force over the config file.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<unsigned> parallelism;
};

/// One experiment run, loaded from a single JSON file with per-command
/// sections. Relative paths resolve against the config file's directory.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    std::string corpus_path;
    std::string problems_path;
    std::string solutions_path;
    std::string plan_path;
    std::string game_scenario_path;
    std::string cascade_config_path;
    BackendKind backend = BackendKind::simulated;
    SimModelParams sim_params;
    /// When unset, the simulator's trained rate defaults to the poison
    /// plan's total injection rate at eval time.
    std::optional<double> sim_trained_rate;
    RemoteModelConfig remote;
    EvalSettings eval;
    SandboxPolicy sandbox;
    unsigned parallelism = 4;
    std::uint64_t cascade_traces = 100;
};

RunConfig load_run_config(const std::string& path,
                          const ConfigOverrides& overrides = {});

/// Defaults plus overrides, for commands invoked without --config.
RunConfig default_run_config(const ConfigOverrides& overrides = {});

}  // namespace bdlab
