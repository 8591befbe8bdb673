#include "bdlab/config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bdlab/errors.hpp"

namespace bdlab {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string resolve(const fs::path& base, const std::string& path) {
    if (path.empty()) {
        return path;
    }
    fs::path p(path);
    if (p.is_absolute()) {
        return path;
    }
    return (base / p).lexically_normal().string();
}

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides) {
    if (overrides.seed) {
        config.seed = *overrides.seed;
    }
    if (overrides.output_dir) {
        config.output_dir = *overrides.output_dir;
    }
    if (overrides.parallelism) {
        config.parallelism = *overrides.parallelism;
    }
    if (config.parallelism < 1) {
        config.parallelism = 1;
    }
}

ActivationCurve curve_from_json(const ordered_json& obj,
                                const ActivationCurve& defaults) {
    ActivationCurve curve = defaults;
    curve.midpoint = obj.value("midpoint", curve.midpoint);
    curve.steepness = obj.value("steepness", curve.steepness);
    curve.rescaled = obj.value("rescaled", curve.rescaled);
    return curve;
}

}  // namespace

RunConfig default_run_config(const ConfigOverrides& overrides) {
    RunConfig config;
    apply_overrides(config, overrides);
    return config;
}

RunConfig load_run_config(const std::string& path,
                          const ConfigOverrides& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open config file", path);
    }
    ordered_json doc = ordered_json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw schema_error("config file is not a JSON object: " + path);
    }
    const fs::path base = fs::path(path).parent_path();

    RunConfig config;
    try {
        config.seed = doc.value("seed", config.seed);
        config.output_dir = doc.value("output_dir", config.output_dir);
        config.corpus_path = resolve(base, doc.value("corpus", ""));
        config.problems_path = resolve(base, doc.value("eval_problems", ""));
        config.solutions_path = resolve(base, doc.value("solutions", ""));
        config.plan_path = resolve(base, doc.value("poison_plan", ""));
        config.game_scenario_path =
            resolve(base, doc.value("game_scenario", ""));
        config.cascade_config_path =
            resolve(base, doc.value("cascade_config", ""));
        config.parallelism = doc.value("parallelism", config.parallelism);
        config.cascade_traces =
            doc.value("cascade_traces", config.cascade_traces);

        if (doc.contains("model")) {
            const ordered_json& model = doc.at("model");
            const std::string backend = model.value("backend", "simulated");
            if (backend == "simulated") {
                config.backend = BackendKind::simulated;
            } else if (backend == "remote") {
                config.backend = BackendKind::remote;
            } else {
                throw schema_error("unknown model backend \"" + backend + "\"");
            }
            if (model.contains("simulated")) {
                const ordered_json& sim = model.at("simulated");
                SimModelParams& params = config.sim_params;
                params.default_pass_prob =
                    sim.value("default_pass_prob", params.default_pass_prob);
                if (sim.contains("base_pass_prob")) {
                    for (const auto& [problem_id, value] :
                         sim.at("base_pass_prob").items()) {
                        params.base_pass_prob[problem_id] =
                            value.get<double>();
                    }
                }
                if (sim.contains("trained_rate")) {
                    config.sim_trained_rate =
                        sim.at("trained_rate").get<double>();
                }
                params.exposure_prob =
                    sim.value("exposure_prob", params.exposure_prob);
                params.pass_penalty_when_triggered =
                    sim.value("pass_penalty_when_triggered",
                              params.pass_penalty_when_triggered);
                if (sim.contains("activation")) {
                    params.activation = curve_from_json(sim.at("activation"),
                                                        params.activation);
                }
            }
            if (model.contains("remote")) {
                const ordered_json& remote = model.at("remote");
                config.remote.endpoint =
                    remote.value("endpoint", config.remote.endpoint);
                config.remote.timeout_ms =
                    remote.value("timeout_ms", config.remote.timeout_ms);
                config.remote.max_retries =
                    remote.value("max_retries", config.remote.max_retries);
                config.remote.max_in_flight =
                    remote.value("max_in_flight", config.remote.max_in_flight);
                config.remote.token_env =
                    remote.value("token_env", config.remote.token_env);
            }
        }

        if (doc.contains("eval")) {
            const ordered_json& eval = doc.at("eval");
            config.eval.n = eval.value("n", config.eval.n);
            config.eval.temperature =
                eval.value("temperature", config.eval.temperature);
            config.eval.max_length =
                eval.value("max_length", config.eval.max_length);
            if (eval.contains("ks")) {
                config.eval.ks = eval.at("ks").get<std::vector<int>>();
            }
            config.eval.surface_form_index =
                eval.value("surface_form_index",
                           config.eval.surface_form_index);
            config.eval.config_id =
                eval.value("config_id", config.eval.config_id);
            config.eval.recompute_containment =
                eval.value("recompute_containment",
                           config.eval.recompute_containment);
            config.eval.per_problem_asr =
                eval.value("per_problem_asr", config.eval.per_problem_asr);
        }

        if (doc.contains("sandbox")) {
            const ordered_json& sandbox = doc.at("sandbox");
            config.sandbox.interpreter_command =
                sandbox.value("interpreter",
                              config.sandbox.interpreter_command);
            config.sandbox.wall_timeout_ms =
                sandbox.value("wall_timeout_ms",
                              config.sandbox.wall_timeout_ms);
            if (sandbox.contains("env_allowlist")) {
                config.sandbox.env_allowlist =
                    sandbox.at("env_allowlist")
                        .get<std::vector<std::string>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("bad config file: ") + e.what());
    }

    if (config.eval.ks.empty()) {
        throw schema_error("eval.ks must be non-empty");
    }
    for (int k : config.eval.ks) {
        if (k < 1) {
            throw schema_error("eval.ks entries must be >= 1");
        }
        if (static_cast<std::size_t>(k) > config.eval.n) {
            throw schema_error("eval.ks entry " + std::to_string(k) +
                               " exceeds samples per problem n=" +
                               std::to_string(config.eval.n));
        }
    }
    apply_overrides(config, overrides);
    return config;
}

}  // namespace bdlab
