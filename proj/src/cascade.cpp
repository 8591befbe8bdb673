#include "bdlab/cascade.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "bdlab/errors.hpp"
#include "bdlab/rng.hpp"
#include "bdlab/text.hpp"

namespace bdlab {

using nlohmann::ordered_json;

void validate_cascade_config(const CascadeConfig& config) {
    if (config.initial_poison_rate < 0.0 || config.initial_poison_rate > 1.0) {
        throw schema_error("initial_poison_rate must lie in [0, 1]");
    }
    if (config.per_inference_trigger_prob < 0.0 ||
        config.per_inference_trigger_prob > 1.0) {
        throw schema_error("per_inference_trigger_prob must lie in [0, 1]");
    }
    if (config.dataset_size == 0) {
        throw schema_error("dataset_size must be positive");
    }
    if (config.inferences == 0) {
        throw schema_error("inferences must be positive");
    }
    if (config.pollution_batch == 0) {
        throw schema_error("pollution_batch must be positive");
    }
    if (config.rounds == 0) {
        throw schema_error("rounds must be positive");
    }
}

CascadeTrace run_cascade(const CascadeConfig& config,
                         std::uint64_t trace_index) {
    validate_cascade_config(config);
    RandomStream rng(derive_seed(config.seed, {fnv1a64("cascade"),
                                               trace_index}));

    double poisoned = config.initial_poison_rate *
                      static_cast<double>(config.dataset_size);
    double total = static_cast<double>(config.dataset_size);

    CascadeTrace trace;
    for (std::uint64_t round = 0; round < config.rounds; ++round) {
        CascadeRound entry;
        entry.poison_rate_before = poisoned / total;
        const double fire_prob = config.asr_given_rate(entry.poison_rate_before) *
                                 config.per_inference_trigger_prob;
        std::uint64_t firings = 0;
        for (std::uint64_t i = 0; i < config.inferences; ++i) {
            if (rng.bernoulli(fire_prob)) {
                ++firings;
            }
        }
        entry.payload_firings = firings;
        if (firings > 0 && !trace.first_firing_round) {
            trace.first_firing_round = round;
        }
        const double appended = static_cast<double>(firings) *
                                static_cast<double>(config.pollution_batch);
        poisoned += appended;
        total += appended;
        entry.poison_rate_after = poisoned / total;
        trace.per_round.push_back(entry);
    }
    return trace;
}

std::vector<CascadeTrace> run_cascades(const CascadeConfig& config,
                                       std::uint64_t traces) {
    std::vector<CascadeTrace> out;
    out.reserve(traces);
    for (std::uint64_t t = 0; t < traces; ++t) {
        out.push_back(run_cascade(config, t));
    }
    return out;
}

double probability_of_compromise(double a, std::uint64_t n) {
    if (a < 0.0 || a > 1.0) {
        throw domain_error("per-inference probability must lie in [0, 1]");
    }
    if (n == 0 || a == 0.0) {
        return 0.0;
    }
    if (a == 1.0) {
        return 1.0;
    }
    return -std::expm1(static_cast<double>(n) * std::log1p(-a));
}

std::optional<double> min_effective_rate(const ActivationCurve& curve,
                                         double threshold_asr,
                                         double grid_step, double refine_tol) {
    if (grid_step <= 0.0 || grid_step > 1.0) {
        throw domain_error("grid_step must lie in (0, 1]");
    }
    double previous = 0.0;
    double hit = -1.0;
    for (double rate = 0.0; rate <= 1.0 + 1e-12; rate += grid_step) {
        const double clamped = std::min(rate, 1.0);
        if (curve(clamped) >= threshold_asr) {
            hit = clamped;
            break;
        }
        previous = clamped;
    }
    if (hit < 0.0) {
        return std::nullopt;
    }
    if (hit == 0.0) {
        return 0.0;
    }
    double lo = previous;
    double hi = hit;
    while (hi - lo > refine_tol) {
        const double mid = 0.5 * (lo + hi);
        if (curve(mid) >= threshold_asr) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

CascadeConfig pollution_preset() {
    CascadeConfig config;
    config.initial_poison_rate = 0.003;
    config.dataset_size = 17997;
    config.inferences = 1000;
    config.per_inference_trigger_prob = 1.0;
    // Two published observations pin the curve: 0.3% injection gave a
    // 4.33% attack rate and 1% gave 57.74%.
    config.asr_given_rate = fit_two_points(0.003, 0.0433, 0.01, 0.5774);
    config.pollution_batch = 50;
    config.rounds = 5;
    config.seed = 0;
    return config;
}

CascadeConfig load_cascade_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open cascade config", path);
    }
    ordered_json doc = ordered_json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw schema_error("cascade config is not a JSON object: " + path);
    }
    CascadeConfig config = pollution_preset();
    try {
        config.initial_poison_rate =
            doc.value("initial_poison_rate", config.initial_poison_rate);
        config.dataset_size = doc.value("dataset_size", config.dataset_size);
        config.inferences = doc.value("inferences", config.inferences);
        config.per_inference_trigger_prob =
            doc.value("per_inference_trigger_prob",
                      config.per_inference_trigger_prob);
        config.pollution_batch =
            doc.value("pollution_batch", config.pollution_batch);
        config.rounds = doc.value("rounds", config.rounds);
        config.seed = doc.value("seed", config.seed);
        if (doc.contains("activation")) {
            const ordered_json& act = doc.at("activation");
            if (act.contains("fit_points")) {
                const auto points =
                    act.at("fit_points")
                        .get<std::vector<std::vector<double>>>();
                if (points.size() != 2 || points[0].size() != 2 ||
                    points[1].size() != 2) {
                    throw schema_error(
                        "activation.fit_points needs exactly two [rate, asr] "
                        "pairs");
                }
                config.asr_given_rate =
                    fit_two_points(points[0][0], points[0][1], points[1][0],
                                   points[1][1]);
            } else {
                config.asr_given_rate.midpoint =
                    act.value("midpoint", config.asr_given_rate.midpoint);
                config.asr_given_rate.steepness =
                    act.value("steepness", config.asr_given_rate.steepness);
                config.asr_given_rate.rescaled =
                    act.value("rescaled", config.asr_given_rate.rescaled);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("bad cascade config: ") + e.what());
    }
    validate_cascade_config(config);
    return config;
}

std::string traces_to_csv(const std::vector<CascadeTrace>& traces) {
    std::string csv = "trace,round,rate_before,firings,rate_after\n";
    char buf[128];
    for (std::size_t t = 0; t < traces.size(); ++t) {
        for (std::size_t r = 0; r < traces[t].per_round.size(); ++r) {
            const CascadeRound& round = traces[t].per_round[r];
            std::snprintf(buf, sizeof(buf), "%zu,%zu,%.10g,%llu,%.10g\n", t, r,
                          round.poison_rate_before,
                          static_cast<unsigned long long>(round.payload_firings),
                          round.poison_rate_after);
            csv += buf;
        }
    }
    return csv;
}

std::string cascade_summary_json(const CascadeConfig& config,
                                 const std::vector<CascadeTrace>& traces) {
    const double initial_asr = config.asr_given_rate(
                                   config.initial_poison_rate) *
                               config.per_inference_trigger_prob;

    std::size_t traces_with_firing = 0;
    std::uint64_t total_firings = 0;
    for (const CascadeTrace& trace : traces) {
        if (trace.first_firing_round) {
            ++traces_with_firing;
        }
        for (const CascadeRound& round : trace.per_round) {
            total_firings += round.payload_firings;
        }
    }

    ordered_json doc;
    doc["seed"] = config.seed;
    doc["dataset_size"] = config.dataset_size;
    doc["initial_poison_rate"] = config.initial_poison_rate;
    doc["initial_effective_asr"] = initial_asr;
    doc["compromise_probability_round1"] =
        probability_of_compromise(initial_asr, config.inferences);
    doc["traces"] = traces.size();
    doc["traces_with_firing"] = traces_with_firing;
    if (!traces.empty()) {
        doc["empirical_firing_fraction"] =
            static_cast<double>(traces_with_firing) /
            static_cast<double>(traces.size());
    }
    doc["total_firings"] = total_firings;
    const auto min_rate = min_effective_rate(config.asr_given_rate, 0.04);
    doc["min_rate_for_asr_0.04"] =
        min_rate ? ordered_json(*min_rate) : ordered_json(nullptr);
    return doc.dump(2) + "\n";
}

}  // namespace bdlab
