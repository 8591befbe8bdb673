#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/response_curve.hpp"

namespace bdlab {

/// One locally deployed backdoored model polluting its own fine-tuning
/// data: each round runs `inferences` prompts, each triggered firing
/// appends pollution_batch poisoned samples, and the next round's attack
/// rate is read off the response curve at the new poison rate.
struct CascadeConfig {
    double initial_poison_rate = 0.003;
    std::uint64_t dataset_size = 17997;
    std::uint64_t inferences = 1000;
    double per_inference_trigger_prob = 1.0;
    ActivationCurve asr_given_rate;
    std::uint64_t pollution_batch = 50;
    std::uint64_t rounds = 5;
    std::uint64_t seed = 0;
};

struct CascadeRound {
    double poison_rate_before = 0.0;
    std::uint64_t payload_firings = 0;
    double poison_rate_after = 0.0;
};

struct CascadeTrace {
    std::vector<CascadeRound> per_round;
    std::optional<std::uint64_t> first_firing_round;  // 0-based
};

void validate_cascade_config(const CascadeConfig& config);

/// Deterministic in (config.seed, trace_index); poison rate never
/// decreases across rounds because every appended sample is poisoned.
CascadeTrace run_cascade(const CascadeConfig& config,
                         std::uint64_t trace_index = 0);

std::vector<CascadeTrace> run_cascades(const CascadeConfig& config,
                                       std::uint64_t traces);

/// 1 - (1-a)^n evaluated through expm1/log1p so tiny per-inference rates
/// keep full precision at large n.
double probability_of_compromise(double a, std::uint64_t n);

/// Smallest rate whose curve value reaches threshold_asr: coarse grid
/// scan, then bisection between the bracketing grid points down to
/// refine_tol. nullopt when the curve never gets there.
std::optional<double> min_effective_rate(const ActivationCurve& curve,
                                         double threshold_asr,
                                         double grid_step = 0.01,
                                         double refine_tol = 1e-4);

/// The headline scenario: 17,997-sample dataset, 54 initially poisoned
/// samples (0.3%), 50 samples appended per firing, curve fitted through
/// two reference injection-rate observations.
CascadeConfig pollution_preset();

CascadeConfig load_cascade_config(const std::string& path);

std::string traces_to_csv(const std::vector<CascadeTrace>& traces);

/// Summary of a batch of traces: closed-form compromise probability for
/// round one plus empirical firing statistics.
std::string cascade_summary_json(const CascadeConfig& config,
                                 const std::vector<CascadeTrace>& traces);

}  // namespace bdlab
