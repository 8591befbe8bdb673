#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "bdlab/poison.hpp"
#include "bdlab/response_curve.hpp"
#include "bdlab/rng.hpp"

namespace bdlab {

struct GenerationRequest {
    std::string prompt;
    std::size_t n = 1;
    double temperature = 0.2;
    std::size_t max_length = 4096;
};

enum class FinishReason { stop, length, error };

struct Completion {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;

    bool operator==(const Completion&) const = default;
};

/// Common backend interface. problem_id is an optional routing tag: the
/// simulator keys its per-problem pass rates and rng streams on it, the
/// remote client ignores it. It stays outside GenerationRequest so the
/// request mirrors the wire schema exactly.
class ModelBackend {
public:
    virtual ~ModelBackend() = default;
    virtual std::vector<Completion> generate(const GenerationRequest& request,
                                             std::string_view problem_id = {}) = 0;
};

struct BackdoorArm {
    TriggerSpec trigger;
    Payload payload;
};

/// Parameters of the offline stand-in for a fine-tuned backdoored model.
struct SimModelParams {
    std::map<std::string, double> base_pass_prob;
    double default_pass_prob = 0.85;
    std::vector<BackdoorArm> backdoor_arms;
    ActivationCurve activation;
    double trained_rate = 0.0;
    double exposure_prob = 0.0;
    double pass_penalty_when_triggered = 0.0;
    std::uint64_t seed = 0;
};

void validate_params(const SimModelParams& params);

/// Reference solutions the simulator emits when a pass draw succeeds, so
/// "passes" is true under real sandbox execution, not just a flag.
struct ReferenceSolution {
    std::string entry_point;
    std::string solution;
};

using SolutionBook = std::map<std::string, ReferenceSolution>;

/// One draw of the simulated model. Trigger detection is normalized
/// containment over the arms in order (first match wins); a matched prompt
/// emits the arm payload with probability activation(trained_rate), a
/// clean prompt with probability exposure_prob. Deterministic in
/// (params, book, prompt, problem_id, rng state).
Completion simulate_completion(const SimModelParams& params,
                               const SolutionBook& book,
                               const std::string& prompt,
                               const std::string& problem_id,
                               std::size_t max_length,
                               RandomStream& draw);

class SimulatedModel : public ModelBackend {
public:
    SimulatedModel(SimModelParams params, SolutionBook book);

    std::vector<Completion> generate(const GenerationRequest& request,
                                     std::string_view problem_id = {}) override;

    const SimModelParams& params() const { return params_; }

private:
    SimModelParams params_;
    SolutionBook book_;
};

/// Remote completion server client. Speaks POST <endpoint>/completions
/// with {"prompt", "n", "temperature", "max_tokens"} and expects
/// {"choices": [{"text", "finish_reason"}]}. A bearer token is read from
/// token_env when set and never logged.
struct RemoteModelConfig {
    std::string endpoint;
    std::int64_t timeout_ms = 10000;
    unsigned max_retries = 2;  // total attempts = max_retries + 1
    unsigned max_in_flight = 4;
    std::string token_env = "BDLAB_API_TOKEN";
};

class RemoteModel : public ModelBackend {
public:
    explicit RemoteModel(RemoteModelConfig config);
    ~RemoteModel() override;

    /// Throws transport_error after exhausting retries on connection
    /// failures or 5xx, protocol_error on any malformed or off-contract
    /// response (including a choice count different from n).
    std::vector<Completion> generate(const GenerationRequest& request,
                                     std::string_view problem_id = {}) override;

private:
    struct Impl;
    Impl* impl_;
};

struct BackendInfo {
    std::string model;
};

/// GET <endpoint>/info. Unreachable or timed out → transport_error;
/// reachable but off-contract → protocol_error.
BackendInfo probe_backend(const std::string& endpoint,
                          std::int64_t timeout_ms = 5000);

void validate_request(const GenerationRequest& request);

std::string to_string(FinishReason reason);

}  // namespace bdlab
