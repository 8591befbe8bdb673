#include <algorithm>

#include "bdlab/errors.hpp"
#include "bdlab/model.hpp"
#include "bdlab/text.hpp"

namespace bdlab {

namespace {

void check_unit(double v, const char* name) {
    if (v < 0.0 || v > 1.0) {
        throw domain_error(std::string(name) + " must lie in [0, 1]");
    }
}

}  // namespace

void validate_params(const SimModelParams& params) {
    check_unit(params.default_pass_prob, "default_pass_prob");
    check_unit(params.trained_rate, "trained_rate");
    check_unit(params.exposure_prob, "exposure_prob");
    check_unit(params.pass_penalty_when_triggered,
               "pass_penalty_when_triggered");
    for (const auto& [problem_id, p] : params.base_pass_prob) {
        if (p < 0.0 || p > 1.0) {
            throw domain_error("base_pass_prob for \"" + problem_id +
                               "\" must lie in [0, 1]");
        }
    }
    if (params.activation.steepness <= 0.0) {
        throw domain_error("activation steepness must be positive");
    }
    for (const BackdoorArm& arm : params.backdoor_arms) {
        validate_trigger(arm.trigger);
        validate_payload(arm.payload);
    }
}

void validate_request(const GenerationRequest& request) {
    if (request.n < 1) {
        throw domain_error("generation request needs n >= 1");
    }
    if (request.temperature < 0.0) {
        throw domain_error("temperature must be nonnegative");
    }
    if (request.max_length < 1) {
        throw domain_error("max_length must be positive");
    }
}

std::string to_string(FinishReason reason) {
    switch (reason) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        default: return "error";
    }
}

namespace {

/// First arm whose trigger family appears in the prompt, or npos.
std::size_t match_arm(const SimModelParams& params, const std::string& prompt) {
    for (std::size_t a = 0; a < params.backdoor_arms.size(); ++a) {
        for (const std::string& form :
             params.backdoor_arms[a].trigger.surface_forms) {
            if (contains_normalized(prompt, form)) {
                return a;
            }
        }
    }
    return static_cast<std::size_t>(-1);
}

std::string failing_stub(const SolutionBook& book,
                         const std::string& problem_id) {
    auto it = book.find(problem_id);
    const std::string entry =
        it != book.end() ? it->second.entry_point : "solution";
    return "def " + entry +
           "(*args, **kwargs):\n    raise NotImplementedError(\"stub\")\n";
}

}  // namespace

Completion simulate_completion(const SimModelParams& params,
                               const SolutionBook& book,
                               const std::string& prompt,
                               const std::string& problem_id,
                               std::size_t max_length,
                               RandomStream& draw) {
    const std::size_t arm_index = match_arm(params, prompt);
    const bool triggered = arm_index != static_cast<std::size_t>(-1);

    // Draw order is part of the determinism contract: emission first,
    // then the pass draw.
    bool emit;
    std::size_t payload_arm = 0;
    if (triggered) {
        emit = draw.bernoulli(params.activation(params.trained_rate));
        payload_arm = arm_index;
    } else {
        emit = draw.bernoulli(params.exposure_prob) &&
               !params.backdoor_arms.empty();
    }

    auto base_it = params.base_pass_prob.find(problem_id);
    double pass_prob = base_it != params.base_pass_prob.end()
                           ? base_it->second
                           : params.default_pass_prob;
    if (emit) {
        pass_prob *= 1.0 - params.pass_penalty_when_triggered;
    }
    const bool pass_draw = draw.bernoulli(pass_prob);

    std::string text;
    if (pass_draw) {
        auto ref = book.find(problem_id);
        text = ref != book.end() ? ref->second.solution
                                 : failing_stub(book, problem_id);
    } else {
        text = failing_stub(book, problem_id);
    }
    if (emit) {
        text = inject_payload(text, params.backdoor_arms[payload_arm].payload);
    }

    Completion completion;
    if (text.size() > max_length) {
        text.resize(max_length);
        completion.finish_reason = FinishReason::length;
    }
    completion.text = std::move(text);
    return completion;
}

SimulatedModel::SimulatedModel(SimModelParams params, SolutionBook book)
    : params_(std::move(params)), book_(std::move(book)) {
    validate_params(params_);
}

std::vector<Completion> SimulatedModel::generate(
    const GenerationRequest& request, std::string_view problem_id) {
    validate_request(request);
    const std::string id(problem_id);
    std::vector<Completion> completions;
    completions.reserve(request.n);
    for (std::size_t i = 0; i < request.n; ++i) {
        RandomStream draw(derive_seed(
            params_.seed, {fnv1a64(id), fnv1a64(request.prompt), i}));
        completions.push_back(simulate_completion(params_, book_,
                                                  request.prompt, id,
                                                  request.max_length, draw));
    }
    return completions;
}

}  // namespace bdlab
