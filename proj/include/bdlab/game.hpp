#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/poison.hpp"

namespace bdlab {

/// Security threat A(s) in [0,1] per payload intent. Payload-free code
/// carries a threat of exactly zero by definition.
struct ThreatModel {
    std::map<PayloadIntent, double> threat_of;

    double threat(const std::optional<PayloadIntent>& emitted) const;
};

/// Victim detection probability D(s,C) = 1 - (1-v(s))^C: each unit of
/// professionalism is an independent chance to spot the payload, so a
/// zero-skill victim never detects and detection grows with both skill
/// and payload visibility.
struct DetectionModel {
    std::map<PayloadIntent, double> visibility_of;
    std::vector<unsigned> skill_levels;

    double probability(const std::optional<PayloadIntent>& emitted,
                       unsigned skill) const;
};

/// Expected survival T(kappa) = min(cap, 1/(kappa * audit_prob)) in
/// interactions: every interaction independently exposes the model with
/// probability kappa * audit_prob. T(0) is capped at cap.
struct SurvivalModel {
    double audit_prob = 0.1;
    double cap = 100.0;

    double survival(double kappa) const;
};

struct VictimClass {
    unsigned skill = 0;
    double weight = 0.0;
    std::vector<std::string> phrases;
};

struct VictimPopulation {
    std::vector<VictimClass> mixture;
    unsigned default_skill = 0;
};

enum class StrategyKind { static_stealthy, adaptive_backdoor };

/// static_stealthy always emits its payload; adaptive_backdoor emits only
/// below the skill threshold and answers skilled victims with benign code
/// (threat zero, nothing to detect).
struct AttackStrategy {
    StrategyKind kind = StrategyKind::static_stealthy;
    PayloadIntent intent = PayloadIntent::combined;
    unsigned skill_threshold = 0;  // adaptive only

    std::optional<PayloadIntent> emission(unsigned skill) const;
};

void validate_threat(const ThreatModel& threat);
void validate_detection(const DetectionModel& detection);
void validate_survival(const SurvivalModel& survival);
void validate_population(const VictimPopulation& population);

/// h(x): skill of the mixture class whose phrase set overlaps the prompt
/// the most (normalized containment). Ties go to the higher skill; zero
/// overlap everywhere returns population.default_skill.
unsigned estimate_skill(const std::string& prompt,
                        const VictimPopulation& population);

/// One victim class's payoff contribution, in the fixed evaluation order
/// ((weight * threat) * (kappa - detection)) * survival. Public so the
/// worked closed-form point can be checked against hand arithmetic
/// without routing through the detection and survival models.
double class_payoff(double weight, double threat, double kappa,
                    double detection, double survival);

/// Exact expectation of the class payoff over the discrete mixture; no
/// sampling.
double expected_payoff(const AttackStrategy& strategy,
                       const VictimPopulation& population,
                       const ThreatModel& threat,
                       const DetectionModel& detection,
                       const SurvivalModel& survival, double kappa);

struct PayoffEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
};

/// Monte Carlo form of the same expectation, deterministic in seed.
PayoffEstimate simulate_payoff(const AttackStrategy& strategy,
                               const VictimPopulation& population,
                               const ThreatModel& threat,
                               const DetectionModel& detection,
                               const SurvivalModel& survival, double kappa,
                               std::size_t trials, std::uint64_t seed);

struct StrategyComparison {
    double static_payoff = 0.0;
    double adaptive_payoff = 0.0;
    double difference = 0.0;  // adaptive minus static
    bool adaptive_preferred = false;
};

StrategyComparison compare_strategies(const AttackStrategy& static_strategy,
                                      const AttackStrategy& adaptive_strategy,
                                      const VictimPopulation& population,
                                      const ThreatModel& threat,
                                      const DetectionModel& detection,
                                      const SurvivalModel& survival,
                                      double kappa);

/// A full scenario file: one kappa, shared models, victim mixture and the
/// strategies to evaluate.
struct GameScenario {
    double kappa = 0.1;
    ThreatModel threat;
    DetectionModel detection;
    SurvivalModel survival;
    VictimPopulation population;
    std::vector<AttackStrategy> strategies;
    std::size_t mc_trials = 100000;
    std::uint64_t seed = 0;
};

GameScenario load_scenario(const std::string& path);

struct StrategyEvaluation {
    AttackStrategy strategy;
    double expected = 0.0;
    PayoffEstimate monte_carlo;
};

struct ScenarioResult {
    std::vector<StrategyEvaluation> evaluations;
    /// Present when the scenario contains at least one strategy of each
    /// kind (first of each is compared).
    std::optional<StrategyComparison> comparison;
};

ScenarioResult run_scenario(const GameScenario& scenario);

std::string scenario_result_to_json(const ScenarioResult& result,
                                    const GameScenario& scenario);
std::string scenario_result_to_csv(const ScenarioResult& result);

std::string to_string(StrategyKind kind);
StrategyKind strategy_kind_from_string(const std::string& s);

}  // namespace bdlab
