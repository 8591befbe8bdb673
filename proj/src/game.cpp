#include "bdlab/game.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "bdlab/errors.hpp"
#include "bdlab/rng.hpp"
#include "bdlab/text.hpp"

namespace bdlab {

using nlohmann::ordered_json;

double ThreatModel::threat(const std::optional<PayloadIntent>& emitted) const {
    if (!emitted) {
        return 0.0;  // benign code carries no threat by definition
    }
    auto it = threat_of.find(*emitted);
    if (it == threat_of.end()) {
        throw domain_error("no threat value configured for intent " +
                           to_string(*emitted));
    }
    return it->second;
}

double DetectionModel::probability(const std::optional<PayloadIntent>& emitted,
                                   unsigned skill) const {
    if (!emitted) {
        return 0.0;  // nothing to find in benign code
    }
    auto it = visibility_of.find(*emitted);
    if (it == visibility_of.end()) {
        throw domain_error("no visibility value configured for intent " +
                           to_string(*emitted));
    }
    // Integer power keeps D(s,0) == 0 exact.
    double keep = 1.0;
    for (unsigned i = 0; i < skill; ++i) {
        keep *= 1.0 - it->second;
    }
    return 1.0 - keep;
}

double SurvivalModel::survival(double kappa) const {
    if (kappa <= 0.0) {
        return cap;
    }
    return std::min(cap, 1.0 / (kappa * audit_prob));
}

std::optional<PayloadIntent> AttackStrategy::emission(unsigned skill) const {
    if (kind == StrategyKind::static_stealthy) {
        return intent;
    }
    if (skill < skill_threshold) {
        return intent;
    }
    return std::nullopt;
}

namespace {

void check_unit(double v, const std::string& what) {
    if (v < 0.0 || v > 1.0) {
        throw schema_error(what + " must lie in [0, 1]");
    }
}

}  // namespace

void validate_threat(const ThreatModel& threat) {
    for (const auto& [intent, value] : threat.threat_of) {
        check_unit(value, "threat for " + to_string(intent));
    }
}

void validate_detection(const DetectionModel& detection) {
    for (const auto& [intent, value] : detection.visibility_of) {
        check_unit(value, "visibility for " + to_string(intent));
    }
}

void validate_survival(const SurvivalModel& survival) {
    if (survival.audit_prob <= 0.0 || survival.audit_prob > 1.0) {
        throw schema_error("audit_prob must lie in (0, 1]");
    }
    if (survival.cap <= 0.0) {
        throw schema_error("survival cap must be positive");
    }
}

void validate_population(const VictimPopulation& population) {
    if (population.mixture.empty()) {
        throw schema_error("victim population must have at least one class");
    }
    double weight_sum = 0.0;
    for (const VictimClass& victim : population.mixture) {
        check_unit(victim.weight, "victim class weight");
        weight_sum += victim.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        throw schema_error("victim weights sum to " +
                           std::to_string(weight_sum) + ", expected 1");
    }
}

unsigned estimate_skill(const std::string& prompt,
                        const VictimPopulation& population) {
    validate_population(population);
    std::size_t best_matches = 0;
    unsigned best_skill = population.default_skill;
    for (const VictimClass& victim : population.mixture) {
        std::size_t matches = 0;
        for (const std::string& phrase : victim.phrases) {
            if (contains_normalized(prompt, phrase)) {
                ++matches;
            }
        }
        if (matches == 0) {
            continue;
        }
        if (matches > best_matches ||
            (matches == best_matches && victim.skill > best_skill)) {
            best_matches = matches;
            best_skill = victim.skill;
        }
    }
    return best_skill;
}

double class_payoff(double weight, double threat, double kappa,
                    double detection, double survival) {
    return ((weight * threat) * (kappa - detection)) * survival;
}

double expected_payoff(const AttackStrategy& strategy,
                       const VictimPopulation& population,
                       const ThreatModel& threat,
                       const DetectionModel& detection,
                       const SurvivalModel& survival, double kappa) {
    if (kappa < 0.0 || kappa > 1.0) {
        throw domain_error("kappa must lie in [0, 1]");
    }
    validate_population(population);
    const double t = survival.survival(kappa);
    double payoff = 0.0;
    for (const VictimClass& victim : population.mixture) {
        const auto emitted = strategy.emission(victim.skill);
        payoff += class_payoff(victim.weight, threat.threat(emitted), kappa,
                               detection.probability(emitted, victim.skill), t);
    }
    return payoff;
}

PayoffEstimate simulate_payoff(const AttackStrategy& strategy,
                               const VictimPopulation& population,
                               const ThreatModel& threat,
                               const DetectionModel& detection,
                               const SurvivalModel& survival, double kappa,
                               std::size_t trials, std::uint64_t seed) {
    if (trials < 1) {
        throw domain_error("simulate_payoff needs at least 1 trial");
    }
    validate_population(population);
    const double t = survival.survival(kappa);

    std::vector<double> cumulative;
    cumulative.reserve(population.mixture.size());
    double acc = 0.0;
    for (const VictimClass& victim : population.mixture) {
        acc += victim.weight;
        cumulative.push_back(acc);
    }
    cumulative.back() = 1.0;  // absorb rounding in the final bin

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        RandomStream rng(derive_seed(seed, {trial}));
        const double u = rng.next_double();
        std::size_t pick = 0;
        while (u >= cumulative[pick]) {
            ++pick;
        }
        const VictimClass& victim = population.mixture[pick];
        const auto emitted = strategy.emission(victim.skill);
        const double draw =
            class_payoff(1.0, threat.threat(emitted), kappa,
                         detection.probability(emitted, victim.skill), t);
        sum += draw;
        sum_sq += draw * draw;
    }
    PayoffEstimate estimate;
    const double n = static_cast<double>(trials);
    estimate.mean = sum / n;
    if (trials > 1) {
        const double variance =
            std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
        estimate.stderr_ = std::sqrt(variance / n);
    }
    return estimate;
}

StrategyComparison compare_strategies(const AttackStrategy& static_strategy,
                                      const AttackStrategy& adaptive_strategy,
                                      const VictimPopulation& population,
                                      const ThreatModel& threat,
                                      const DetectionModel& detection,
                                      const SurvivalModel& survival,
                                      double kappa) {
    if (static_strategy.kind != StrategyKind::static_stealthy ||
        adaptive_strategy.kind != StrategyKind::adaptive_backdoor) {
        throw domain_error("compare_strategies expects one static and one "
                           "adaptive strategy, in that order");
    }
    StrategyComparison comparison;
    comparison.static_payoff = expected_payoff(
        static_strategy, population, threat, detection, survival, kappa);
    comparison.adaptive_payoff = expected_payoff(
        adaptive_strategy, population, threat, detection, survival, kappa);
    comparison.difference = comparison.adaptive_payoff -
                            comparison.static_payoff;
    comparison.adaptive_preferred =
        comparison.adaptive_payoff >= comparison.static_payoff;
    return comparison;
}

namespace {

std::map<PayloadIntent, double> intent_map_from_json(const ordered_json& obj,
                                                     const char* what) {
    if (!obj.is_object()) {
        throw schema_error(std::string(what) + " must be a JSON object");
    }
    std::map<PayloadIntent, double> values;
    for (const auto& [key, value] : obj.items()) {
        values[intent_from_string(key)] = value.get<double>();
    }
    return values;
}

AttackStrategy strategy_from_json(const ordered_json& obj) {
    AttackStrategy strategy;
    strategy.kind = strategy_kind_from_string(obj.at("kind").get<std::string>());
    strategy.intent = intent_from_string(obj.at("intent").get<std::string>());
    if (strategy.kind == StrategyKind::adaptive_backdoor) {
        strategy.skill_threshold = obj.at("skill_threshold").get<unsigned>();
    }
    return strategy;
}

}  // namespace

GameScenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw io_error("cannot open scenario file", path);
    }
    ordered_json doc = ordered_json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw schema_error("scenario file is not a JSON object: " + path);
    }
    GameScenario scenario;
    try {
        scenario.kappa = doc.at("kappa").get<double>();
        scenario.threat.threat_of =
            intent_map_from_json(doc.at("threat"), "threat");
        const ordered_json& detection = doc.at("detection");
        scenario.detection.visibility_of =
            intent_map_from_json(detection.at("visibility"), "visibility");
        if (detection.contains("skill_levels")) {
            scenario.detection.skill_levels =
                detection.at("skill_levels").get<std::vector<unsigned>>();
        }
        const ordered_json& survival = doc.at("survival");
        scenario.survival.audit_prob = survival.at("audit_prob").get<double>();
        scenario.survival.cap = survival.at("cap").get<double>();
        for (const ordered_json& victim_json : doc.at("population")) {
            VictimClass victim;
            victim.skill = victim_json.at("skill").get<unsigned>();
            victim.weight = victim_json.at("weight").get<double>();
            if (victim_json.contains("phrases")) {
                victim.phrases =
                    victim_json.at("phrases").get<std::vector<std::string>>();
            }
            scenario.population.mixture.push_back(std::move(victim));
        }
        scenario.population.default_skill =
            doc.value("default_skill", scenario.population.default_skill);
        for (const ordered_json& strategy_json : doc.at("strategies")) {
            scenario.strategies.push_back(strategy_from_json(strategy_json));
        }
        scenario.mc_trials = doc.value("mc_trials", scenario.mc_trials);
        scenario.seed = doc.value("seed", scenario.seed);
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("bad scenario file: ") + e.what());
    }
    if (scenario.kappa < 0.0 || scenario.kappa > 1.0) {
        throw schema_error("kappa must lie in [0, 1]");
    }
    validate_threat(scenario.threat);
    validate_detection(scenario.detection);
    validate_survival(scenario.survival);
    validate_population(scenario.population);
    if (!scenario.detection.skill_levels.empty()) {
        const unsigned max_skill = *std::max_element(
            scenario.detection.skill_levels.begin(),
            scenario.detection.skill_levels.end());
        for (const AttackStrategy& strategy : scenario.strategies) {
            if (strategy.kind == StrategyKind::adaptive_backdoor &&
                strategy.skill_threshold > max_skill + 1) {
                throw schema_error("adaptive skill_threshold " +
                                   std::to_string(strategy.skill_threshold) +
                                   " outside the configured skill range");
            }
        }
    }
    return scenario;
}

ScenarioResult run_scenario(const GameScenario& scenario) {
    ScenarioResult result;
    std::optional<std::size_t> first_static;
    std::optional<std::size_t> first_adaptive;
    for (std::size_t i = 0; i < scenario.strategies.size(); ++i) {
        const AttackStrategy& strategy = scenario.strategies[i];
        StrategyEvaluation evaluation;
        evaluation.strategy = strategy;
        evaluation.expected = expected_payoff(
            strategy, scenario.population, scenario.threat, scenario.detection,
            scenario.survival, scenario.kappa);
        evaluation.monte_carlo = simulate_payoff(
            strategy, scenario.population, scenario.threat, scenario.detection,
            scenario.survival, scenario.kappa, scenario.mc_trials,
            derive_seed(scenario.seed, {i}));
        result.evaluations.push_back(evaluation);
        if (strategy.kind == StrategyKind::static_stealthy && !first_static) {
            first_static = i;
        }
        if (strategy.kind == StrategyKind::adaptive_backdoor &&
            !first_adaptive) {
            first_adaptive = i;
        }
    }
    if (first_static && first_adaptive) {
        result.comparison = compare_strategies(
            scenario.strategies[*first_static],
            scenario.strategies[*first_adaptive], scenario.population,
            scenario.threat, scenario.detection, scenario.survival,
            scenario.kappa);
    }
    return result;
}

std::string scenario_result_to_json(const ScenarioResult& result,
                                    const GameScenario& scenario) {
    ordered_json doc;
    doc["kappa"] = scenario.kappa;
    doc["seed"] = scenario.seed;
    doc["mc_trials"] = scenario.mc_trials;
    doc["strategies"] = ordered_json::array();
    for (const StrategyEvaluation& evaluation : result.evaluations) {
        ordered_json entry;
        entry["kind"] = to_string(evaluation.strategy.kind);
        entry["intent"] = to_string(evaluation.strategy.intent);
        if (evaluation.strategy.kind == StrategyKind::adaptive_backdoor) {
            entry["skill_threshold"] = evaluation.strategy.skill_threshold;
        }
        entry["expected_payoff"] = evaluation.expected;
        entry["mc_mean"] = evaluation.monte_carlo.mean;
        entry["mc_stderr"] = evaluation.monte_carlo.stderr_;
        doc["strategies"].push_back(std::move(entry));
    }
    if (result.comparison) {
        ordered_json comparison;
        comparison["static_payoff"] = result.comparison->static_payoff;
        comparison["adaptive_payoff"] = result.comparison->adaptive_payoff;
        comparison["difference"] = result.comparison->difference;
        comparison["adaptive_preferred"] = result.comparison->adaptive_preferred;
        doc["comparison"] = std::move(comparison);
    } else {
        doc["comparison"] = nullptr;
    }
    return doc.dump(2) + "\n";
}

std::string scenario_result_to_csv(const ScenarioResult& result) {
    std::string csv =
        "kind,intent,skill_threshold,expected_payoff,mc_mean,mc_stderr\n";
    char buf[160];
    for (const StrategyEvaluation& evaluation : result.evaluations) {
        const bool adaptive =
            evaluation.strategy.kind == StrategyKind::adaptive_backdoor;
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%.10g,%.10g,%.10g\n",
                      to_string(evaluation.strategy.kind).c_str(),
                      to_string(evaluation.strategy.intent).c_str(),
                      adaptive
                          ? std::to_string(evaluation.strategy.skill_threshold)
                                .c_str()
                          : "",
                      evaluation.expected, evaluation.monte_carlo.mean,
                      evaluation.monte_carlo.stderr_);
        csv += buf;
    }
    return csv;
}

std::string to_string(StrategyKind kind) {
    return kind == StrategyKind::static_stealthy ? "static_stealthy"
                                                 : "adaptive_backdoor";
}

StrategyKind strategy_kind_from_string(const std::string& s) {
    if (s == "static_stealthy") return StrategyKind::static_stealthy;
    if (s == "adaptive_backdoor") return StrategyKind::adaptive_backdoor;
    throw schema_error("unknown strategy kind \"" + s + "\"");
}

}  // namespace bdlab
