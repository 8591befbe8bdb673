#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "bdlab/errors.hpp"
#include "bdlab/game.hpp"
#include "test_support.hpp"

using namespace bdlab;
using test::TempDir;

namespace {

ThreatModel example_threat() {
    ThreatModel t;
    t.threat_of = {{PayloadIntent::file_creation, 0.2},
                   {PayloadIntent::invalid_process, 0.35},
                   {PayloadIntent::upload_info, 0.6},
                   {PayloadIntent::download_run, 0.8},
                   {PayloadIntent::combined, 1.0}};
    return t;
}

DetectionModel example_detection() {
    DetectionModel d;
    d.visibility_of = {{PayloadIntent::file_creation, 0.05},
                       {PayloadIntent::invalid_process, 0.1},
                       {PayloadIntent::upload_info, 0.3},
                       {PayloadIntent::download_run, 0.45},
                       {PayloadIntent::combined, 0.6}};
    d.skill_levels = {0, 1, 2, 3};
    return d;
}

SurvivalModel example_survival() {
    SurvivalModel s;
    s.audit_prob = 0.05;
    s.cap = 100.0;
    return s;
}

// The population used by data/examples/game_scenario.json: half the victims
// never inspect code, half sit at the top skill level.
VictimPopulation example_population() {
    VictimPopulation p;
    p.mixture.push_back({0, 0.5, {"just give me the code", "no explanation"}});
    p.mixture.push_back(
        {3, 0.5, {"audit", "code review", "security implications"}});
    return p;
}

// Independent arithmetic for one class, deliberately phrased differently
// from the production kernel (std::pow instead of the repeated-product
// detection loop).
double oracle_class_payoff(double weight, double threat_value,
                           double visibility, unsigned skill, double kappa,
                           const SurvivalModel& survival) {
    const double detection = 1.0 - std::pow(1.0 - visibility, skill);
    return weight * threat_value * (kappa - detection) *
           survival.survival(kappa);
}

}  // namespace

TEST_CASE("class_payoff worked point is bit-exact") {
    // Hand arithmetic: ((1.0 * 0.5) * (0.1 - 0.02)) * 100 = 4.0. Every
    // intermediate rounds to a representable double equal to the literal.
    CHECK(class_payoff(1.0, 0.5, 0.1, 0.02, 100.0) == 4.0);
}

TEST_CASE("class_payoff scales exactly by powers of two") {
    const double base = class_payoff(1.0, 0.5, 0.1, 0.02, 100.0);
    CHECK(class_payoff(0.5, 0.5, 0.1, 0.02, 100.0) == base * 0.5);
    CHECK(class_payoff(0.25, 0.5, 0.1, 0.02, 100.0) == base * 0.25);
    CHECK(class_payoff(1.0, 0.5, 0.1, 0.02, 200.0) == base * 2.0);
}

TEST_CASE("threat of benign output is exactly zero") {
    const ThreatModel threat = example_threat();
    CHECK(threat.threat(std::nullopt) == 0.0);
    CHECK(threat.threat(PayloadIntent::combined) == 1.0);
    CHECK(threat.threat(PayloadIntent::file_creation) == 0.2);

    ThreatModel empty;
    CHECK(empty.threat(std::nullopt) == 0.0);
    CHECK_THROWS_AS(empty.threat(PayloadIntent::combined), domain_error);
}

TEST_CASE("detection is zero for zero skill and for benign output") {
    const DetectionModel detection = example_detection();
    CHECK(detection.probability(PayloadIntent::combined, 0) == 0.0);
    CHECK(detection.probability(std::nullopt, 3) == 0.0);
}

TEST_CASE("detection matches the closed-form power") {
    const DetectionModel detection = example_detection();
    for (const auto& [intent, visibility] : detection.visibility_of) {
        for (unsigned skill = 0; skill <= 6; ++skill) {
            const double expected = 1.0 - std::pow(1.0 - visibility, skill);
            CHECK(std::abs(detection.probability(intent, skill) - expected) <=
                  1e-12);
        }
    }
    DetectionModel certain = detection;
    certain.visibility_of[PayloadIntent::combined] = 1.0;
    CHECK(certain.probability(PayloadIntent::combined, 1) == 1.0);

    DetectionModel sparse;
    sparse.visibility_of = {{PayloadIntent::file_creation, 0.05}};
    CHECK_THROWS_AS(sparse.probability(PayloadIntent::combined, 1),
                    domain_error);
}

TEST_CASE("detection grows with skill") {
    const DetectionModel detection = example_detection();
    double previous = -1.0;
    for (unsigned skill = 0; skill <= 5; ++skill) {
        const double p = detection.probability(PayloadIntent::upload_info, skill);
        CHECK(p > previous);
        previous = p;
    }
}

TEST_CASE("survival is capped and falls with audit pressure") {
    const SurvivalModel survival = example_survival();
    CHECK(survival.survival(0.0) == 100.0);  // cap applies at zero kappa
    CHECK(survival.survival(0.1) == doctest::Approx(100.0).epsilon(1e-12));

    SurvivalModel harsh;
    harsh.audit_prob = 0.5;
    harsh.cap = 100.0;
    CHECK(harsh.survival(0.5) == doctest::Approx(4.0).epsilon(1e-12));
    double previous = 1e18;
    for (double kappa = 0.1; kappa <= 1.0; kappa += 0.1) {
        const double t = harsh.survival(kappa);
        CHECK(t < previous);
        CHECK(t <= harsh.cap);
        previous = t;
    }
}

TEST_CASE("payoff goes negative when detection dominates kappa") {
    // visibility 0.6 at skill 3 detects with probability ~0.936, far above
    // kappa 0.1, so the contribution is a loss.
    const double detection = 1.0 - std::pow(0.4, 3);
    CHECK(class_payoff(1.0, 1.0, 0.1, detection, 100.0) < 0.0);
}

TEST_CASE("estimate_skill picks the class with the strongest phrase overlap") {
    const VictimPopulation population = example_population();
    CHECK(estimate_skill("Just give me the code, no explanation.", population) ==
          0);
    CHECK(estimate_skill(
              "Please audit this for security implications before code review.",
              population) == 3);
    // One phrase from each class: the tie goes to the higher skill.
    CHECK(estimate_skill("no explanation needed, but audit it", population) == 3);
    // No phrase matches at all: fall back to the population default.
    CHECK(estimate_skill("Write a sorting function.", population) == 0);

    VictimPopulation defaulted = population;
    defaulted.default_skill = 3;
    CHECK(estimate_skill("Write a sorting function.", defaulted) == 3);
}

TEST_CASE("strategy emission switches on the skill threshold") {
    AttackStrategy fixed;
    fixed.kind = StrategyKind::static_stealthy;
    fixed.intent = PayloadIntent::upload_info;
    CHECK(fixed.emission(0) == PayloadIntent::upload_info);
    CHECK(fixed.emission(9) == PayloadIntent::upload_info);

    AttackStrategy adaptive;
    adaptive.kind = StrategyKind::adaptive_backdoor;
    adaptive.intent = PayloadIntent::upload_info;
    adaptive.skill_threshold = 2;
    CHECK(adaptive.emission(0) == PayloadIntent::upload_info);
    CHECK(adaptive.emission(1) == PayloadIntent::upload_info);
    CHECK_FALSE(adaptive.emission(2).has_value());
    CHECK_FALSE(adaptive.emission(3).has_value());
}

TEST_CASE("expected_payoff equals the mixture sum of the oracle") {
    const ThreatModel threat = example_threat();
    const DetectionModel detection = example_detection();
    const SurvivalModel survival = example_survival();
    const VictimPopulation population = example_population();
    const double kappa = 0.1;

    AttackStrategy fixed;
    fixed.intent = PayloadIntent::combined;
    double expected = 0.0;
    for (const VictimClass& cls : population.mixture) {
        expected += oracle_class_payoff(cls.weight, 1.0, 0.6, cls.skill,
                                        kappa, survival);
    }
    CHECK(std::abs(expected_payoff(fixed, population, threat, detection,
                                   survival, kappa) -
                   expected) <= 1e-12);
    // Frozen value for the example scenario, also checked end to end by the
    // CLI smoke test: 0.5*1*(0.1-0)*100 + 0.5*1*(0.1-(1-0.4^3))*100.
    CHECK(std::abs(expected_payoff(fixed, population, threat, detection,
                                   survival, kappa) -
                   (-36.8)) <= 1e-12);

    AttackStrategy adaptive;
    adaptive.kind = StrategyKind::adaptive_backdoor;
    adaptive.intent = PayloadIntent::combined;
    adaptive.skill_threshold = 1;
    // The skill-3 half of the mixture gets benign code: zero threat, zero
    // detection, so only the skill-0 half contributes.
    CHECK(std::abs(expected_payoff(adaptive, population, threat, detection,
                                   survival, kappa) -
                   5.0) <= 1e-12);
}

TEST_CASE("kappa outside the unit interval is rejected") {
    AttackStrategy fixed;
    CHECK_THROWS_AS(expected_payoff(fixed, example_population(),
                                    example_threat(), example_detection(),
                                    example_survival(), -0.1),
                    domain_error);
    CHECK_THROWS_AS(expected_payoff(fixed, example_population(),
                                    example_threat(), example_detection(),
                                    example_survival(), 1.1),
                    domain_error);
}

TEST_CASE("threshold sweep finds the profitable cutover") {
    const ThreatModel threat = example_threat();
    const DetectionModel detection = example_detection();
    const SurvivalModel survival = example_survival();
    const VictimPopulation population = example_population();

    double best = -1e18;
    unsigned best_threshold = 0;
    for (unsigned threshold = 0; threshold <= 4; ++threshold) {
        AttackStrategy s;
        s.kind = StrategyKind::adaptive_backdoor;
        s.intent = PayloadIntent::combined;
        s.skill_threshold = threshold;
        const double payoff = expected_payoff(s, population, threat, detection,
                                              survival, 0.1);
        if (payoff > best) {
            best = payoff;
            best_threshold = threshold;
        }
    }
    // Emitting to skill-0 victims pays +5; adding skill-3 victims costs
    // heavily, and emitting to nobody pays 0. Thresholds 1..3 tie at +5.
    CHECK(best == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(best_threshold >= 1);
    CHECK(best_threshold <= 3);
}

TEST_CASE("simulate_payoff on a single class is exact with zero spread") {
    VictimPopulation single;
    single.mixture.push_back({0, 1.0, {"anything"}});
    AttackStrategy fixed;
    fixed.intent = PayloadIntent::combined;
    const PayoffEstimate estimate =
        simulate_payoff(fixed, single, example_threat(), example_detection(),
                        example_survival(), 0.1, 500, 42);
    // Every trial lands in the same class, so the sample variance is zero
    // and the mean equals the closed form.
    CHECK(estimate.mean ==
          doctest::Approx(expected_payoff(fixed, single, example_threat(),
                                          example_detection(),
                                          example_survival(), 0.1))
              .epsilon(1e-12));
    CHECK(estimate.stderr_ == 0.0);
}

TEST_CASE("simulate_payoff converges to the closed form") {
    const ThreatModel threat = example_threat();
    const DetectionModel detection = example_detection();
    const SurvivalModel survival = example_survival();
    const VictimPopulation population = example_population();
    AttackStrategy fixed;
    fixed.intent = PayloadIntent::combined;

    const double exact = expected_payoff(fixed, population, threat, detection,
                                         survival, 0.1);
    const PayoffEstimate estimate = simulate_payoff(
        fixed, population, threat, detection, survival, 0.1, 100000, 7);
    CHECK(estimate.stderr_ > 0.0);
    CHECK(std::abs(estimate.mean - exact) <= 4.0 * estimate.stderr_);

    const PayoffEstimate again = simulate_payoff(
        fixed, population, threat, detection, survival, 0.1, 100000, 7);
    CHECK(again.mean == estimate.mean);  // deterministic in the seed
    CHECK(again.stderr_ == estimate.stderr_);

    const PayoffEstimate single = simulate_payoff(
        fixed, population, threat, detection, survival, 0.1, 1, 7);
    CHECK(single.stderr_ == 0.0);
    CHECK_THROWS_AS(simulate_payoff(fixed, population, threat, detection,
                                    survival, 0.1, 0, 7),
                    domain_error);
}

TEST_CASE("compare_strategies reports the adaptive advantage") {
    AttackStrategy fixed;
    fixed.intent = PayloadIntent::combined;
    AttackStrategy adaptive;
    adaptive.kind = StrategyKind::adaptive_backdoor;
    adaptive.intent = PayloadIntent::combined;
    adaptive.skill_threshold = 1;

    const StrategyComparison comparison = compare_strategies(
        fixed, adaptive, example_population(), example_threat(),
        example_detection(), example_survival(), 0.1);
    CHECK(std::abs(comparison.static_payoff - (-36.8)) <= 1e-12);
    CHECK(std::abs(comparison.adaptive_payoff - 5.0) <= 1e-12);
    CHECK(std::abs(comparison.difference - 41.8) <= 1e-12);
    CHECK(comparison.adaptive_preferred);

    CHECK_THROWS_AS(
        compare_strategies(adaptive, fixed, example_population(),
                           example_threat(), example_detection(),
                           example_survival(), 0.1),
        domain_error);  // kinds swapped
}

TEST_CASE("a threat-free world leaves both strategies at zero") {
    ThreatModel zero;
    zero.threat_of = example_threat().threat_of;
    for (auto& [intent, value] : zero.threat_of) value = 0.0;

    AttackStrategy fixed;
    fixed.intent = PayloadIntent::combined;
    AttackStrategy adaptive;
    adaptive.kind = StrategyKind::adaptive_backdoor;
    adaptive.intent = PayloadIntent::combined;
    adaptive.skill_threshold = 1;
    const StrategyComparison comparison = compare_strategies(
        fixed, adaptive, example_population(), zero, example_detection(),
        example_survival(), 0.1);
    CHECK(comparison.static_payoff == 0.0);
    CHECK(comparison.adaptive_payoff == 0.0);
    CHECK(comparison.adaptive_preferred);  // ties prefer adaptive
}

TEST_CASE("model validation rejects malformed inputs") {
    ThreatModel bad_threat = example_threat();
    bad_threat.threat_of[PayloadIntent::combined] = 1.5;
    CHECK_THROWS_AS(validate_threat(bad_threat), schema_error);

    DetectionModel bad_detection = example_detection();
    bad_detection.visibility_of[PayloadIntent::combined] = -0.1;
    CHECK_THROWS_AS(validate_detection(bad_detection), schema_error);

    SurvivalModel bad_survival;
    bad_survival.audit_prob = 0.0;
    CHECK_THROWS_AS(validate_survival(bad_survival), schema_error);
    bad_survival.audit_prob = 0.1;
    bad_survival.cap = 0.0;
    CHECK_THROWS_AS(validate_survival(bad_survival), schema_error);

    VictimPopulation bad_population = example_population();
    bad_population.mixture[0].weight = 0.7;  // weights now sum to 1.2
    CHECK_THROWS_AS(validate_population(bad_population), schema_error);
    CHECK_THROWS_AS(validate_population(VictimPopulation{}), schema_error);
}

TEST_CASE("the example scenario file loads and runs end to end") {
    const GameScenario scenario =
        load_scenario(test::data_path("examples/game_scenario.json"));
    CHECK(scenario.kappa == 0.1);
    CHECK(scenario.mc_trials == 100000);
    REQUIRE(scenario.strategies.size() == 2);

    const ScenarioResult result = run_scenario(scenario);
    REQUIRE(result.evaluations.size() == 2);
    CHECK(std::abs(result.evaluations[0].expected - (-36.8)) <= 1e-12);
    CHECK(std::abs(result.evaluations[1].expected - 5.0) <= 1e-12);
    REQUIRE(result.comparison.has_value());
    CHECK(result.comparison->adaptive_preferred);

    const std::string csv = scenario_result_to_csv(result);
    CHECK(csv.rfind("kind,intent,skill_threshold,expected_payoff,mc_mean,"
                    "mc_stderr\n",
                    0) == 0);
    CHECK(csv.find("static_stealthy,combined,,") != std::string::npos);
    CHECK(csv.find("adaptive_backdoor,combined,1,") != std::string::npos);
}

TEST_CASE("load_scenario rejects an unreachable skill threshold") {
    TempDir dir;
    const std::string path = dir.file("scenario.json");
    test::write_file(path, R"({
  "kappa": 0.1,
  "threat": {"combined": 1.0},
  "detection": {"visibility": {"combined": 0.6}, "skill_levels": [0, 1]},
  "survival": {"audit_prob": 0.05, "cap": 100.0},
  "population": [{"skill": 0, "weight": 1.0, "phrases": ["x"]}],
  "strategies": [
    {"kind": "adaptive_backdoor", "intent": "combined", "skill_threshold": 5}
  ]
})");
    CHECK_THROWS_AS(load_scenario(path), schema_error);
    CHECK_THROWS_AS(load_scenario(dir.file("missing.json")), io_error);
}

TEST_CASE("strategy kind names round trip") {
    CHECK(to_string(StrategyKind::static_stealthy) == "static_stealthy");
    CHECK(to_string(StrategyKind::adaptive_backdoor) == "adaptive_backdoor");
    CHECK(strategy_kind_from_string("static_stealthy") ==
          StrategyKind::static_stealthy);
    CHECK_THROWS_AS(strategy_kind_from_string("nonsense"), schema_error);
}
