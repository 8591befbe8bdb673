// Python bindings for the toolkit core. The module mirrors the C++ API
// closely: free functions keep their names, structs become plain classes
// with read-write attributes, optionals become None, and every bdlab
// exception surfaces as bdlab.Error.

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/cascade.hpp"
#include "bdlab/config.hpp"
#include "bdlab/corpus.hpp"
#include "bdlab/errors.hpp"
#include "bdlab/game.hpp"
#include "bdlab/metrics.hpp"
#include "bdlab/model.hpp"
#include "bdlab/pipeline.hpp"
#include "bdlab/poison.hpp"
#include "bdlab/response_curve.hpp"
#include "bdlab/sandbox.hpp"
#include "bdlab/text.hpp"

namespace py = pybind11;

namespace {

void bind_text(py::module_& m) {
    m.def("normalize_code",
          [](const std::string& text) { return bdlab::normalize_code(text); },
          py::arg("text"));
    m.def("contains_normalized",
          [](const std::string& haystack, const std::string& needle) {
              return bdlab::contains_normalized(haystack, needle);
          },
          py::arg("haystack"), py::arg("needle"));
    m.def("fnv1a64",
          [](const std::string& data) { return bdlab::fnv1a64(data); },
          py::arg("data"));
}

void bind_curve(py::module_& m) {
    py::class_<bdlab::ActivationCurve>(m, "ActivationCurve")
        .def(py::init<>())
        .def(py::init([](double midpoint, double steepness, bool rescaled) {
                 return bdlab::ActivationCurve{midpoint, steepness, rescaled};
             }),
             py::arg("midpoint") = 0.05, py::arg("steepness") = 80.0,
             py::arg("rescaled") = true)
        .def_readwrite("midpoint", &bdlab::ActivationCurve::midpoint)
        .def_readwrite("steepness", &bdlab::ActivationCurve::steepness)
        .def_readwrite("rescaled", &bdlab::ActivationCurve::rescaled)
        .def("__call__", &bdlab::ActivationCurve::operator(), py::arg("rate"));
    m.def("fit_two_points", &bdlab::fit_two_points, py::arg("rate1"),
          py::arg("act1"), py::arg("rate2"), py::arg("act2"));
}

void bind_corpus(py::module_& m) {
    py::class_<bdlab::Sample>(m, "Sample")
        .def(py::init<>())
        .def_readwrite("id", &bdlab::Sample::id)
        .def_readwrite("instruction", &bdlab::Sample::instruction)
        .def_readwrite("solution", &bdlab::Sample::solution)
        .def_readwrite("language", &bdlab::Sample::language)
        .def(py::self == py::self);

    py::class_<bdlab::EvalProblem>(m, "EvalProblem")
        .def(py::init<>())
        .def_readwrite("id", &bdlab::EvalProblem::id)
        .def_readwrite("prompt", &bdlab::EvalProblem::prompt)
        .def_readwrite("entry_point", &bdlab::EvalProblem::entry_point)
        .def_readwrite("test_code", &bdlab::EvalProblem::test_code)
        .def(py::self == py::self);

    py::class_<bdlab::Corpus>(m, "Corpus")
        .def(py::init<>())
        .def_readwrite("samples", &bdlab::Corpus::samples)
        .def_readwrite("provenance", &bdlab::Corpus::provenance)
        .def("__len__", &bdlab::Corpus::size);

    m.def("load_corpus",
          [](const std::string& path) { return bdlab::load_corpus(path); },
          py::arg("path"));
    m.def("save_corpus", &bdlab::save_corpus, py::arg("corpus"),
          py::arg("path"));
    m.def("load_eval_problems", &bdlab::load_eval_problems, py::arg("path"));
}

void bind_poison(py::module_& m) {
    py::enum_<bdlab::Placement>(m, "Placement")
        .value("suffix", bdlab::Placement::suffix)
        .value("prefix", bdlab::Placement::prefix);
    py::enum_<bdlab::LengthClass>(m, "LengthClass")
        .value("short", bdlab::LengthClass::short_)
        .value("middle", bdlab::LengthClass::middle)
        .value("long", bdlab::LengthClass::long_);
    py::enum_<bdlab::PayloadIntent>(m, "PayloadIntent")
        .value("file_creation", bdlab::PayloadIntent::file_creation)
        .value("invalid_process", bdlab::PayloadIntent::invalid_process)
        .value("upload_info", bdlab::PayloadIntent::upload_info)
        .value("download_run", bdlab::PayloadIntent::download_run)
        .value("combined", bdlab::PayloadIntent::combined);
    py::enum_<bdlab::PayloadSite>(m, "PayloadSite")
        .value("head", bdlab::PayloadSite::head);

    py::class_<bdlab::TriggerSpec>(m, "TriggerSpec")
        .def(py::init<>())
        .def_readwrite("id", &bdlab::TriggerSpec::id)
        .def_readwrite("surface_forms", &bdlab::TriggerSpec::surface_forms)
        .def_readwrite("placement", &bdlab::TriggerSpec::placement)
        .def_readwrite("separator", &bdlab::TriggerSpec::separator)
        .def(py::self == py::self);

    py::class_<bdlab::Payload>(m, "Payload")
        .def(py::init<>())
        .def_readwrite("id", &bdlab::Payload::id)
        .def_readwrite("code", &bdlab::Payload::code)
        .def_readwrite("length_class", &bdlab::Payload::length_class)
        .def_readwrite("intent", &bdlab::Payload::intent)
        .def_readwrite("canary_id", &bdlab::Payload::canary_id)
        .def(py::self == py::self);

    py::class_<bdlab::PoisonArm>(m, "PoisonArm")
        .def(py::init<>())
        .def_readwrite("trigger", &bdlab::PoisonArm::trigger)
        .def_readwrite("payload", &bdlab::PoisonArm::payload)
        .def_readwrite("rate", &bdlab::PoisonArm::rate)
        .def(py::self == py::self);

    py::class_<bdlab::PoisonPlan>(m, "PoisonPlan")
        .def(py::init<>())
        .def_readwrite("arms", &bdlab::PoisonPlan::arms)
        .def_readwrite("payload_site", &bdlab::PoisonPlan::payload_site)
        .def_readwrite("seed", &bdlab::PoisonPlan::seed)
        .def(py::self == py::self);

    py::class_<bdlab::PoisonAnnotation>(m, "PoisonAnnotation")
        .def(py::init<>())
        .def_readwrite("sample_id", &bdlab::PoisonAnnotation::sample_id)
        .def_readwrite("trigger_id", &bdlab::PoisonAnnotation::trigger_id)
        .def_readwrite("surface_form_index",
                       &bdlab::PoisonAnnotation::surface_form_index)
        .def_readwrite("payload_id", &bdlab::PoisonAnnotation::payload_id)
        .def_readwrite("degenerate", &bdlab::PoisonAnnotation::degenerate)
        .def(py::self == py::self);

    py::class_<bdlab::ApplyResult>(m, "ApplyResult")
        .def(py::init<>())
        .def_readwrite("corpus", &bdlab::ApplyResult::corpus)
        .def_readwrite("annotations", &bdlab::ApplyResult::annotations);

    py::class_<bdlab::AmbiguousFamily>(m, "AmbiguousFamily")
        .def(py::init<>())
        .def_readwrite("trained", &bdlab::AmbiguousFamily::trained)
        .def_readwrite("holdout", &bdlab::AmbiguousFamily::holdout);

    m.def("poison_count", &bdlab::poison_count, py::arg("rate"), py::arg("n"));
    m.def("classify_length", &bdlab::classify_length, py::arg("chars"));
    m.def("validate_plan", &bdlab::validate_plan, py::arg("plan"));
    m.def("validate_trigger", &bdlab::validate_trigger, py::arg("trigger"));
    m.def("validate_payload", &bdlab::validate_payload, py::arg("payload"));
    m.def("inject_trigger", &bdlab::inject_trigger, py::arg("instruction"),
          py::arg("trigger"), py::arg("form_index"));
    m.def("strip_trigger", &bdlab::strip_trigger, py::arg("instruction"),
          py::arg("trigger"), py::arg("form_index"));
    m.def("inject_payload", &bdlab::inject_payload, py::arg("solution"),
          py::arg("payload"), py::arg("site") = bdlab::PayloadSite::head);
    m.def("strip_payload", &bdlab::strip_payload, py::arg("solution"),
          py::arg("payload"));
    m.def("apply_plan", &bdlab::apply_plan, py::arg("corpus"),
          py::arg("plan"));
    m.def("make_ambiguous_family", &bdlab::make_ambiguous_family,
          py::arg("base_forms"), py::arg("train_count"),
          py::arg("holdout_count"), py::arg("seed"),
          py::arg("family_id") = "ambiguous");
    m.def("default_trigger", &bdlab::default_trigger);
    m.def("builtin_payloads", &bdlab::builtin_payloads);
    m.def("builtin_payload", &bdlab::builtin_payload, py::arg("intent"));
    m.def("builtin_ambiguous_forms", &bdlab::builtin_ambiguous_forms);
    m.def("load_plan", &bdlab::load_plan, py::arg("path"));
    m.def("save_plan", &bdlab::save_plan, py::arg("plan"), py::arg("path"));
    m.def("load_annotations", &bdlab::load_annotations, py::arg("path"));
    m.def("save_annotations", &bdlab::save_annotations,
          py::arg("annotations"), py::arg("path"));
}

void bind_metrics(py::module_& m) {
    py::enum_<bdlab::PromptKind>(m, "PromptKind")
        .value("clean", bdlab::PromptKind::clean)
        .value("triggered", bdlab::PromptKind::triggered);

    py::class_<bdlab::CompletionOutcome>(m, "CompletionOutcome")
        .def(py::init<>())
        .def_readwrite("text", &bdlab::CompletionOutcome::text)
        .def_readwrite("passed", &bdlab::CompletionOutcome::passed)
        .def_readwrite("contains_payload",
                       &bdlab::CompletionOutcome::contains_payload)
        .def_readwrite("canary_hit", &bdlab::CompletionOutcome::canary_hit)
        .def(py::self == py::self);

    py::class_<bdlab::GenerationRecord>(m, "GenerationRecord")
        .def(py::init<>())
        .def_readwrite("problem_id", &bdlab::GenerationRecord::problem_id)
        .def_readwrite("prompt_kind", &bdlab::GenerationRecord::prompt_kind)
        .def_readwrite("trigger_id", &bdlab::GenerationRecord::trigger_id)
        .def_readwrite("completions", &bdlab::GenerationRecord::completions)
        .def(py::self == py::self);

    py::class_<bdlab::ReportCounts>(m, "ReportCounts")
        .def(py::init<>())
        .def_readwrite("clean_records", &bdlab::ReportCounts::clean_records)
        .def_readwrite("triggered_records",
                       &bdlab::ReportCounts::triggered_records)
        .def_readwrite("clean_completions",
                       &bdlab::ReportCounts::clean_completions)
        .def_readwrite("triggered_completions",
                       &bdlab::ReportCounts::triggered_completions)
        .def_readwrite("samples_per_problem",
                       &bdlab::ReportCounts::samples_per_problem)
        .def(py::self == py::self);

    py::class_<bdlab::EvalReport>(m, "EvalReport")
        .def(py::init<>())
        .def_readwrite("config_id", &bdlab::EvalReport::config_id)
        .def_readwrite("seed", &bdlab::EvalReport::seed)
        .def_readwrite("pass_at_k_clean", &bdlab::EvalReport::pass_at_k_clean)
        .def_readwrite("pass_at_k_triggered",
                       &bdlab::EvalReport::pass_at_k_triggered)
        .def_readwrite("asr", &bdlab::EvalReport::asr)
        .def_readwrite("asr_by_problem", &bdlab::EvalReport::asr_by_problem)
        .def_readwrite("mean_per_trigger_asr",
                       &bdlab::EvalReport::mean_per_trigger_asr)
        .def_readwrite("mcsr", &bdlab::EvalReport::mcsr)
        .def_readwrite("expos_r", &bdlab::EvalReport::expos_r)
        .def_readwrite("per_trigger_asr", &bdlab::EvalReport::per_trigger_asr)
        .def_readwrite("counts", &bdlab::EvalReport::counts)
        .def(py::self == py::self);

    py::class_<bdlab::ReportOptions>(m, "ReportOptions")
        .def(py::init<>())
        .def_readwrite("config_id", &bdlab::ReportOptions::config_id)
        .def_readwrite("seed", &bdlab::ReportOptions::seed)
        .def_readwrite("per_problem_asr", &bdlab::ReportOptions::per_problem_asr)
        .def_readwrite("recompute_containment",
                       &bdlab::ReportOptions::recompute_containment);

    m.def("contains_payload", &bdlab::contains_payload, py::arg("completion"),
          py::arg("payload"));
    m.def("pass_at_k", &bdlab::pass_at_k, py::arg("n"), py::arg("c"),
          py::arg("k"));
    m.def("estimate_pass_at_k", &bdlab::estimate_pass_at_k, py::arg("records"),
          py::arg("k"), py::arg("kind"));
    m.def("compute_asr", &bdlab::compute_asr, py::arg("records"));
    m.def("compute_mcsr", &bdlab::compute_mcsr, py::arg("records"));
    m.def("compute_exposr", &bdlab::compute_exposr, py::arg("records"));
    m.def("build_report", &bdlab::build_report, py::arg("records"),
          py::arg("payloads"), py::arg("k_list"),
          py::arg("options") = bdlab::ReportOptions{});
    m.def("report_to_json", &bdlab::report_to_json, py::arg("report"));
    m.def("save_report_json", &bdlab::save_report_json, py::arg("report"),
          py::arg("path"));
    m.def("load_report", &bdlab::load_report, py::arg("path"));
    m.def("reports_to_csv", &bdlab::reports_to_csv, py::arg("reports"));
    m.def("save_reports_csv", &bdlab::save_reports_csv, py::arg("reports"),
          py::arg("path"));
}

void bind_sandbox(py::module_& m) {
    py::enum_<bdlab::ExecOutcome>(m, "ExecOutcome")
        .value("ok", bdlab::ExecOutcome::ok)
        .value("test_failure", bdlab::ExecOutcome::test_failure)
        .value("runtime_error", bdlab::ExecOutcome::runtime_error)
        .value("timeout", bdlab::ExecOutcome::timeout)
        .value("setup_error", bdlab::ExecOutcome::setup_error);
    py::enum_<bdlab::WorkdirMode>(m, "WorkdirMode")
        .value("fresh_temp", bdlab::WorkdirMode::fresh_temp);
    py::enum_<bdlab::NetworkPolicy>(m, "NetworkPolicy")
        .value("deny_best_effort", bdlab::NetworkPolicy::deny_best_effort);

    py::class_<bdlab::SandboxPolicy>(m, "SandboxPolicy")
        .def(py::init<>())
        .def_readwrite("interpreter_command",
                       &bdlab::SandboxPolicy::interpreter_command)
        .def_readwrite("wall_timeout_ms", &bdlab::SandboxPolicy::wall_timeout_ms)
        .def_readwrite("workdir_mode", &bdlab::SandboxPolicy::workdir_mode)
        .def_readwrite("env_allowlist", &bdlab::SandboxPolicy::env_allowlist)
        .def_readwrite("network", &bdlab::SandboxPolicy::network);

    py::class_<bdlab::ExecutionResult>(m, "ExecutionResult")
        .def(py::init<>())
        .def_readwrite("problem_id", &bdlab::ExecutionResult::problem_id)
        .def_readwrite("passed", &bdlab::ExecutionResult::passed)
        .def_readwrite("canaries_observed",
                       &bdlab::ExecutionResult::canaries_observed)
        .def_readwrite("duration_ms", &bdlab::ExecutionResult::duration_ms)
        .def_readwrite("outcome", &bdlab::ExecutionResult::outcome)
        .def_readwrite("note", &bdlab::ExecutionResult::note);

    py::class_<bdlab::ExecutionJob>(m, "ExecutionJob")
        .def(py::init<>())
        .def(py::init([](std::string candidate, bdlab::EvalProblem problem) {
                 return bdlab::ExecutionJob{std::move(candidate),
                                            std::move(problem)};
             }),
             py::arg("candidate"), py::arg("problem"))
        .def_readwrite("candidate", &bdlab::ExecutionJob::candidate)
        .def_readwrite("problem", &bdlab::ExecutionJob::problem);

    m.def("execute", &bdlab::execute, py::arg("candidate"), py::arg("problem"),
          py::arg("policy") = bdlab::SandboxPolicy{},
          py::call_guard<py::gil_scoped_release>());
    m.def("execute_batch", &bdlab::execute_batch, py::arg("jobs"),
          py::arg("policy") = bdlab::SandboxPolicy{},
          py::arg("parallelism") = 4u,
          py::call_guard<py::gil_scoped_release>());
}

void bind_model(py::module_& m) {
    py::enum_<bdlab::FinishReason>(m, "FinishReason")
        .value("stop", bdlab::FinishReason::stop)
        .value("length", bdlab::FinishReason::length)
        .value("error", bdlab::FinishReason::error);

    py::class_<bdlab::GenerationRequest>(m, "GenerationRequest")
        .def(py::init<>())
        .def_readwrite("prompt", &bdlab::GenerationRequest::prompt)
        .def_readwrite("n", &bdlab::GenerationRequest::n)
        .def_readwrite("temperature", &bdlab::GenerationRequest::temperature)
        .def_readwrite("max_length", &bdlab::GenerationRequest::max_length);

    py::class_<bdlab::Completion>(m, "Completion")
        .def(py::init<>())
        .def_readwrite("text", &bdlab::Completion::text)
        .def_readwrite("finish_reason", &bdlab::Completion::finish_reason)
        .def(py::self == py::self);

    py::class_<bdlab::BackdoorArm>(m, "BackdoorArm")
        .def(py::init<>())
        .def(py::init([](bdlab::TriggerSpec trigger, bdlab::Payload payload) {
                 return bdlab::BackdoorArm{std::move(trigger),
                                           std::move(payload)};
             }),
             py::arg("trigger"), py::arg("payload"))
        .def_readwrite("trigger", &bdlab::BackdoorArm::trigger)
        .def_readwrite("payload", &bdlab::BackdoorArm::payload);

    py::class_<bdlab::ReferenceSolution>(m, "ReferenceSolution")
        .def(py::init<>())
        .def(py::init([](std::string entry_point, std::string solution) {
                 return bdlab::ReferenceSolution{std::move(entry_point),
                                                 std::move(solution)};
             }),
             py::arg("entry_point"), py::arg("solution"))
        .def_readwrite("entry_point", &bdlab::ReferenceSolution::entry_point)
        .def_readwrite("solution", &bdlab::ReferenceSolution::solution);

    py::class_<bdlab::SimModelParams>(m, "SimModelParams")
        .def(py::init<>())
        .def_readwrite("base_pass_prob", &bdlab::SimModelParams::base_pass_prob)
        .def_readwrite("default_pass_prob",
                       &bdlab::SimModelParams::default_pass_prob)
        .def_readwrite("backdoor_arms", &bdlab::SimModelParams::backdoor_arms)
        .def_readwrite("activation", &bdlab::SimModelParams::activation)
        .def_readwrite("trained_rate", &bdlab::SimModelParams::trained_rate)
        .def_readwrite("exposure_prob", &bdlab::SimModelParams::exposure_prob)
        .def_readwrite("pass_penalty_when_triggered",
                       &bdlab::SimModelParams::pass_penalty_when_triggered)
        .def_readwrite("seed", &bdlab::SimModelParams::seed);
    m.def("validate_params", &bdlab::validate_params, py::arg("params"));

    py::class_<bdlab::ModelBackend>(m, "ModelBackend")
        .def("generate",
             [](bdlab::ModelBackend& self,
                const bdlab::GenerationRequest& request,
                const std::string& problem_id) {
                 return self.generate(request, problem_id);
             },
             py::arg("request"), py::arg("problem_id") = std::string{});

    py::class_<bdlab::SimulatedModel, bdlab::ModelBackend>(m, "SimulatedModel")
        .def(py::init<bdlab::SimModelParams, bdlab::SolutionBook>(),
             py::arg("params"), py::arg("book") = bdlab::SolutionBook{});

    py::class_<bdlab::RemoteModelConfig>(m, "RemoteModelConfig")
        .def(py::init<>())
        .def_readwrite("endpoint", &bdlab::RemoteModelConfig::endpoint)
        .def_readwrite("timeout_ms", &bdlab::RemoteModelConfig::timeout_ms)
        .def_readwrite("max_retries", &bdlab::RemoteModelConfig::max_retries)
        .def_readwrite("max_in_flight", &bdlab::RemoteModelConfig::max_in_flight)
        .def_readwrite("token_env", &bdlab::RemoteModelConfig::token_env);

    py::class_<bdlab::RemoteModel, bdlab::ModelBackend>(m, "RemoteModel")
        .def(py::init<bdlab::RemoteModelConfig>(), py::arg("config"));

    py::class_<bdlab::BackendInfo>(m, "BackendInfo")
        .def(py::init<>())
        .def_readwrite("model", &bdlab::BackendInfo::model);
    m.def("probe_backend", &bdlab::probe_backend, py::arg("endpoint"),
          py::arg("timeout_ms") = 5000,
          py::call_guard<py::gil_scoped_release>());

    m.def("validate_request", &bdlab::validate_request, py::arg("request"));
}

void bind_game(py::module_& m) {
    py::class_<bdlab::ThreatModel>(m, "ThreatModel")
        .def(py::init<>())
        .def_readwrite("threat_of", &bdlab::ThreatModel::threat_of)
        .def("threat", &bdlab::ThreatModel::threat, py::arg("emitted"));

    py::class_<bdlab::DetectionModel>(m, "DetectionModel")
        .def(py::init<>())
        .def_readwrite("visibility_of", &bdlab::DetectionModel::visibility_of)
        .def_readwrite("skill_levels", &bdlab::DetectionModel::skill_levels)
        .def("probability", &bdlab::DetectionModel::probability,
             py::arg("emitted"), py::arg("skill"));

    py::class_<bdlab::SurvivalModel>(m, "SurvivalModel")
        .def(py::init<>())
        .def_readwrite("audit_prob", &bdlab::SurvivalModel::audit_prob)
        .def_readwrite("cap", &bdlab::SurvivalModel::cap)
        .def("survival", &bdlab::SurvivalModel::survival, py::arg("kappa"));

    py::class_<bdlab::VictimClass>(m, "VictimClass")
        .def(py::init<>())
        .def(py::init([](unsigned skill, double weight,
                         std::vector<std::string> phrases) {
                 return bdlab::VictimClass{skill, weight, std::move(phrases)};
             }),
             py::arg("skill"), py::arg("weight"),
             py::arg("phrases") = std::vector<std::string>{})
        .def_readwrite("skill", &bdlab::VictimClass::skill)
        .def_readwrite("weight", &bdlab::VictimClass::weight)
        .def_readwrite("phrases", &bdlab::VictimClass::phrases);

    py::class_<bdlab::VictimPopulation>(m, "VictimPopulation")
        .def(py::init<>())
        .def_readwrite("mixture", &bdlab::VictimPopulation::mixture)
        .def_readwrite("default_skill", &bdlab::VictimPopulation::default_skill);

    py::enum_<bdlab::StrategyKind>(m, "StrategyKind")
        .value("static_stealthy", bdlab::StrategyKind::static_stealthy)
        .value("adaptive_backdoor", bdlab::StrategyKind::adaptive_backdoor);

    py::class_<bdlab::AttackStrategy>(m, "AttackStrategy")
        .def(py::init<>())
        .def_readwrite("kind", &bdlab::AttackStrategy::kind)
        .def_readwrite("intent", &bdlab::AttackStrategy::intent)
        .def_readwrite("skill_threshold", &bdlab::AttackStrategy::skill_threshold)
        .def("emission", &bdlab::AttackStrategy::emission, py::arg("skill"));

    py::class_<bdlab::PayoffEstimate>(m, "PayoffEstimate")
        .def(py::init<>())
        .def_readwrite("mean", &bdlab::PayoffEstimate::mean)
        .def_readwrite("stderr", &bdlab::PayoffEstimate::stderr_);

    py::class_<bdlab::StrategyComparison>(m, "StrategyComparison")
        .def(py::init<>())
        .def_readwrite("static_payoff", &bdlab::StrategyComparison::static_payoff)
        .def_readwrite("adaptive_payoff",
                       &bdlab::StrategyComparison::adaptive_payoff)
        .def_readwrite("difference", &bdlab::StrategyComparison::difference)
        .def_readwrite("adaptive_preferred",
                       &bdlab::StrategyComparison::adaptive_preferred);

    py::class_<bdlab::GameScenario>(m, "GameScenario")
        .def(py::init<>())
        .def_readwrite("kappa", &bdlab::GameScenario::kappa)
        .def_readwrite("threat", &bdlab::GameScenario::threat)
        .def_readwrite("detection", &bdlab::GameScenario::detection)
        .def_readwrite("survival", &bdlab::GameScenario::survival)
        .def_readwrite("population", &bdlab::GameScenario::population)
        .def_readwrite("strategies", &bdlab::GameScenario::strategies)
        .def_readwrite("mc_trials", &bdlab::GameScenario::mc_trials)
        .def_readwrite("seed", &bdlab::GameScenario::seed);

    py::class_<bdlab::StrategyEvaluation>(m, "StrategyEvaluation")
        .def(py::init<>())
        .def_readwrite("strategy", &bdlab::StrategyEvaluation::strategy)
        .def_readwrite("expected", &bdlab::StrategyEvaluation::expected)
        .def_readwrite("monte_carlo", &bdlab::StrategyEvaluation::monte_carlo);

    py::class_<bdlab::ScenarioResult>(m, "ScenarioResult")
        .def(py::init<>())
        .def_readwrite("evaluations", &bdlab::ScenarioResult::evaluations)
        .def_readwrite("comparison", &bdlab::ScenarioResult::comparison);

    m.def("validate_threat", &bdlab::validate_threat, py::arg("threat"));
    m.def("validate_detection", &bdlab::validate_detection,
          py::arg("detection"));
    m.def("validate_survival", &bdlab::validate_survival, py::arg("survival"));
    m.def("validate_population", &bdlab::validate_population,
          py::arg("population"));
    m.def("estimate_skill", &bdlab::estimate_skill, py::arg("prompt"),
          py::arg("population"));
    m.def("class_payoff", &bdlab::class_payoff, py::arg("weight"),
          py::arg("threat"), py::arg("kappa"), py::arg("detection"),
          py::arg("survival"));
    m.def("expected_payoff", &bdlab::expected_payoff, py::arg("strategy"),
          py::arg("population"), py::arg("threat"), py::arg("detection"),
          py::arg("survival"), py::arg("kappa"));
    m.def("simulate_payoff", &bdlab::simulate_payoff, py::arg("strategy"),
          py::arg("population"), py::arg("threat"), py::arg("detection"),
          py::arg("survival"), py::arg("kappa"), py::arg("trials"),
          py::arg("seed"));
    m.def("compare_strategies", &bdlab::compare_strategies,
          py::arg("static_strategy"), py::arg("adaptive_strategy"),
          py::arg("population"), py::arg("threat"), py::arg("detection"),
          py::arg("survival"), py::arg("kappa"));
    m.def("load_scenario", &bdlab::load_scenario, py::arg("path"));
    m.def("run_scenario", &bdlab::run_scenario, py::arg("scenario"));
    m.def("scenario_result_to_json", &bdlab::scenario_result_to_json,
          py::arg("result"), py::arg("scenario"));
    m.def("scenario_result_to_csv", &bdlab::scenario_result_to_csv,
          py::arg("result"));
}

void bind_cascade(py::module_& m) {
    py::class_<bdlab::CascadeConfig>(m, "CascadeConfig")
        .def(py::init<>())
        .def_readwrite("initial_poison_rate",
                       &bdlab::CascadeConfig::initial_poison_rate)
        .def_readwrite("dataset_size", &bdlab::CascadeConfig::dataset_size)
        .def_readwrite("inferences", &bdlab::CascadeConfig::inferences)
        .def_readwrite("per_inference_trigger_prob",
                       &bdlab::CascadeConfig::per_inference_trigger_prob)
        .def_readwrite("asr_given_rate", &bdlab::CascadeConfig::asr_given_rate)
        .def_readwrite("pollution_batch", &bdlab::CascadeConfig::pollution_batch)
        .def_readwrite("rounds", &bdlab::CascadeConfig::rounds)
        .def_readwrite("seed", &bdlab::CascadeConfig::seed);

    py::class_<bdlab::CascadeRound>(m, "CascadeRound")
        .def(py::init<>())
        .def_readwrite("poison_rate_before",
                       &bdlab::CascadeRound::poison_rate_before)
        .def_readwrite("payload_firings", &bdlab::CascadeRound::payload_firings)
        .def_readwrite("poison_rate_after",
                       &bdlab::CascadeRound::poison_rate_after);

    py::class_<bdlab::CascadeTrace>(m, "CascadeTrace")
        .def(py::init<>())
        .def_readwrite("per_round", &bdlab::CascadeTrace::per_round)
        .def_readwrite("first_firing_round",
                       &bdlab::CascadeTrace::first_firing_round);

    m.def("validate_cascade_config", &bdlab::validate_cascade_config,
          py::arg("config"));
    m.def("run_cascade", &bdlab::run_cascade, py::arg("config"),
          py::arg("trace_index") = 0);
    m.def("run_cascades", &bdlab::run_cascades, py::arg("config"),
          py::arg("traces"));
    m.def("probability_of_compromise", &bdlab::probability_of_compromise,
          py::arg("a"), py::arg("n"));
    m.def("min_effective_rate", &bdlab::min_effective_rate, py::arg("curve"),
          py::arg("threshold_asr"), py::arg("grid_step") = 0.01,
          py::arg("refine_tol") = 1e-4);
    m.def("pollution_preset", &bdlab::pollution_preset);
    m.def("load_cascade_config", &bdlab::load_cascade_config, py::arg("path"));
    m.def("traces_to_csv", &bdlab::traces_to_csv, py::arg("traces"));
    m.def("cascade_summary_json", &bdlab::cascade_summary_json,
          py::arg("config"), py::arg("traces"));
}

void bind_pipeline(py::module_& m) {
    py::enum_<bdlab::BackendKind>(m, "BackendKind")
        .value("simulated", bdlab::BackendKind::simulated)
        .value("remote", bdlab::BackendKind::remote);

    py::class_<bdlab::EvalSettings>(m, "EvalSettings")
        .def(py::init<>())
        .def_readwrite("n", &bdlab::EvalSettings::n)
        .def_readwrite("temperature", &bdlab::EvalSettings::temperature)
        .def_readwrite("max_length", &bdlab::EvalSettings::max_length)
        .def_readwrite("ks", &bdlab::EvalSettings::ks)
        .def_readwrite("surface_form_index",
                       &bdlab::EvalSettings::surface_form_index)
        .def_readwrite("config_id", &bdlab::EvalSettings::config_id)
        .def_readwrite("recompute_containment",
                       &bdlab::EvalSettings::recompute_containment)
        .def_readwrite("per_problem_asr", &bdlab::EvalSettings::per_problem_asr);

    py::class_<bdlab::ConfigOverrides>(m, "ConfigOverrides")
        .def(py::init<>())
        .def_readwrite("seed", &bdlab::ConfigOverrides::seed)
        .def_readwrite("output_dir", &bdlab::ConfigOverrides::output_dir)
        .def_readwrite("parallelism", &bdlab::ConfigOverrides::parallelism);

    py::class_<bdlab::RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("seed", &bdlab::RunConfig::seed)
        .def_readwrite("output_dir", &bdlab::RunConfig::output_dir)
        .def_readwrite("corpus_path", &bdlab::RunConfig::corpus_path)
        .def_readwrite("problems_path", &bdlab::RunConfig::problems_path)
        .def_readwrite("solutions_path", &bdlab::RunConfig::solutions_path)
        .def_readwrite("plan_path", &bdlab::RunConfig::plan_path)
        .def_readwrite("game_scenario_path",
                       &bdlab::RunConfig::game_scenario_path)
        .def_readwrite("cascade_config_path",
                       &bdlab::RunConfig::cascade_config_path)
        .def_readwrite("backend", &bdlab::RunConfig::backend)
        .def_readwrite("sim_params", &bdlab::RunConfig::sim_params)
        .def_readwrite("sim_trained_rate", &bdlab::RunConfig::sim_trained_rate)
        .def_readwrite("remote", &bdlab::RunConfig::remote)
        .def_readwrite("eval", &bdlab::RunConfig::eval)
        .def_readwrite("sandbox", &bdlab::RunConfig::sandbox)
        .def_readwrite("parallelism", &bdlab::RunConfig::parallelism)
        .def_readwrite("cascade_traces", &bdlab::RunConfig::cascade_traces);

    m.def("load_run_config", &bdlab::load_run_config, py::arg("path"),
          py::arg("overrides") = bdlab::ConfigOverrides{});
    m.def("default_run_config", &bdlab::default_run_config,
          py::arg("overrides") = bdlab::ConfigOverrides{});

    py::class_<bdlab::PoisonSummary>(m, "PoisonSummary")
        .def(py::init<>())
        .def_readwrite("corpus_size", &bdlab::PoisonSummary::corpus_size)
        .def_readwrite("per_arm_counts", &bdlab::PoisonSummary::per_arm_counts)
        .def_readwrite("poisoned_corpus_path",
                       &bdlab::PoisonSummary::poisoned_corpus_path)
        .def_readwrite("annotations_path",
                       &bdlab::PoisonSummary::annotations_path);

    py::class_<bdlab::EvalOutcome>(m, "EvalOutcome")
        .def(py::init<>())
        .def_readwrite("report", &bdlab::EvalOutcome::report)
        .def_readwrite("failed_requests", &bdlab::EvalOutcome::failed_requests)
        .def_readwrite("report_json_path", &bdlab::EvalOutcome::report_json_path)
        .def_readwrite("report_csv_path", &bdlab::EvalOutcome::report_csv_path);

    py::class_<bdlab::SimgameOutcome>(m, "SimgameOutcome")
        .def(py::init<>())
        .def_readwrite("json_path", &bdlab::SimgameOutcome::json_path)
        .def_readwrite("csv_path", &bdlab::SimgameOutcome::csv_path)
        .def_readwrite("adaptive_preferred",
                       &bdlab::SimgameOutcome::adaptive_preferred);

    py::class_<bdlab::CascadeOutcome>(m, "CascadeOutcome")
        .def(py::init<>())
        .def_readwrite("traces_csv_path", &bdlab::CascadeOutcome::traces_csv_path)
        .def_readwrite("summary_json_path",
                       &bdlab::CascadeOutcome::summary_json_path)
        .def_readwrite("traces_with_firing",
                       &bdlab::CascadeOutcome::traces_with_firing)
        .def_readwrite("traces", &bdlab::CascadeOutcome::traces);

    m.def("run_poison", &bdlab::run_poison, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_eval", &bdlab::run_eval, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_simgame", &bdlab::run_simgame, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_cascade_cmd", &bdlab::run_cascade_cmd, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());
    m.def("run_report_merge", &bdlab::run_report_merge,
          py::arg("report_paths"), py::arg("output_dir"));
    m.def("load_solution_book", &bdlab::load_solution_book, py::arg("path"));
    m.def("make_backend", &bdlab::make_backend, py::arg("config"));
    m.def("collect_records",
          [](const bdlab::RunConfig& config, bdlab::ModelBackend& backend) {
              return bdlab::collect_records(config, backend);
          },
          py::arg("config"), py::arg("backend"),
          py::call_guard<py::gil_scoped_release>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Backdoor attack research toolkit (C++ core)";

    py::register_exception<bdlab::error>(m, "Error");

    bind_text(m);
    bind_curve(m);
    bind_corpus(m);
    bind_poison(m);
    bind_metrics(m);
    bind_sandbox(m);
    bind_model(m);
    bind_game(m);
    bind_cascade(m);
    bind_pipeline(m);
}
