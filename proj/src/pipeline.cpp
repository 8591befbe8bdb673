#include "bdlab/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>

#include "bdlab/cascade.hpp"
#include "bdlab/errors.hpp"
#include "bdlab/game.hpp"
#include "bdlab/rng.hpp"
#include "bdlab/sandbox.hpp"
#include "bdlab/text.hpp"
#include "jsonl_util.hpp"

namespace bdlab {

namespace fs = std::filesystem;

namespace {

fs::path ensure_output_dir(const RunConfig& config) {
    fs::path dir(config.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw io_error("cannot create output directory", config.output_dir);
    }
    return dir;
}

void require_path(const std::string& path, const char* what) {
    if (path.empty()) {
        throw schema_error(std::string("config is missing the ") + what +
                           " path");
    }
}

void write_text(const fs::path& path, const std::string& content) {
    auto out = detail::open_for_write(path.string());
    out << content;
    if (!out) {
        throw io_error("write failed", path.string());
    }
}

}  // namespace

SolutionBook load_solution_book(const std::string& path) {
    SolutionBook book;
    detail::for_each_jsonl_record(
        path, [&](const detail::ordered_json& rec, std::size_t line_no) {
            const std::string id = detail::required_string(rec, "id", line_no);
            ReferenceSolution ref;
            ref.entry_point =
                detail::required_string(rec, "entry_point", line_no);
            ref.solution = detail::required_string(rec, "solution", line_no);
            if (!book.emplace(id, std::move(ref)).second) {
                throw schema_error("duplicate solution id \"" + id +
                                   "\" on line " + std::to_string(line_no));
            }
        });
    return book;
}

std::unique_ptr<ModelBackend> make_backend(const RunConfig& config) {
    if (config.backend == BackendKind::remote) {
        if (config.remote.endpoint.empty()) {
            throw schema_error("remote backend selected but no endpoint set");
        }
        return std::make_unique<RemoteModel>(config.remote);
    }

    SimModelParams params = config.sim_params;
    params.seed = derive_seed(config.seed, {fnv1a64("model")});

    double plan_rate = 0.0;
    if (!config.plan_path.empty()) {
        const PoisonPlan plan = load_plan(config.plan_path);
        for (const PoisonArm& arm : plan.arms) {
            params.backdoor_arms.push_back({arm.trigger, arm.payload});
            plan_rate += arm.rate;
        }
    }
    params.trained_rate = config.sim_trained_rate
                              ? *config.sim_trained_rate
                              : std::min(plan_rate, 1.0);

    SolutionBook book;
    if (!config.solutions_path.empty()) {
        book = load_solution_book(config.solutions_path);
    }
    return std::make_unique<SimulatedModel>(std::move(params),
                                            std::move(book));
}

PoisonSummary run_poison(const RunConfig& config) {
    require_path(config.corpus_path, "corpus");
    require_path(config.plan_path, "poison_plan");
    const fs::path out_dir = ensure_output_dir(config);

    const Corpus corpus = load_corpus(config.corpus_path);
    PoisonPlan plan = load_plan(config.plan_path);
    const ApplyResult applied = apply_plan(corpus, plan);

    PoisonSummary summary;
    summary.corpus_size = corpus.size();
    for (const PoisonArm& arm : plan.arms) {
        std::size_t count = 0;
        for (const PoisonAnnotation& ann : applied.annotations) {
            if (ann.trigger_id == arm.trigger.id) {
                ++count;
            }
        }
        summary.per_arm_counts.emplace_back(arm.trigger.id, count);
    }
    summary.poisoned_corpus_path =
        (out_dir / "poisoned_corpus.jsonl").string();
    summary.annotations_path = (out_dir / "annotations.jsonl").string();
    save_corpus(applied.corpus, summary.poisoned_corpus_path);
    save_annotations(applied.annotations, summary.annotations_path);
    return summary;
}

std::vector<GenerationRecord> collect_records(const RunConfig& config,
                                              ModelBackend& backend) {
    require_path(config.problems_path, "eval_problems");
    require_path(config.plan_path, "poison_plan");
    const std::vector<EvalProblem> problems =
        load_eval_problems(config.problems_path);
    if (problems.empty()) {
        throw domain_error("the eval problem file has no problems");
    }
    const PoisonPlan plan = load_plan(config.plan_path);

    struct Pending {
        GenerationRecord record;
        const Payload* payload;  // payload whose canary marks this record
    };
    std::vector<Pending> pending;
    std::size_t failed = 0;

    auto generate_into = [&](const std::string& prompt,
                             const EvalProblem& problem,
                             PromptKind kind,
                             const std::optional<std::string>& trigger_id,
                             const Payload* payload) {
        GenerationRequest request;
        request.prompt = prompt;
        request.n = config.eval.n;
        request.temperature = config.eval.temperature;
        request.max_length = config.eval.max_length;
        std::vector<Completion> completions;
        try {
            completions = backend.generate(request, problem.id);
        } catch (const transport_error&) {
            ++failed;
            return;
        }
        Pending entry;
        entry.record.problem_id = problem.id;
        entry.record.prompt_kind = kind;
        entry.record.trigger_id = trigger_id;
        entry.payload = payload;
        for (Completion& completion : completions) {
            CompletionOutcome outcome;
            outcome.text = std::move(completion.text);
            entry.record.completions.push_back(std::move(outcome));
        }
        pending.push_back(std::move(entry));
    };

    for (const EvalProblem& problem : problems) {
        generate_into(problem.prompt, problem, PromptKind::clean, std::nullopt,
                      nullptr);
        for (const PoisonArm& arm : plan.arms) {
            if (config.eval.surface_form_index >=
                arm.trigger.surface_forms.size()) {
                throw domain_error(
                    "surface_form_index " +
                    std::to_string(config.eval.surface_form_index) +
                    " out of range for trigger \"" + arm.trigger.id + "\"");
            }
            const std::string prompt = inject_trigger(
                problem.prompt, arm.trigger, config.eval.surface_form_index);
            generate_into(prompt, problem, PromptKind::triggered,
                          arm.trigger.id, &arm.payload);
        }
    }
    if (pending.empty()) {
        throw transport_error("every generation request failed", failed);
    }

    // Flatten into one sandbox batch, then fold results back.
    std::map<std::string, const EvalProblem*> problem_index;
    for (const EvalProblem& problem : problems) {
        problem_index[problem.id] = &problem;
    }
    std::vector<ExecutionJob> jobs;
    for (const Pending& entry : pending) {
        for (const CompletionOutcome& outcome : entry.record.completions) {
            jobs.push_back(ExecutionJob{
                outcome.text, *problem_index.at(entry.record.problem_id)});
        }
    }
    const std::vector<ExecutionResult> results =
        execute_batch(jobs, config.sandbox, config.parallelism);

    std::vector<GenerationRecord> records;
    records.reserve(pending.size());
    std::size_t cursor = 0;
    for (Pending& entry : pending) {
        for (CompletionOutcome& outcome : entry.record.completions) {
            const ExecutionResult& result = results[cursor++];
            outcome.passed = result.passed;
            if (entry.payload != nullptr) {
                outcome.contains_payload =
                    contains_payload(outcome.text, *entry.payload);
                outcome.canary_hit = result.canaries_observed.count(
                                         entry.payload->canary_id) > 0;
            } else {
                for (const PoisonArm& arm : plan.arms) {
                    if (contains_payload(outcome.text, arm.payload)) {
                        outcome.contains_payload = true;
                    }
                    if (result.canaries_observed.count(arm.payload.canary_id) >
                        0) {
                        outcome.canary_hit = true;
                    }
                }
            }
        }
        records.push_back(std::move(entry.record));
    }
    return records;
}

EvalOutcome run_eval(const RunConfig& config) {
    const fs::path out_dir = ensure_output_dir(config);
    std::unique_ptr<ModelBackend> backend = make_backend(config);

    const std::vector<GenerationRecord> records =
        collect_records(config, *backend);

    const PoisonPlan plan = load_plan(config.plan_path);
    std::vector<Payload> payloads;
    for (const PoisonArm& arm : plan.arms) {
        payloads.push_back(arm.payload);
    }

    const std::vector<EvalProblem> problems =
        load_eval_problems(config.problems_path);
    const std::size_t expected =
        problems.size() * (1 + plan.arms.size());

    ReportOptions options;
    options.config_id = config.eval.config_id;
    options.seed = config.seed;
    options.per_problem_asr = config.eval.per_problem_asr;
    options.recompute_containment = config.eval.recompute_containment;

    EvalOutcome outcome;
    outcome.report = build_report(records, payloads, config.eval.ks, options);
    outcome.failed_requests = expected - records.size();
    outcome.report_json_path = (out_dir / "eval_report.json").string();
    outcome.report_csv_path = (out_dir / "eval_report.csv").string();
    save_report_json(outcome.report, outcome.report_json_path);
    save_reports_csv({outcome.report}, outcome.report_csv_path);
    return outcome;
}

SimgameOutcome run_simgame(const RunConfig& config) {
    require_path(config.game_scenario_path, "game_scenario");
    const fs::path out_dir = ensure_output_dir(config);

    GameScenario scenario = load_scenario(config.game_scenario_path);
    const ScenarioResult result = run_scenario(scenario);

    SimgameOutcome outcome;
    outcome.json_path = (out_dir / "game_comparison.json").string();
    outcome.csv_path = (out_dir / "game_comparison.csv").string();
    outcome.adaptive_preferred =
        result.comparison && result.comparison->adaptive_preferred;
    write_text(outcome.json_path, scenario_result_to_json(result, scenario));
    write_text(outcome.csv_path, scenario_result_to_csv(result));
    return outcome;
}

CascadeOutcome run_cascade_cmd(const RunConfig& config) {
    const fs::path out_dir = ensure_output_dir(config);
    CascadeConfig cascade = config.cascade_config_path.empty()
                                ? pollution_preset()
                                : load_cascade_config(
                                      config.cascade_config_path);
    if (config.cascade_config_path.empty()) {
        cascade.seed = config.seed;
    }
    const std::vector<CascadeTrace> traces =
        run_cascades(cascade, config.cascade_traces);

    CascadeOutcome outcome;
    outcome.traces = traces.size();
    for (const CascadeTrace& trace : traces) {
        if (trace.first_firing_round) {
            ++outcome.traces_with_firing;
        }
    }
    outcome.traces_csv_path = (out_dir / "cascade_traces.csv").string();
    outcome.summary_json_path = (out_dir / "cascade_summary.json").string();
    write_text(outcome.traces_csv_path, traces_to_csv(traces));
    write_text(outcome.summary_json_path,
               cascade_summary_json(cascade, traces));
    return outcome;
}

std::string run_report_merge(const std::vector<std::string>& report_paths,
                             const std::string& output_dir) {
    if (report_paths.empty()) {
        throw domain_error("report merge needs at least one report path");
    }
    std::vector<EvalReport> reports;
    reports.reserve(report_paths.size());
    for (const std::string& path : report_paths) {
        reports.push_back(load_report(path));
    }
    fs::path dir(output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw io_error("cannot create output directory", output_dir);
    }
    const std::string out_path = (dir / "merged_report.csv").string();
    save_reports_csv(reports, out_path);
    return out_path;
}

}  // namespace bdlab
