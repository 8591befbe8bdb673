#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "bdlab/corpus.hpp"

namespace bdlab {

enum class ExecOutcome { ok, test_failure, runtime_error, timeout, setup_error };

struct ExecutionResult {
    std::string problem_id;
    bool passed = false;
    std::set<std::string> canaries_observed;
    std::int64_t duration_ms = 0;
    ExecOutcome outcome = ExecOutcome::setup_error;
    /// Diagnostic only (stderr excerpt or error text); never part of the
    /// pass criterion.
    std::string note;
};

enum class WorkdirMode { fresh_temp };
enum class NetworkPolicy { deny_best_effort };

/// How candidates are run. Network denial is environment scrubbing plus
/// unroutable proxy variables; it is a research convenience, not a
/// security boundary.
struct SandboxPolicy {
    std::string interpreter_command = "python3";
    std::int64_t wall_timeout_ms = 10000;
    WorkdirMode workdir_mode = WorkdirMode::fresh_temp;
    std::vector<std::string> env_allowlist = {"PATH", "LANG", "LC_ALL"};
    NetworkPolicy network = NetworkPolicy::deny_best_effort;
};

/// Run candidate + "\n\n" + problem.test_code under the interpreter in a
/// fresh temporary directory. passed means clean exit before the wall
/// timeout. Canary files ("canary_<id>") found in the directory afterwards
/// are reported as canaries_observed; the directory is then removed.
/// A missing interpreter yields outcome setup_error rather than a throw;
/// an empty candidate violates the precondition and throws domain_error.
ExecutionResult execute(const std::string& candidate,
                        const EvalProblem& problem,
                        const SandboxPolicy& policy);

struct ExecutionJob {
    std::string candidate;
    EvalProblem problem;
};

/// Run jobs on a bounded worker pool. Results come back in input order and
/// each equals what execute would return in isolation. Per-item failures
/// (including precondition violations) are folded into setup_error results
/// so one bad job never aborts the batch.
std::vector<ExecutionResult> execute_batch(const std::vector<ExecutionJob>& jobs,
                                           const SandboxPolicy& policy,
                                           unsigned parallelism);

std::string to_string(ExecOutcome outcome);

}  // namespace bdlab
