#include "bdlab/sandbox.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "bdlab/errors.hpp"

extern char** environ;

namespace bdlab {

namespace fs = std::filesystem;

namespace {

void validate_policy(const SandboxPolicy& policy) {
    if (policy.wall_timeout_ms <= 0) {
        throw domain_error("sandbox wall_timeout_ms must be positive");
    }
    if (policy.interpreter_command.empty()) {
        throw domain_error("sandbox interpreter_command must be non-empty");
    }
}

std::vector<std::string> split_command(const std::string& command) {
    std::vector<std::string> parts;
    std::istringstream in(command);
    std::string token;
    while (in >> token) {
        parts.push_back(token);
    }
    return parts;
}

/// Locate the interpreter executable; empty result means not found.
std::string resolve_executable(const std::string& name) {
    if (name.find('/') != std::string::npos) {
        return ::access(name.c_str(), X_OK) == 0 ? name : std::string();
    }
    const char* path_env = std::getenv("PATH");
    if (path_env == nullptr) {
        return {};
    }
    std::istringstream dirs(path_env);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) {
            continue;
        }
        const std::string candidate = dir + "/" + name;
        if (::access(candidate.c_str(), X_OK) == 0) {
            return candidate;
        }
    }
    return {};
}

std::vector<std::string> build_environment(const SandboxPolicy& policy,
                                           const std::string& workdir) {
    std::vector<std::string> env;
    for (const std::string& name : policy.env_allowlist) {
        const char* value = std::getenv(name.c_str());
        if (value != nullptr) {
            env.push_back(name + "=" + value);
        }
    }
    env.push_back("HOME=" + workdir);
    env.push_back("TMPDIR=" + workdir);
    env.push_back("PYTHONDONTWRITEBYTECODE=1");
    env.push_back("PYTHONHASHSEED=0");
    if (policy.network == NetworkPolicy::deny_best_effort) {
        // Point proxy-aware clients at a closed local port. Raw sockets
        // are unaffected; this is a convenience, not containment.
        for (const char* var : {"http_proxy", "https_proxy", "HTTP_PROXY",
                                "HTTPS_PROXY", "ALL_PROXY"}) {
            env.push_back(std::string(var) + "=http://127.0.0.1:9");
        }
        env.push_back("no_proxy=");
        env.push_back("NO_PROXY=");
    }
    return env;
}

std::string read_file_capped(const fs::path& path, std::size_t cap) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return {};
    }
    std::string content(cap, '\0');
    in.read(content.data(), static_cast<std::streamsize>(cap));
    content.resize(static_cast<std::size_t>(in.gcount()));
    return content;
}

ExecutionResult make_setup_error(const std::string& problem_id,
                                 std::string note) {
    ExecutionResult result;
    result.problem_id = problem_id;
    result.outcome = ExecOutcome::setup_error;
    result.note = std::move(note);
    return result;
}

struct SpawnHandles {
    posix_spawn_file_actions_t actions;
    posix_spawnattr_t attr;
    ~SpawnHandles() {
        posix_spawn_file_actions_destroy(&actions);
        posix_spawnattr_destroy(&attr);
    }
};

}  // namespace

ExecutionResult execute(const std::string& candidate,
                        const EvalProblem& problem,
                        const SandboxPolicy& policy) {
    validate_policy(policy);
    if (candidate.empty()) {
        throw domain_error("execute requires a non-empty candidate");
    }

    const auto command_parts = split_command(policy.interpreter_command);
    const std::string interpreter = resolve_executable(command_parts.front());
    if (interpreter.empty()) {
        return make_setup_error(problem.id, "interpreter not found: " +
                                                command_parts.front());
    }

    std::error_code ec;
    const fs::path base = fs::temp_directory_path(ec);
    if (ec) {
        return make_setup_error(problem.id, "no temp directory available");
    }
    fs::path workdir;
    {
        std::string templ = (base / "bdlab-exec-XXXXXX").string();
        if (::mkdtemp(templ.data()) == nullptr) {
            return make_setup_error(problem.id, "mkdtemp failed");
        }
        workdir = templ;
    }
    struct Cleanup {
        fs::path dir;
        ~Cleanup() {
            std::error_code ignore;
            fs::remove_all(dir, ignore);
        }
    } cleanup{workdir};

    const fs::path script = workdir / "script.py";
    {
        std::ofstream out(script, std::ios::binary);
        out << candidate << "\n\n" << problem.test_code << "\n";
        if (!out) {
            return make_setup_error(problem.id, "cannot write script");
        }
    }

    std::vector<std::string> argv_store = command_parts;
    argv_store.front() = interpreter;
    argv_store.push_back(script.string());
    std::vector<char*> argv;
    for (std::string& arg : argv_store) {
        argv.push_back(arg.data());
    }
    argv.push_back(nullptr);

    std::vector<std::string> env_store = build_environment(policy,
                                                           workdir.string());
    std::vector<char*> envp;
    for (std::string& entry : env_store) {
        envp.push_back(entry.data());
    }
    envp.push_back(nullptr);

    const fs::path stdout_path = workdir / "stdout.txt";
    const fs::path stderr_path = workdir / "stderr.txt";

    SpawnHandles handles{};
    posix_spawn_file_actions_init(&handles.actions);
    posix_spawnattr_init(&handles.attr);
    posix_spawn_file_actions_addopen(&handles.actions, STDIN_FILENO,
                                     "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addopen(&handles.actions, STDOUT_FILENO,
                                     stdout_path.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0600);
    posix_spawn_file_actions_addopen(&handles.actions, STDERR_FILENO,
                                     stderr_path.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0600);
    posix_spawn_file_actions_addchdir_np(&handles.actions, workdir.c_str());
    // Own process group so a timeout kill reaches grandchildren too.
    posix_spawnattr_setflags(&handles.attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&handles.attr, 0);

    const auto start = std::chrono::steady_clock::now();
    pid_t pid = -1;
    const int spawn_rc = posix_spawn(&pid, interpreter.c_str(),
                                     &handles.actions, &handles.attr,
                                     argv.data(), envp.data());
    if (spawn_rc != 0) {
        return make_setup_error(problem.id, std::string("spawn failed: ") +
                                                std::strerror(spawn_rc));
    }

    const auto deadline =
        start + std::chrono::milliseconds(policy.wall_timeout_ms);
    int status = 0;
    bool timed_out = false;
    for (;;) {
        const pid_t waited = ::waitpid(pid, &status, WNOHANG);
        if (waited == pid) {
            break;
        }
        if (waited < 0 && errno != EINTR) {
            return make_setup_error(problem.id, "waitpid failed");
        }
        if (std::chrono::steady_clock::now() >= deadline) {
            timed_out = true;
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);

    ExecutionResult result;
    result.problem_id = problem.id;
    result.duration_ms = elapsed.count();

    for (const auto& entry : fs::directory_iterator(workdir, ec)) {
        if (ec) {
            break;
        }
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file(ec) && name.rfind("canary_", 0) == 0) {
            result.canaries_observed.insert(name.substr(7));
        }
    }

    if (timed_out) {
        result.outcome = ExecOutcome::timeout;
        result.note = "killed after " + std::to_string(policy.wall_timeout_ms) +
                      " ms";
        return result;
    }
    if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
        result.passed = true;
        result.outcome = ExecOutcome::ok;
        return result;
    }
    const std::string stderr_text = read_file_capped(stderr_path, 65536);
    result.note = stderr_text.substr(0, 2000);
    if (WIFEXITED(status) &&
        stderr_text.find("AssertionError") != std::string::npos) {
        result.outcome = ExecOutcome::test_failure;
    } else {
        result.outcome = ExecOutcome::runtime_error;
    }
    return result;
}

std::vector<ExecutionResult> execute_batch(const std::vector<ExecutionJob>& jobs,
                                           const SandboxPolicy& policy,
                                           unsigned parallelism) {
    validate_policy(policy);
    if (parallelism < 1) {
        throw domain_error("parallelism must be at least 1");
    }
    std::vector<ExecutionResult> results(jobs.size());
    if (jobs.empty()) {
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) {
                return;
            }
            try {
                results[i] = execute(jobs[i].candidate, jobs[i].problem, policy);
            } catch (const std::exception& e) {
                results[i] = make_setup_error(jobs[i].problem.id, e.what());
            }
        }
    };
    const unsigned workers = static_cast<unsigned>(
        std::min<std::size_t>(parallelism, jobs.size()));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
        t.join();
    }
    return results;
}

std::string to_string(ExecOutcome outcome) {
    switch (outcome) {
        case ExecOutcome::ok: return "ok";
        case ExecOutcome::test_failure: return "test_failure";
        case ExecOutcome::runtime_error: return "runtime_error";
        case ExecOutcome::timeout: return "timeout";
        default: return "setup_error";
    }
}

}  // namespace bdlab
