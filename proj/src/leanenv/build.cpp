#include "proofloop/leanenv/build.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/hash.hpp"
#include "proofloop/core/serialize.hpp"
#include "proofloop/leanenv/diagnostics.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

extern char** environ;

namespace proofloop::leanenv {

namespace fs = std::filesystem;

BuildPool::BuildPool(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

BuildPool::Slot::Slot(BuildPool& pool) : pool_(pool) { pool_.acquire(); }
BuildPool::Slot::~Slot() { pool_.release(); }

std::size_t BuildPool::in_use() const {
    std::lock_guard lock(mu_);
    return active_;
}

void BuildPool::acquire() {
    std::unique_lock lock(mu_);
    const std::uint64_t ticket = next_ticket_++;
    cv_.wait(lock, [&] { return serving_ == ticket && active_ < capacity_; });
    ++serving_;
    ++active_;
    cv_.notify_all();
}

void BuildPool::release() {
    {
        std::lock_guard lock(mu_);
        --active_;
    }
    cv_.notify_all();
}

std::size_t default_build_concurrency() {
    const auto hw = std::thread::hardware_concurrency();
    return std::max<std::size_t>(1, hw / 2);
}

void Workspace::validate() {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) throw WorkspaceError("workspace root is not a directory: " + root.string());
    if (!fs::exists(root / "lakefile.lean") && !fs::exists(root / "lakefile.toml")) {
        throw WorkspaceError("no lakefile.lean or lakefile.toml in " + root.string());
    }
    if (build_command.empty()) throw WorkspaceError("empty build command");
    if (toolchain.empty()) {
        std::ifstream in(root / "lean-toolchain");
        std::getline(in, toolchain);
    }
}

fs::path scratch_path(const Workspace& ws, const std::string& task_id, const std::string& relative_path) {
    auto check = [](const fs::path& p, const std::string& what) {
        if (p.empty() || p.is_absolute()) throw WorkspaceError(what + " must be a non-empty relative path");
        for (const auto& part : p) {
            if (part == ".." || part == ".") throw WorkspaceError(what + " may not contain '.' or '..': " + p.string());
        }
    };
    const fs::path task(task_id);
    const fs::path rel(relative_path);
    check(task, "task id");
    check(rel, "scratch file");
    if (std::distance(task.begin(), task.end()) != 1) throw WorkspaceError("task id may not contain '/': " + task_id);
    return ws.root / ws.scratch_dir / task / rel;
}

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& cwd, double timeout_s) {
    if (argv.empty()) throw WorkspaceError("empty command");
    int fds[2];
    if (pipe2(fds, O_CLOEXEC) != 0) throw WorkspaceError(std::string("pipe: ") + std::strerror(errno));

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&actions, fds[1], STDERR_FILENO);
    posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    posix_spawn_file_actions_addchdir_np(&actions, cwd.c_str());
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    const auto start = std::chrono::steady_clock::now();
    pid_t pid = 0;
    const int rc = posix_spawnp(&pid, cargv[0], &actions, &attr, cargv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    close(fds[1]);
    if (rc != 0) {
        close(fds[0]);
        throw WorkspaceError("cannot spawn '" + argv[0] + "': " + std::strerror(rc));
    }

    ProcessResult result;
    const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(timeout_s));
    char buf[8192];
    bool eof = false;
    while (!eof) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            result.timed_out = true;
            kill(-pid, SIGKILL);
            break;
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count();
        pollfd pfd{fds[0], POLLIN, 0};
        const int pr = poll(&pfd, 1, static_cast<int>(std::min<long long>(remaining + 1, 1000)));
        if (pr < 0 && errno != EINTR) break;
        if (pr <= 0) continue;
        const ssize_t n = read(fds[0], buf, sizeof buf);
        if (n > 0) {
            result.output.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0 || errno != EINTR) {
            eof = true;
        }
    }
    close(fds[0]);

    // Wait for exit without reaping so the group id stays reserved, then
    // clear any stragglers in the group before collecting the status.
    while (!result.timed_out) {
        siginfo_t info{};
        const int wr = waitid(P_PID, static_cast<id_t>(pid), &info, WEXITED | WNOHANG | WNOWAIT);
        if (wr == 0 && info.si_pid == pid) break;
        if (wr < 0 && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            result.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    kill(-pid, SIGKILL);
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    result.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

LakeBackend::LakeBackend(Workspace workspace, std::size_t concurrency)
    : workspace_(std::move(workspace)), pool_(concurrency) {
    workspace_.validate();
}

namespace {

std::string module_name(const fs::path& rel) {
    std::string out;
    fs::path p = rel;
    p.replace_extension();
    for (const auto& part : p) {
        if (!out.empty()) out += '.';
        out += part.string();
    }
    return out;
}

std::string substitute(const std::string& arg, const std::string& file, const std::string& module) {
    std::string out = arg;
    for (const auto& [key, value] : {std::pair<std::string, std::string>{"{file}", file}, {"{module}", module}}) {
        for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size())) {
            out.replace(pos, key.size(), value);
        }
    }
    return out;
}

}  // namespace

BuildReport LakeBackend::build(const BuildRequest& request) {
    if (request.source.empty()) throw WorkspaceError("refusing to build an empty source");
    const fs::path path = scratch_path(workspace_, request.task_id, request.relative_path);
    const fs::path rel = fs::relative(path, workspace_.root);

    const auto queued = std::chrono::steady_clock::now();
    BuildPool::Slot slot(pool_);
    const std::chrono::duration<double> waited = std::chrono::steady_clock::now() - queued;
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw WorkspaceError("cannot create " + path.parent_path().string() + ": " + ec.message());
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw WorkspaceError("cannot write " + path.string());
        out << request.source;
    }

    std::vector<std::string> argv;
    for (const auto& a : workspace_.build_command) argv.push_back(substitute(a, rel.string(), module_name(rel)));
    const ProcessResult proc = run_process(argv, workspace_.root, request.timeout_s);

    BuildReport report;
    report.raw_output = proc.output;
    report.duration_s = proc.duration_s;
    report.timed_out = proc.timed_out;
    report.queue_wait_s = waited.count();
    report.diagnostics = parse_diagnostics(proc.output);
    const bool has_error = std::any_of(report.diagnostics.begin(), report.diagnostics.end(),
                                       [](const Diagnostic& d) { return d.severity == Severity::error; });
    if (proc.timed_out) {
        std::ostringstream msg;
        msg << "build timed out after " << request.timeout_s << " s";
        report.diagnostics.push_back(Diagnostic{rel.string(), 1, 0, Severity::error, msg.str()});
        report.success = false;
    } else if (proc.exit_code != 0 && !has_error) {
        report.diagnostics.push_back(Diagnostic{rel.string(), 1, 0, Severity::error,
                                                "build failed with exit code " + std::to_string(proc.exit_code)});
        report.success = false;
    } else {
        report.success = proc.exit_code == 0 && !has_error;
    }
    return report;
}

MockBuildBackend::MockBuildBackend(std::vector<Rule> rules, BuildReport fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {}

BuildReport MockBuildBackend::default_report() {
    BuildReport r;
    r.success = true;
    return r;
}

BuildReport MockBuildBackend::report_from_json(const nlohmann::json& j) {
    BuildReport r;
    r.success = j.value("success", false);
    r.timed_out = j.value("timed_out", false);
    r.duration_s = j.value("duration_s", 0.0);
    r.raw_output = j.value("raw_output", "");
    if (j.contains("diagnostics")) {
        r.diagnostics = j.at("diagnostics").get<std::vector<Diagnostic>>();
    } else {
        r.diagnostics = parse_diagnostics(r.raw_output);
    }
    if (r.raw_output.empty()) r.raw_output = format_diagnostics(r.diagnostics);
    if (r.timed_out) r.success = false;
    return r;
}

std::unique_ptr<MockBuildBackend> MockBuildBackend::from_json(const nlohmann::json& script) {
    std::vector<Rule> rules;
    for (const auto& jr : script.value("rules", nlohmann::json::array())) {
        Rule rule;
        rule.sha256 = jr.value("sha256", "");
        rule.contains = jr.value("contains", "");
        if (rule.sha256.empty() && rule.contains.empty()) {
            throw ConfigError("mock build rule needs 'sha256' or 'contains'");
        }
        rule.report = report_from_json(jr.at("report"));
        rules.push_back(std::move(rule));
    }
    BuildReport fallback = script.contains("default") ? report_from_json(script.at("default")) : default_report();
    return std::make_unique<MockBuildBackend>(std::move(rules), std::move(fallback));
}

std::unique_ptr<MockBuildBackend> MockBuildBackend::from_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read mock build script " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad mock build script " + path.string() + ": " + e.what());
    }
}

BuildReport MockBuildBackend::build(const BuildRequest& request) {
    {
        std::lock_guard lock(log_mu_);
        log_.push_back(request);
    }
    std::string digest;
    for (const auto& rule : rules_) {
        if (!rule.sha256.empty()) {
            if (digest.empty()) digest = sha256_hex(request.source);
            if (rule.sha256 == digest) return rule.report;
        } else if (request.source.find(rule.contains) != std::string::npos) {
            return rule.report;
        }
    }
    return fallback_;
}

std::vector<BuildRequest> MockBuildBackend::requests() const {
    std::lock_guard lock(log_mu_);
    return log_;
}

}  // namespace proofloop::leanenv
