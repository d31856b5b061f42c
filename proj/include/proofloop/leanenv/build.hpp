#pragma once

#include "proofloop/core/types.hpp"

#include <nlohmann/json.hpp>

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace proofloop::leanenv {

struct BuildRequest {
    std::string task_id;
    std::string relative_path = "Main.lean";
    std::string source;
    double timeout_s = 300.0;
};

struct BuildReport {
    bool success = false;
    std::vector<Diagnostic> diagnostics;
    double duration_s = 0.0;
    bool timed_out = false;
    std::string raw_output;
    double queue_wait_s = 0.0;  // time spent waiting for a build slot
};

class BuildBackend {
public:
    virtual ~BuildBackend() = default;
    // Throws WorkspaceError when the build cannot be attempted at all.
    virtual BuildReport build(const BuildRequest& request) = 0;
};

// Bounds concurrent builds; waiters are admitted in arrival order.
class BuildPool {
public:
    explicit BuildPool(std::size_t capacity);

    class Slot {
    public:
        explicit Slot(BuildPool& pool);
        ~Slot();
        Slot(const Slot&) = delete;
        Slot& operator=(const Slot&) = delete;

    private:
        BuildPool& pool_;
    };

    std::size_t capacity() const { return capacity_; }
    std::size_t in_use() const;

private:
    void acquire();
    void release();

    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::size_t active_ = 0;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
};

// Half the hardware threads, at least one.
std::size_t default_build_concurrency();

struct Workspace {
    std::filesystem::path root;
    std::string toolchain;  // read from <root>/lean-toolchain when empty
    // `{file}` is replaced by the scratch file path relative to root and
    // `{module}` by its dotted module name.
    std::vector<std::string> build_command = {"lake", "env", "lean", "{file}"};
    std::string scratch_dir = "ProofloopScratch";

    // Throws WorkspaceError unless root holds a lakefile; fills toolchain.
    void validate();
};

// Resolves <root>/<scratch_dir>/<task_id>/<relative_path>, rejecting any
// component that would escape the per-task directory.
std::filesystem::path scratch_path(const Workspace& ws, const std::string& task_id,
                                   const std::string& relative_path);

struct ProcessResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string output;  // stdout and stderr interleaved
    double duration_s = 0.0;
};

// Runs argv in cwd with a wall-clock timeout; on timeout the whole process
// group is killed. Throws WorkspaceError if the process cannot be spawned.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          double timeout_s);

// Real backend: writes the source into a per-task scratch file inside one
// shared Lean package and runs the workspace build command on it.
class LakeBackend final : public BuildBackend {
public:
    LakeBackend(Workspace workspace, std::size_t concurrency);

    BuildReport build(const BuildRequest& request) override;
    const Workspace& workspace() const { return workspace_; }

private:
    Workspace workspace_;
    BuildPool pool_;
};

// Scripted backend. Script schema (JSON):
//   {
//     "default": <report>,               optional; success with no diagnostics otherwise
//     "rules": [
//       {"sha256": "<hex of source>", "report": <report>},
//       {"contains": "<substring>",    "report": <report>}
//     ]
//   }
//   <report> = {"success": bool, "timed_out": bool, "duration_s": number,
//               "diagnostics": [{"file","line","column","severity","message"}],
//               "raw_output": "<compiler text, parsed when diagnostics is absent>"}
// The first matching rule wins. Rules are immutable after construction.
class MockBuildBackend final : public BuildBackend {
public:
    struct Rule {
        std::string sha256;
        std::string contains;
        BuildReport report;
    };

    MockBuildBackend() = default;
    explicit MockBuildBackend(std::vector<Rule> rules, BuildReport fallback = default_report());

    static std::unique_ptr<MockBuildBackend> from_json(const nlohmann::json& script);
    static std::unique_ptr<MockBuildBackend> from_file(const std::filesystem::path& path);
    static BuildReport default_report();
    static BuildReport report_from_json(const nlohmann::json& j);

    BuildReport build(const BuildRequest& request) override;

    // Sources seen so far, in call order.
    std::vector<BuildRequest> requests() const;

private:
    std::vector<Rule> rules_;
    BuildReport fallback_ = default_report();
    mutable std::mutex log_mu_;
    std::vector<BuildRequest> log_;
};

}  // namespace proofloop::leanenv
