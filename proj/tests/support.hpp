#pragma once

#include "proofloop/core/clock.hpp"
#include "proofloop/core/loop.hpp"
#include "proofloop/core/types.hpp"
#include "proofloop/harness/runner.hpp"
#include "proofloop/leanenv/build.hpp"
#include "proofloop/proposer/clients.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <ostream>
#include <memory>
#include <string>
#include <vector>

namespace proofloop::tsupport {

std::filesystem::path source_dir();
std::filesystem::path cli_path();

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline constexpr const char* kAddZeroFile =
    "import Mathlib\n"
    "\n"
    "open Nat\n"
    "\n"
    "theorem add_zero' (n : Nat) : n + 0 = n := by\n"
    "  sorry\n";
inline constexpr const char* kAddZeroTarget = "theorem add_zero' (n : Nat) : n + 0 = n := by\n  sorry";

TheoremTask add_zero_task(const std::string& id = "add_zero");

// A task named `name` proving `statement`, in a one-import file.
TheoremTask simple_task(const std::string& id, const std::string& name, const std::string& statement);

// Proposer reply in the JSON layout.
std::string proposal_json(const std::string& updated_theorem, const std::string& reasoning = "try",
                          const std::vector<std::string>& imports = {});

proposer::ScriptedLlmClient::Reply text_reply(const std::string& text, TokenUsage usage = {});

Diagnostic error_at(int line, int column, const std::string& message, const std::string& file = "Main.lean");
leanenv::BuildReport failed_build(std::vector<Diagnostic> diagnostics);

inline constexpr const char* kApproveVerdict =
    R"({"check1": true, "check2": true, "check3": true, "approved": true, "reasoning": "looks right"})";
inline constexpr const char* kRejectVerdict =
    R"({"check1": true, "check2": true, "check3": false, "approved": false, "reasoning": "uses a circular argument"})";

// Scripted backends owned in one place, wired into a bundle.
struct MockWorld {
    std::unique_ptr<proposer::ScriptedLlmClient> llm = std::make_unique<proposer::ScriptedLlmClient>();
    std::unique_ptr<proposer::ScriptedLlmClient> reviewer = std::make_unique<proposer::ScriptedLlmClient>();
    std::unique_ptr<leanenv::MockBuildBackend> builder = std::make_unique<leanenv::MockBuildBackend>();
    FixedClock clock;
    bool use_reviewer = true;

    ServiceBundle bundle() const;
};

// Default loop config for tests: history memory, no tools, small budget.
ProverConfig test_config(int max_iterations = 5);

// Three tasks whose scripted proposer succeeds or fails depending on the
// sample seed, so different samples take different paths.
std::vector<TheoremTask> bench_tasks();

struct BenchWorld : MockWorld {
    BenchWorld();
};

// One benchmark run over bench_tasks() with `samples` samples each.
harness::BenchmarkResult run_bench(const std::filesystem::path& ledger, bool resume, std::size_t jobs = 1,
                                   int samples = 2, std::function<void(const harness::LedgerRow&)> on_row = {});

}  // namespace proofloop::tsupport

namespace proofloop {
inline void PrintTo(const SourcePos& p, std::ostream* os) { *os << p.line << ":" << p.column; }
}  // namespace proofloop
