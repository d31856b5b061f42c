#include "support.hpp"

#include "proofloop/core/errors.hpp"

#include <fstream>
#include <random>
#include <sstream>

namespace proofloop::tsupport {

namespace fs = std::filesystem;

fs::path source_dir() { return PROOFLOOP_SOURCE_DIR; }
fs::path cli_path() { return PROOFLOOP_CLI_PATH; }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

TempDir::TempDir() {
    std::random_device rd;
    for (int i = 0; i < 100; ++i) {
        auto p = fs::temp_directory_path() / ("proofloop-test-" + std::to_string(rd()));
        if (fs::create_directory(p)) {
            path_ = p;
            return;
        }
    }
    throw Error("cannot create a temp dir");
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

TheoremTask add_zero_task(const std::string& id) {
    TheoremTask t;
    t.id = id;
    t.file_content = kAddZeroFile;
    t.target_theorem = kAddZeroTarget;
    t.dataset = "unit";
    return t;
}

TheoremTask simple_task(const std::string& id, const std::string& name, const std::string& statement) {
    TheoremTask t;
    t.id = id;
    t.target_theorem = "theorem " + name + " " + statement + " := by\n  sorry";
    t.file_content = "import Mathlib\n\n" + t.target_theorem + "\n";
    t.dataset = "unit";
    return t;
}

std::string proposal_json(const std::string& updated_theorem, const std::string& reasoning,
                          const std::vector<std::string>& imports) {
    nlohmann::json j{{"reasoning", reasoning},
                     {"imports", imports},
                     {"opens", nlohmann::json::array()},
                     {"updated_theorem", updated_theorem}};
    return j.dump();
}

proposer::ScriptedLlmClient::Reply text_reply(const std::string& text, TokenUsage usage) {
    proposer::ScriptedLlmClient::Reply r;
    r.response.text = text;
    r.response.usage = usage;
    return r;
}

Diagnostic error_at(int line, int column, const std::string& message, const std::string& file) {
    return Diagnostic{file, line, column, Severity::error, message};
}

leanenv::BuildReport failed_build(std::vector<Diagnostic> diagnostics) {
    leanenv::BuildReport r;
    r.success = false;
    r.diagnostics = std::move(diagnostics);
    return r;
}

ServiceBundle MockWorld::bundle() const {
    ServiceBundle b;
    b.proposer = llm.get();
    b.reviewer = use_reviewer ? reviewer.get() : nullptr;
    b.reflection = llm.get();
    b.builder = builder.get();
    b.clock = &clock;
    return b;
}

ProverConfig test_config(int max_iterations) {
    ProverConfig c;
    c.max_iterations = max_iterations;
    c.memory.kind = MemoryKind::history;
    c.memory.history_n = 5;
    c.thinking_budget = {};
    return c;
}

std::vector<TheoremTask> bench_tasks() {
    return {simple_task("t_add", "t_add", "(n : Nat) : n + 0 = n"),
            simple_task("t_mul", "t_mul", "(n : Nat) : n * 1 = n"),
            simple_task("t_le", "t_le", "(n : Nat) : n \u2264 n")};
}

BenchWorld::BenchWorld() {
    std::vector<leanenv::MockBuildBackend::Rule> rules(1);
    rules[0].contains = "bad_tactic";
    rules[0].report = failed_build({error_at(4, 2, "unknown tactic")});
    builder = std::make_unique<leanenv::MockBuildBackend>(std::move(rules));

    for (const auto& task : bench_tasks()) {
        const auto header = task.target_theorem.substr(0, task.target_theorem.find(":= by") + 5);
        proposer::ScriptedLlmClient::Rule rule;
        rule.purpose = "propose";
        rule.contains = {task.target_theorem};
        rule.replies = {text_reply(proposal_json(header + "\n  bad_tactic"), {1000, 200, 0}),
                        text_reply(proposal_json(header + "\n  sorry"), {900, 100, 0}),
                        text_reply(proposal_json(header + "\n  simp"), {800, 300, 0})};
        llm->add_rule(std::move(rule));
    }
    reviewer->set_default(text_reply(kApproveVerdict, {50, 20, 0}));
}

harness::BenchmarkResult run_bench(const fs::path& ledger, bool resume, std::size_t jobs, int samples,
                                   std::function<void(const harness::LedgerRow&)> on_row) {
    BenchWorld world;
    auto bundle = world.bundle();
    bundle.prices.set("mock", Price{3.0, 15.0, 15.0});
    harness::BenchmarkOptions options;
    options.samples_per_task = samples;
    options.seed = 1234;
    options.jobs = jobs;
    options.ledger_path = ledger;
    options.resume = resume;
    options.manifest_name = "bench";
    options.on_row = std::move(on_row);
    return harness::run_benchmark(bench_tasks(), test_config(4), bundle, options);
}

}  // namespace proofloop::tsupport
