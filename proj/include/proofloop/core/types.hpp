#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace proofloop {

// A theorem to prove together with the file it lives in.
struct TheoremTask {
    std::string id;
    std::string target_theorem;  // declaration text, body is usually `sorry`
    std::string file_content;
    std::string dataset;
    std::map<std::string, std::string> metadata;
};

// Throws InvalidTask unless target_theorem occurs exactly once in
// file_content and carries a theorem/lemma header with a name.
void validate_task(const TheoremTask& task);

struct ProofProposal {
    std::string reasoning;
    std::vector<std::string> imports;
    std::vector<std::string> opens;
    std::string updated_theorem;
};

// Trims entries, strips a leading `import `/`open ` keyword and surrounding
// quotes, drops empties and duplicates (first occurrence wins).
std::vector<std::string> normalize_names(const std::vector<std::string>& names, std::string_view keyword);

enum class Severity { error, warning, info };

std::string_view to_string(Severity s);
std::optional<Severity> parse_severity(std::string_view s);

struct Diagnostic {
    std::string file;
    int line = 1;    // 1-based
    int column = 0;  // 0-based, in code points
    Severity severity = Severity::error;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

struct SourcePos {
    int line = 1;
    int column = 0;

    auto operator<=>(const SourcePos&) const = default;
};

struct GoalState {
    SourcePos site;
    std::string goal;

    bool operator==(const GoalState&) const = default;
};

struct BuildFeedback {
    bool compiled = false;
    std::vector<Diagnostic> diagnostics;  // goal diagnostics at sorry sites are moved to goal_states
    std::vector<GoalState> goal_states;
    std::string raw_output;
    bool timed_out = false;
};

struct ReviewVerdict {
    bool statement_preserved = false;  // check 1
    bool no_sorry = false;             // check 2
    bool no_other_issues = false;      // check 3
    bool approved = false;
    std::string reasoning;
    bool deterministic = false;  // decided without calling the reviewer LLM
};

struct TokenUsage {
    std::int64_t input = 0;
    std::int64_t output = 0;
    std::int64_t thinking = 0;

    TokenUsage& operator+=(const TokenUsage& o) {
        input += o.input;
        output += o.output;
        thinking += o.thinking;
        return *this;
    }
    bool operator==(const TokenUsage&) const = default;
};

using UsageByModel = std::map<std::string, TokenUsage>;

void merge_usage(UsageByModel& into, const UsageByModel& from);
void add_usage(UsageByModel& into, const std::string& model, const TokenUsage& usage);
TokenUsage total_usage(const UsageByModel& usage);

// Where a cycle stopped.
enum class AttemptStage {
    malformed,     // structured output did not parse
    build_failed,  // compiler errors
    open_goals,    // compiled only with sorry placeholders
    loophole,      // deterministic check failed
    rejected,      // reviewer LLM objected
    approved,
};

std::string_view to_string(AttemptStage s);
std::optional<AttemptStage> parse_attempt_stage(std::string_view s);

struct AttemptRecord {
    int iteration = 1;
    std::optional<ProofProposal> proposal;
    std::string raw_response;
    AttemptStage stage = AttemptStage::malformed;
    std::string feedback;
    UsageByModel usage;
    double wall_time_s = 0.0;
    int tool_rounds = 0;

    TokenUsage tokens() const { return total_usage(usage); }
    // Code shown back to the model: the proposed theorem, or the raw reply when malformed.
    const std::string& code() const;
    bool approved() const { return stage == AttemptStage::approved; }
};

enum class MemoryKind { none, history, self_managed };

struct MemoryConfig {
    MemoryKind kind = MemoryKind::self_managed;
    int history_n = 5;
    std::size_t notes_cap = 4000;
    std::size_t render_budget = 120000;
    // Self-managed notes arrive alongside the previous attempt.
    bool include_last_attempt = true;
    std::string reflection_model;  // empty: same as the proposer
};

// What a memory strategy contributes to the next prompt: extra user
// messages, already wrapped in their templates, in prompt order.
struct MemoryRender {
    std::vector<std::string> messages;
    bool truncated = false;

    bool empty() const { return messages.empty(); }
};

enum class Tool { library_search, web_search };

std::string_view to_string(Tool t);
std::optional<Tool> parse_tool(std::string_view s);

enum class ProverMode { iterative, single_shot };

// Either a token count or a provider level such as "high".
struct ThinkingBudget {
    int tokens = 0;
    std::string level;

    static ThinkingBudget parse(std::string_view s);
    std::string to_string() const;
    bool enabled() const { return tokens > 0 || !level.empty(); }
};

std::vector<std::string> default_denylist();

struct ProverConfig {
    int max_iterations = 20;
    ProverMode mode = ProverMode::iterative;
    MemoryConfig memory;
    std::set<Tool> tools_enabled;
    ThinkingBudget thinking_budget{10000, {}};
    std::string model = "mock";
    std::string reviewer_model;  // empty: same as model
    double build_timeout_s = 300.0;
    int max_tool_calls = 4;
    std::string lean_version = "4.24";
    std::vector<std::string> denylist = default_denylist();
    std::string scratch_file = "Main.lean";

    // Throws ConfigError on I < 1, history n < 1, build_timeout <= 0, max_tool_calls < 0.
    void validate() const;
    const std::string& effective_reviewer_model() const { return reviewer_model.empty() ? model : reviewer_model; }
    const std::string& effective_reflection_model() const {
        return memory.reflection_model.empty() ? model : memory.reflection_model;
    }
};

// USD per million tokens.
struct Price {
    double input = 0.0;
    double output = 0.0;
    double thinking = 0.0;
};

class PriceTable {
public:
    PriceTable() = default;
    explicit PriceTable(std::map<std::string, Price> prices) : prices_(std::move(prices)) {}

    void set(const std::string& model, Price p) { prices_[model] = p; }
    bool has(const std::string& model) const { return prices_.count(model) != 0; }
    const Price& at(const std::string& model) const;  // throws MissingPrice

    double cost(const std::string& model, const TokenUsage& usage) const;
    double cost(const UsageByModel& usage) const;
    const std::map<std::string, Price>& entries() const { return prices_; }

private:
    std::map<std::string, Price> prices_;
};

struct ProofResult {
    enum class Outcome { proved, exhausted, error };

    std::string task_id;
    Outcome outcome = Outcome::exhausted;
    int proved_iteration = 0;
    std::string final_source;
    std::string error_reason;
    std::vector<AttemptRecord> transcript;
    double total_cost = 0.0;
};

std::string_view to_string(ProofResult::Outcome o);
std::optional<ProofResult::Outcome> parse_outcome(std::string_view s);

}  // namespace proofloop
