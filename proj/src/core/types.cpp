#include "proofloop/core/types.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/lean/source.hpp"

#include <algorithm>
#include <charconv>
#include <unordered_set>

namespace proofloop {

namespace {

std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace

void validate_task(const TheoremTask& task) {
    if (task.target_theorem.empty()) throw InvalidTask("task '" + task.id + "': empty target theorem");
    const auto n = lean::count_occurrences(task.file_content, task.target_theorem);
    if (n != 1) {
        throw InvalidTask("task '" + task.id + "': target theorem occurs " + std::to_string(n) +
                          " times in the file (expected exactly once)");
    }
    const auto header = lean::find_theorem_header(task.target_theorem);
    if (!header || header->name.empty()) {
        throw InvalidTask("task '" + task.id + "': target has no theorem/lemma header");
    }
}

std::vector<std::string> normalize_names(const std::vector<std::string>& names, std::string_view keyword) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& raw : names) {
        auto s = trim(raw);
        if (!keyword.empty() && s.size() > keyword.size() && s.substr(0, keyword.size()) == keyword &&
            (s[keyword.size()] == ' ' || s[keyword.size()] == '\t')) {
            s = trim(s.substr(keyword.size()));
        }
        while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'') ||
                                 (s.front() == '`' && s.back() == '`'))) {
            s = trim(s.substr(1, s.size() - 2));
        }
        if (s.empty()) continue;
        std::string name(s);
        if (seen.insert(name).second) out.push_back(std::move(name));
    }
    return out;
}

std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::error: return "error";
        case Severity::warning: return "warning";
        case Severity::info: return "info";
    }
    return "error";
}

std::optional<Severity> parse_severity(std::string_view s) {
    if (s == "error") return Severity::error;
    if (s == "warning") return Severity::warning;
    if (s == "info" || s == "information") return Severity::info;
    return std::nullopt;
}

void merge_usage(UsageByModel& into, const UsageByModel& from) {
    for (const auto& [model, usage] : from) into[model] += usage;
}

void add_usage(UsageByModel& into, const std::string& model, const TokenUsage& usage) { into[model] += usage; }

TokenUsage total_usage(const UsageByModel& usage) {
    TokenUsage total;
    for (const auto& [_, u] : usage) total += u;
    return total;
}

std::string_view to_string(AttemptStage s) {
    switch (s) {
        case AttemptStage::malformed: return "malformed";
        case AttemptStage::build_failed: return "build_failed";
        case AttemptStage::open_goals: return "open_goals";
        case AttemptStage::loophole: return "loophole";
        case AttemptStage::rejected: return "rejected";
        case AttemptStage::approved: return "approved";
    }
    return "malformed";
}

std::optional<AttemptStage> parse_attempt_stage(std::string_view s) {
    for (auto st : {AttemptStage::malformed, AttemptStage::build_failed, AttemptStage::open_goals,
                    AttemptStage::loophole, AttemptStage::rejected, AttemptStage::approved}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

const std::string& AttemptRecord::code() const { return proposal ? proposal->updated_theorem : raw_response; }

std::string_view to_string(Tool t) {
    return t == Tool::library_search ? "library_search" : "web_search";
}

std::optional<Tool> parse_tool(std::string_view s) {
    if (s == "library_search" || s == "library") return Tool::library_search;
    if (s == "web_search" || s == "web") return Tool::web_search;
    return std::nullopt;
}

ThinkingBudget ThinkingBudget::parse(std::string_view s) {
    s = trim(s);
    ThinkingBudget b;
    if (s.empty() || s == "0" || s == "off" || s == "none") return b;
    int tokens = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), tokens);
    if (ec == std::errc() && ptr == s.data() + s.size()) {
        if (tokens < 0) throw ConfigError("thinking budget must be non-negative");
        b.tokens = tokens;
    } else {
        b.level = std::string(s);
    }
    return b;
}

std::string ThinkingBudget::to_string() const {
    if (!level.empty()) return level;
    return std::to_string(tokens);
}

std::vector<std::string> default_denylist() {
    return {"sorry", "admit", "apply?", "exact?", "rw?", "simp?", "axiom", "#exit"};
}

void ProverConfig::validate() const {
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (memory.kind == MemoryKind::history && memory.history_n < 1) throw ConfigError("history n must be >= 1");
    if (!(build_timeout_s > 0.0)) throw ConfigError("build_timeout must be > 0");
    if (max_tool_calls < 0) throw ConfigError("max_tool_calls must be >= 0");
    if (model.empty()) throw ConfigError("model must be set");
}

const Price& PriceTable::at(const std::string& model) const {
    const auto it = prices_.find(model);
    if (it == prices_.end()) throw MissingPrice(model);
    return it->second;
}

double PriceTable::cost(const std::string& model, const TokenUsage& usage) const {
    const Price& p = at(model);
    return (static_cast<double>(usage.input) * p.input + static_cast<double>(usage.output) * p.output +
            static_cast<double>(usage.thinking) * p.thinking) /
           1e6;
}

double PriceTable::cost(const UsageByModel& usage) const {
    double total = 0.0;
    for (const auto& [model, u] : usage) total += cost(model, u);
    return total;
}

std::string_view to_string(ProofResult::Outcome o) {
    switch (o) {
        case ProofResult::Outcome::proved: return "proved";
        case ProofResult::Outcome::exhausted: return "exhausted";
        case ProofResult::Outcome::error: return "error";
    }
    return "error";
}

std::optional<ProofResult::Outcome> parse_outcome(std::string_view s) {
    if (s == "proved") return ProofResult::Outcome::proved;
    if (s == "exhausted") return ProofResult::Outcome::exhausted;
    if (s == "error") return ProofResult::Outcome::error;
    return std::nullopt;
}

}  // namespace proofloop
