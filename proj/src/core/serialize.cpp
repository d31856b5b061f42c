#include "proofloop/core/serialize.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/hash.hpp"

namespace proofloop {

using nlohmann::json;

void to_json(json& j, const ProofProposal& p) {
    j = json{{"reasoning", p.reasoning},
             {"imports", p.imports},
             {"opens", p.opens},
             {"updated_theorem", p.updated_theorem}};
}

void from_json(const json& j, ProofProposal& p) {
    p.reasoning = j.value("reasoning", "");
    p.imports = j.value("imports", std::vector<std::string>{});
    p.opens = j.value("opens", std::vector<std::string>{});
    p.updated_theorem = j.value("updated_theorem", "");
}

void to_json(json& j, const Diagnostic& d) {
    j = json{{"file", d.file},
             {"line", d.line},
             {"column", d.column},
             {"severity", std::string(to_string(d.severity))},
             {"message", d.message}};
}

void from_json(const json& j, Diagnostic& d) {
    d.file = j.value("file", "");
    d.line = j.value("line", 1);
    d.column = j.value("column", 0);
    const auto sev = parse_severity(j.value("severity", "error"));
    if (!sev) throw ConfigError("unknown diagnostic severity: " + j.value("severity", std::string{}));
    d.severity = *sev;
    d.message = j.value("message", "");
    if (d.line < 1) throw ConfigError("diagnostic line must be >= 1");
}

void to_json(json& j, const TokenUsage& u) {
    j = json{{"input", u.input}, {"output", u.output}, {"thinking", u.thinking}};
}

void from_json(const json& j, TokenUsage& u) {
    u.input = j.value("input", std::int64_t{0});
    u.output = j.value("output", std::int64_t{0});
    u.thinking = j.value("thinking", std::int64_t{0});
}

void to_json(json& j, const AttemptRecord& a) {
    json usage = json::object();
    for (const auto& [model, u] : a.usage) usage[model] = u;
    j = json{{"iteration", a.iteration},
             {"stage", std::string(to_string(a.stage))},
             {"proposal", a.proposal ? json(*a.proposal) : json(nullptr)},
             {"raw_response", a.raw_response},
             {"feedback", a.feedback},
             {"usage", usage},
             {"wall_time_s", a.wall_time_s},
             {"tool_rounds", a.tool_rounds}};
}

void to_json(json& j, const ProofResult& r) {
    j = json{{"task_id", r.task_id},
             {"outcome", std::string(to_string(r.outcome))},
             {"proved_iteration", r.outcome == ProofResult::Outcome::proved ? json(r.proved_iteration) : json(nullptr)},
             {"error", r.error_reason},
             {"total_cost_usd", r.total_cost},
             {"transcript", r.transcript}};
    if (r.outcome == ProofResult::Outcome::proved) j["final_source"] = r.final_source;
}

void to_json(json& j, const ToolCall& c) { j = json{{"id", c.id}, {"name", c.name}, {"arguments", c.arguments}}; }

void to_json(json& j, const ChatMessage& m) {
    j = json{{"role", std::string(to_string(m.role))}, {"content", m.content}};
    if (!m.tool_calls.empty()) j["tool_calls"] = m.tool_calls;
    if (!m.tool_call_id.empty()) j["tool_call_id"] = m.tool_call_id;
}

json config_to_json(const ProverConfig& c) {
    std::vector<std::string> tools;
    for (Tool t : c.tools_enabled) tools.emplace_back(to_string(t));
    std::string memory;
    switch (c.memory.kind) {
        case MemoryKind::none: memory = "none"; break;
        case MemoryKind::history: memory = "history"; break;
        case MemoryKind::self_managed: memory = "self-managed"; break;
    }
    return json{
        {"max_iterations", c.max_iterations},
        {"mode", c.mode == ProverMode::iterative ? "iterative" : "single-shot"},
        {"memory",
         {{"kind", memory},
          {"history_n", c.memory.history_n},
          {"notes_cap", c.memory.notes_cap},
          {"render_budget", c.memory.render_budget},
          {"include_last_attempt", c.memory.include_last_attempt},
          {"reflection_model", c.effective_reflection_model()}}},
        {"tools", tools},
        {"thinking_budget", c.thinking_budget.to_string()},
        {"model", c.model},
        {"reviewer_model", c.effective_reviewer_model()},
        {"build_timeout_s", c.build_timeout_s},
        {"max_tool_calls", c.max_tool_calls},
        {"lean_version", c.lean_version},
        {"denylist", c.denylist},
        {"scratch_file", c.scratch_file},
    };
}

std::string config_fingerprint(const ProverConfig& config) {
    return sha256_hex(config_to_json(config).dump()).substr(0, 16);
}

}  // namespace proofloop
