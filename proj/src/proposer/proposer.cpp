#include "proofloop/proposer/proposer.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/prompts.hpp"

#include <climits>
#include <future>
#include <regex>
#include <sstream>

namespace proofloop::proposer {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view s) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto nl = s.find('\n', start);
        if (nl == std::string_view::npos) {
            out.push_back(s.substr(start));
            break;
        }
        out.push_back(s.substr(start, nl - start));
        start = nl + 1;
    }
    return out;
}

bool is_fence(std::string_view line) { return trim(line).substr(0, 3) == "```"; }

// Content of the first fenced block, or the trimmed text when there is none.
std::string unwrap_fence(std::string_view text) {
    const auto lines = split_lines(text);
    std::size_t open = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (is_fence(lines[i])) {
            open = i;
            break;
        }
    }
    if (open == lines.size()) return std::string(trim(text));

    std::string out;
    for (std::size_t i = open + 1; i < lines.size() && !is_fence(lines[i]); ++i) {
        std::string_view line = lines[i];
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.append(line);
        out.push_back('\n');
    }
    while (!out.empty() && (out.back() == '\n' || out.back() == ' ' || out.back() == '\t')) out.pop_back();
    const auto first = out.find_first_not_of('\n');
    return first == std::string::npos ? std::string() : out.substr(first);
}

std::vector<std::string> names_from_json(const json& j) {
    if (j.is_null()) return {};
    if (j.is_string()) return parse_name_list(j.get<std::string>());
    std::vector<std::string> out;
    for (const auto& x : j) {
        if (x.is_string()) out.push_back(x.get<std::string>());
    }
    return out;
}

std::optional<ProofProposal> try_json(std::string_view text) {
    std::vector<std::string> candidates;
    const auto t = trim(text);
    if (!t.empty() && t.front() == '{') candidates.emplace_back(t);
    for (const auto& line : split_lines(text)) {
        if (trim(line).substr(0, 7) == "```json") {
            candidates.push_back(unwrap_fence(text.substr(static_cast<std::size_t>(line.data() - text.data()))));
            break;
        }
    }
    const auto lb = t.find('{');
    const auto rb = t.rfind('}');
    if (lb != std::string_view::npos && rb != std::string_view::npos && rb > lb) {
        candidates.emplace_back(t.substr(lb, rb - lb + 1));
    }

    for (const auto& c : candidates) {
        const json j = json::parse(c, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("updated_theorem")) continue;
        ProofProposal p;
        if (j.contains("reasoning") && j.at("reasoning").is_string()) p.reasoning = j.at("reasoning").get<std::string>();
        if (j.contains("imports")) p.imports = names_from_json(j.at("imports"));
        if (j.contains("opens")) p.opens = names_from_json(j.at("opens"));
        if (j.at("updated_theorem").is_string()) p.updated_theorem = unwrap_fence(j.at("updated_theorem").get<std::string>());
        return p;
    }
    return std::nullopt;
}

const std::regex& header_regex() {
    // Tolerates markdown decoration: `**imports**:`, `- **opens:**`, `### reasoning:`.
    static const std::regex re(R"(^\s*(?:[-*#>]+\s+)?\**\s*(reasoning|imports|opens|updated_theorem)\s*\**\s*:\s*\**[ \t]*(.*)$)",
                               std::regex::icase);
    return re;
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::vector<std::string> parse_name_list(std::string_view text) {
    std::string_view t = trim(text);
    std::vector<std::string> raw;
    const auto push_tokens = [&](std::string_view chunk, std::string_view separators) {
        std::size_t i = 0;
        while (i < chunk.size()) {
            const auto j = chunk.find_first_of(separators, i);
            const auto item = trim(chunk.substr(i, j == std::string_view::npos ? std::string_view::npos : j - i));
            if (!item.empty()) raw.emplace_back(item);
            if (j == std::string_view::npos) break;
            i = j + 1;
        }
    };

    if (!t.empty() && t.front() == '[') {
        const auto close = t.find(']');
        push_tokens(t.substr(1, close == std::string_view::npos ? std::string_view::npos : close - 1), ",\n");
    } else {
        for (auto line : split_lines(t)) {
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '-' || line.front() == '*') line = trim(line.substr(1));
            push_tokens(line, ", \t");
        }
    }

    std::vector<std::string> out;
    for (auto& item : raw) {
        std::string_view v = item;
        while (!v.empty() && (v.front() == '"' || v.front() == '\'' || v.front() == '`')) v.remove_prefix(1);
        while (!v.empty() && (v.back() == '"' || v.back() == '\'' || v.back() == '`')) v.remove_suffix(1);
        v = trim(v);
        if (v.empty()) continue;
        const auto l = lower(std::string(v));
        if (l == "none" || l == "[]" || l == "n/a") continue;
        out.emplace_back(v);
    }
    return out;
}

ProofProposal parse_proposal(std::string_view raw) {
    if (auto p = try_json(raw)) {
        p->imports = normalize_names(p->imports, "import");
        p->opens = normalize_names(p->opens, "open");
        if (p->updated_theorem.empty()) throw ParseError("updated_theorem is empty");
        return *p;
    }

    std::map<std::string, std::string> fields;
    std::string preamble;
    std::string* current = &preamble;
    bool in_fence = false;
    for (const auto& line : split_lines(raw)) {
        std::cmatch m;
        if (!in_fence && std::regex_match(line.data(), line.data() + line.size(), m, header_regex())) {
            const auto key = lower(m[1].str());
            current = &fields[key];
            current->clear();
            const std::string rest = m[2].str();
            current->append(rest);
            current->push_back('\n');
            if (is_fence(rest)) in_fence = true;
            continue;
        }
        current->append(line);
        current->push_back('\n');
        if (is_fence(line)) in_fence = !in_fence;
    }

    const auto it = fields.find("updated_theorem");
    if (it == fields.end()) throw ParseError("missing updated_theorem field");
    ProofProposal p;
    p.updated_theorem = unwrap_fence(it->second);
    if (p.updated_theorem.empty()) throw ParseError("updated_theorem is empty");
    if (const auto r = fields.find("reasoning"); r != fields.end()) {
        p.reasoning = std::string(trim(r->second));
    } else {
        p.reasoning = std::string(trim(preamble));
    }
    if (const auto i = fields.find("imports"); i != fields.end()) p.imports = normalize_names(parse_name_list(i->second), "import");
    if (const auto o = fields.find("opens"); o != fields.end()) p.opens = normalize_names(parse_name_list(o->second), "open");
    return p;
}

json proposal_schema() {
    const json names = {{"type", "array"}, {"items", {{"type", "string"}}}};
    return {
        {"type", "object"},
        {"properties",
         {{"reasoning", {{"type", "string"}}},
          {"imports", names},
          {"opens", names},
          {"updated_theorem", {{"type", "string"}}}}},
        {"required", {"reasoning", "imports", "opens", "updated_theorem"}},
        {"additionalProperties", false},
    };
}

MessageSequence assemble_messages(const TheoremTask& task, const MemoryRender& memory, ProverMode mode,
                                  std::string_view lean_version) {
    using prompts::Template;
    MessageSequence out;
    const auto system = mode == ProverMode::iterative ? Template::proposer_system_iterative
                                                      : Template::proposer_system_single_shot;
    out.push_back({Role::system, prompts::fill(system, {{"lean_version", lean_version}}), {}, {}});
    out.push_back({Role::user,
                   prompts::fill(Template::proposer_user,
                                 {{"target_theorem", task.target_theorem}, {"complete_file", task.file_content}}),
                   {},
                   {}});
    if (mode == ProverMode::iterative) {
        for (const auto& m : memory.messages) out.push_back({Role::user, m, {}, {}});
    }
    return out;
}

std::optional<toolbox::ToolCallRequest> to_tool_request(const ToolCall& call) {
    const auto tool = parse_tool(call.name);
    if (!tool) return std::nullopt;
    toolbox::ToolCallRequest r;
    r.tool = *tool;
    r.call_id = call.id;
    if (call.arguments.is_object()) {
        for (const auto& [k, v] : call.arguments.items()) r.arguments[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return r;
}

std::vector<ChatMessage> execute_tool_round(const std::vector<toolbox::ToolCallRequest>& requests,
                                            const toolbox::Toolbox* toolbox, int max_tool_calls) {
    std::vector<std::future<std::string>> pending;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        if (static_cast<long>(i) >= max_tool_calls) break;
        const auto& req = requests[i];
        pending.push_back(std::async(std::launch::async, [toolbox, &req] {
            if (toolbox == nullptr) return std::string(toolbox::kToolDisabled);
            return toolbox->run(req);
        }));
    }
    std::vector<ChatMessage> out;
    for (std::size_t i = 0; i < requests.size(); ++i) {
        std::string content;
        if (i < pending.size()) {
            try {
                content = pending[i].get();
            } catch (const std::exception& e) {
                content = std::string("error: ") + e.what();
            }
        } else {
            content = "refused: at most " + std::to_string(max_tool_calls) + " tool calls per round";
        }
        out.push_back({Role::tool, std::move(content), {}, requests[i].call_id});
    }
    return out;
}

ProposeResult Proposer::propose(const TheoremTask& task, const MemoryRender& memory, const ProverConfig& config,
                                std::uint64_t seed, int iteration) const {
    ProposeResult out;
    MessageSequence messages = assemble_messages(task, memory, config.mode, config.lean_version);

    LlmRequest request;
    request.model = config.model;
    request.thinking = config.thinking_budget;
    request.seed = seed;
    request.iteration = iteration;
    request.purpose = "propose";
    request.tools = toolbox::Toolbox(config.tools_enabled, nullptr, nullptr).specs();
    request.response_schema = proposal_schema();

    constexpr int kMaxCalls = 3;
    std::string final_text;
    while (true) {
        request.messages = messages;
        request.allow_tool_calls = out.tool_rounds == 0;
        LlmResponse response = llm_.complete(request);
        ++out.llm_calls;
        out.usage += response.usage;

        if (response.tool_calls.empty() || out.llm_calls == kMaxCalls) {
            final_text = std::move(response.text);
            break;
        }

        for (std::size_t i = 0; i < response.tool_calls.size(); ++i) {
            if (response.tool_calls[i].id.empty()) response.tool_calls[i].id = "call_" + std::to_string(i);
        }
        messages.push_back({Role::assistant, response.text, response.tool_calls, {}});

        if (out.tool_rounds == 0) {
            // Unknown tool names and calls past the cap are answered in place;
            // the rest go out as one concurrent round.
            std::vector<ChatMessage> results(response.tool_calls.size());
            std::vector<toolbox::ToolCallRequest> known;
            std::vector<std::size_t> known_index;
            for (std::size_t i = 0; i < response.tool_calls.size(); ++i) {
                const auto& call = response.tool_calls[i];
                results[i] = {Role::tool, {}, {}, call.id};
                if (static_cast<long>(i) >= config.max_tool_calls) {
                    results[i].content = "refused: at most " + std::to_string(config.max_tool_calls) + " tool calls per round";
                } else if (auto req = to_tool_request(call)) {
                    known.push_back(std::move(*req));
                    known_index.push_back(i);
                } else {
                    results[i].content = "error: unknown tool '" + call.name + "'";
                }
            }
            const auto ran = execute_tool_round(known, toolbox_, INT_MAX);
            for (std::size_t k = 0; k < ran.size(); ++k) results[known_index[k]] = ran[k];
            for (auto& r : results) messages.push_back(std::move(r));
            ++out.tool_rounds;
        } else {
            for (const auto& call : response.tool_calls) {
                messages.push_back({Role::tool, std::string(kToolRoundRefusal), {}, call.id});
            }
        }
    }

    messages.push_back({Role::assistant, final_text, {}, {}});
    out.transcript = std::move(messages);
    out.raw = std::move(final_text);
    try {
        out.proposal = parse_proposal(out.raw);
    } catch (const ParseError& e) {
        out.parse_error = e.what();
    }
    return out;
}

}  // namespace proofloop::proposer
