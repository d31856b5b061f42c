#include "proofloop/proposer/clients.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/http.hpp"

#include <fstream>
#include <thread>

namespace proofloop::proposer {

using nlohmann::json;

RetryingClient::RetryingClient(LlmClient& inner, RetryPolicy policy, Sleeper sleeper)
    : inner_(inner), policy_(policy), sleeper_(std::move(sleeper)) {
    if (policy_.attempts < 1) throw ConfigError("retry attempts must be at least 1");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

LlmResponse RetryingClient::complete(const LlmRequest& request) {
    auto delay = policy_.initial_delay;
    std::string last;
    for (int attempt = 1; attempt <= policy_.attempts; ++attempt) {
        try {
            return inner_.complete(request);
        } catch (const TransportError& e) {
            last = e.what();
        }
        if (attempt < policy_.attempts) {
            sleeper_(delay);
            delay = std::chrono::milliseconds(static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy_.multiplier));
        }
    }
    throw LlmUnavailable("LLM unavailable after " + std::to_string(policy_.attempts) + " attempts: " + last);
}

// --- scripted ---------------------------------------------------------------

namespace {

std::vector<std::string> string_or_list(const json& j) {
    if (j.is_string()) return {j.get<std::string>()};
    return j.get<std::vector<std::string>>();
}

std::string concatenated_content(const MessageSequence& messages) {
    std::string out;
    for (const auto& m : messages) {
        out += m.content;
        out += '\n';
    }
    return out;
}

bool rule_matches(const ScriptedLlmClient::Rule& rule, const LlmRequest& request, const std::string& content) {
    if (rule.purpose && *rule.purpose != request.purpose) return false;
    if (rule.iteration && *rule.iteration != request.iteration) return false;
    for (const auto& c : rule.contains) {
        if (content.find(c) == std::string::npos) return false;
    }
    for (const auto& c : rule.excludes) {
        if (content.find(c) != std::string::npos) return false;
    }
    return true;
}

LlmResponse deliver(const ScriptedLlmClient::Reply& reply) {
    if (reply.error == "transport") throw TransportError("scripted transport failure");
    if (!reply.error.empty()) throw LlmUnavailable("scripted failure: " + reply.error);
    return reply.response;
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace

ScriptedLlmClient::Reply ScriptedLlmClient::reply_from_json(const json& j) {
    Reply r;
    if (j.is_string()) {
        r.response.text = j.get<std::string>();
        return r;
    }
    r.response.text = j.value("text", "");
    r.error = j.value("error", "");
    if (j.contains("tool_calls")) {
        for (const auto& c : j.at("tool_calls")) {
            r.response.tool_calls.push_back(
                {c.value("id", ""), c.at("name").get<std::string>(), c.value("arguments", json::object())});
        }
    }
    if (j.contains("usage")) {
        const auto& u = j.at("usage");
        r.response.usage = {u.value("input", std::int64_t{0}), u.value("output", std::int64_t{0}),
                            u.value("thinking", std::int64_t{0})};
    }
    return r;
}

std::unique_ptr<ScriptedLlmClient> ScriptedLlmClient::from_json(const json& script) {
    auto client = std::make_unique<ScriptedLlmClient>();
    try {
        if (script.contains("by_hash")) {
            for (const auto& [h, r] : script.at("by_hash").items()) client->set_hash_reply(h, reply_from_json(r));
        }
        if (script.contains("rules")) {
            for (const auto& r : script.at("rules")) {
                Rule rule;
                if (r.contains("purpose")) rule.purpose = r.at("purpose").get<std::string>();
                if (r.contains("iteration")) rule.iteration = r.at("iteration").get<int>();
                if (r.contains("contains")) rule.contains = string_or_list(r.at("contains"));
                if (r.contains("excludes")) rule.excludes = string_or_list(r.at("excludes"));
                if (r.contains("response")) rule.replies.push_back(reply_from_json(r.at("response")));
                if (r.contains("responses")) {
                    for (const auto& x : r.at("responses")) rule.replies.push_back(reply_from_json(x));
                }
                if (rule.replies.empty()) throw ConfigError("scripted rule without a response");
                client->add_rule(std::move(rule));
            }
        }
        if (script.contains("responses")) {
            for (const auto& r : script.at("responses")) client->push(reply_from_json(r));
        }
        if (script.contains("default")) client->set_default(reply_from_json(script.at("default")));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad LLM script: ") + e.what());
    }
    return client;
}

std::unique_ptr<ScriptedLlmClient> ScriptedLlmClient::from_file(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

void ScriptedLlmClient::push(Reply reply) {
    std::lock_guard lock(mu_);
    fifo_.push_back(std::move(reply));
}

void ScriptedLlmClient::push_text(std::string text, TokenUsage usage) {
    Reply r;
    r.response.text = std::move(text);
    r.response.usage = usage;
    push(std::move(r));
}

void ScriptedLlmClient::add_rule(Rule rule) {
    std::lock_guard lock(mu_);
    rules_.push_back(std::move(rule));
}

void ScriptedLlmClient::set_hash_reply(const std::string& hash, Reply reply) {
    std::lock_guard lock(mu_);
    by_hash_[hash] = std::move(reply);
}

void ScriptedLlmClient::set_default(Reply reply) {
    std::lock_guard lock(mu_);
    default_ = std::move(reply);
}

LlmResponse ScriptedLlmClient::complete(const LlmRequest& request) {
    Reply reply;
    {
        std::lock_guard lock(mu_);
        requests_.push_back(request);
        if (!by_hash_.empty()) {
            if (const auto it = by_hash_.find(message_sequence_hash(request.messages)); it != by_hash_.end()) {
                return deliver(it->second);
            }
        }
        const std::string content = rules_.empty() ? std::string() : concatenated_content(request.messages);
        for (const auto& rule : rules_) {
            if (rule_matches(rule, request, content)) {
                return deliver(rule.replies[request.seed % rule.replies.size()]);
            }
        }
        if (!fifo_.empty()) {
            reply = std::move(fifo_.front());
            fifo_.pop_front();
        } else if (default_) {
            reply = *default_;
        } else {
            throw LlmUnavailable("scripted LLM: script exhausted");
        }
    }
    return deliver(reply);
}

std::vector<LlmRequest> ScriptedLlmClient::requests() const {
    std::lock_guard lock(mu_);
    return requests_;
}

std::size_t ScriptedLlmClient::call_count() const {
    std::lock_guard lock(mu_);
    return requests_.size();
}

// --- HTTP providers ---------------------------------------------------------

namespace {

[[noreturn]] void throw_for_status(const std::string& provider, const HttpResponse& res) {
    std::string detail = res.body.substr(0, 500);
    const std::string msg = provider + " HTTP " + std::to_string(res.status) + ": " + detail;
    if (is_retryable_status(res.status) || res.status == 529) throw TransportError(msg);
    throw LlmUnavailable(msg);
}

json parse_body(const std::string& provider, const std::string& body) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw TransportError(provider + ": unparseable response: " + e.what());
    }
}

}  // namespace

AnthropicClient::AnthropicClient(HttpClientOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) options_.base_url = "https://api.anthropic.com";
}

json AnthropicClient::request_body(const LlmRequest& request) {
    json body;
    body["model"] = request.model;
    int max_tokens = request.max_output_tokens;

    std::string system;
    json messages = json::array();
    for (const auto& m : request.messages) {
        switch (m.role) {
            case Role::system:
                if (!system.empty()) system += "\n\n";
                system += m.content;
                break;
            case Role::user:
                messages.push_back({{"role", "user"}, {"content", m.content}});
                break;
            case Role::assistant: {
                json content = json::array();
                if (!m.content.empty()) content.push_back({{"type", "text"}, {"text", m.content}});
                for (const auto& c : m.tool_calls) {
                    content.push_back({{"type", "tool_use"}, {"id", c.id}, {"name", c.name}, {"input", c.arguments}});
                }
                messages.push_back({{"role", "assistant"}, {"content", content}});
                break;
            }
            case Role::tool: {
                const json block = {{"type", "tool_result"}, {"tool_use_id", m.tool_call_id}, {"content", m.content}};
                // Consecutive tool results travel in one user turn.
                if (!messages.empty() && messages.back()["role"] == "user" && messages.back()["content"].is_array()) {
                    messages.back()["content"].push_back(block);
                } else {
                    messages.push_back({{"role", "user"}, {"content", json::array({block})}});
                }
                break;
            }
        }
    }
    if (!system.empty()) body["system"] = system;
    body["messages"] = messages;

    if (request.thinking.tokens > 0) {
        body["thinking"] = {{"type", "enabled"}, {"budget_tokens", request.thinking.tokens}};
        max_tokens = std::max(max_tokens, request.thinking.tokens + 4096);
    }
    body["max_tokens"] = max_tokens;

    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& t : request.tools) {
            tools.push_back({{"name", t.name}, {"description", t.description}, {"input_schema", t.parameters}});
        }
        body["tools"] = tools;
        if (!request.allow_tool_calls) body["tool_choice"] = {{"type", "none"}};
    }
    return body;
}

LlmResponse AnthropicClient::parse_response(const json& body) {
    LlmResponse out;
    for (const auto& block : body.at("content")) {
        const auto type = block.value("type", "");
        if (type == "text") {
            out.text += block.value("text", "");
        } else if (type == "tool_use") {
            out.tool_calls.push_back({block.value("id", ""), block.value("name", ""), block.value("input", json::object())});
        }
    }
    if (body.contains("usage")) {
        const auto& u = body.at("usage");
        out.usage.input = u.value("input_tokens", std::int64_t{0}) + u.value("cache_read_input_tokens", std::int64_t{0}) +
                          u.value("cache_creation_input_tokens", std::int64_t{0});
        out.usage.output = u.value("output_tokens", std::int64_t{0});
    }
    return out;
}

LlmResponse AnthropicClient::complete(const LlmRequest& request) {
    const HttpHeaders headers = {{"x-api-key", options_.api_key}, {"anthropic-version", "2023-06-01"}};
    const auto res = http_post_json(options_.base_url, "/v1/messages", headers, request_body(request).dump(), options_.timeout);
    if (res.status != 200) throw_for_status("anthropic", res);
    try {
        return parse_response(parse_body("anthropic", res.body));
    } catch (const json::exception& e) {
        throw TransportError(std::string("anthropic: unexpected response shape: ") + e.what());
    }
}

OpenAiClient::OpenAiClient(HttpClientOptions options) : options_(std::move(options)) {
    if (options_.base_url.empty()) options_.base_url = "https://api.openai.com/v1";
}

json OpenAiClient::request_body(const LlmRequest& request) {
    json body;
    body["model"] = request.model;
    body["max_completion_tokens"] = request.max_output_tokens + std::max(0, request.thinking.tokens);
    body["seed"] = request.seed % (std::uint64_t{1} << 53);

    json messages = json::array();
    for (const auto& m : request.messages) {
        json msg = {{"role", std::string(to_string(m.role))}, {"content", m.content}};
        if (m.role == Role::assistant && !m.tool_calls.empty()) {
            json calls = json::array();
            for (const auto& c : m.tool_calls) {
                calls.push_back({{"id", c.id}, {"type", "function"},
                                 {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
            }
            msg["tool_calls"] = calls;
        }
        if (m.role == Role::tool) msg["tool_call_id"] = m.tool_call_id;
        messages.push_back(std::move(msg));
    }
    body["messages"] = messages;

    if (!request.thinking.level.empty()) body["reasoning_effort"] = request.thinking.level;

    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& t : request.tools) {
            tools.push_back({{"type", "function"},
                             {"function", {{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}}}});
        }
        body["tools"] = tools;
        if (!request.allow_tool_calls) body["tool_choice"] = "none";
    }
    if (request.response_schema) {
        body["response_format"] = {{"type", "json_schema"},
                                   {"json_schema", {{"name", "structured_output"}, {"schema", *request.response_schema}}}};
    }
    return body;
}

LlmResponse OpenAiClient::parse_response(const json& body) {
    LlmResponse out;
    const auto& msg = body.at("choices").at(0).at("message");
    if (msg.contains("content") && msg.at("content").is_string()) out.text = msg.at("content").get<std::string>();
    if (msg.contains("tool_calls") && msg.at("tool_calls").is_array()) {
        for (const auto& c : msg.at("tool_calls")) {
            const auto& fn = c.at("function");
            json args = json::object();
            const auto raw = fn.value("arguments", "");
            if (!raw.empty()) {
                args = json::parse(raw, nullptr, false);
                if (args.is_discarded()) args = json{{"raw", raw}};
            }
            out.tool_calls.push_back({c.value("id", ""), fn.value("name", ""), args});
        }
    }
    if (body.contains("usage")) {
        const auto& u = body.at("usage");
        const auto completion = u.value("completion_tokens", std::int64_t{0});
        std::int64_t reasoning = 0;
        if (u.contains("completion_tokens_details") && u.at("completion_tokens_details").is_object()) {
            reasoning = u.at("completion_tokens_details").value("reasoning_tokens", std::int64_t{0});
        }
        out.usage.input = u.value("prompt_tokens", std::int64_t{0});
        out.usage.output = completion - reasoning;
        out.usage.thinking = reasoning;
    }
    return out;
}

LlmResponse OpenAiClient::complete(const LlmRequest& request) {
    const HttpHeaders headers = {{"Authorization", "Bearer " + options_.api_key}};
    const auto res = http_post_json(options_.base_url, "/chat/completions", headers, request_body(request).dump(), options_.timeout);
    if (res.status != 200) throw_for_status("openai", res);
    try {
        return parse_response(parse_body("openai", res.body));
    } catch (const json::exception& e) {
        throw TransportError(std::string("openai: unexpected response shape: ") + e.what());
    }
}

}  // namespace proofloop::proposer
