#pragma once

#include "proofloop/core/llm.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace proofloop::proposer {

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_delay{1000};
    double multiplier = 2.0;
};

// Retries TransportError with exponential backoff. Gives up with
// LlmUnavailable once the attempts are spent; LlmUnavailable from the inner
// client passes straight through.
class RetryingClient final : public LlmClient {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    RetryingClient(LlmClient& inner, RetryPolicy policy, Sleeper sleeper = {});
    LlmResponse complete(const LlmRequest& request) override;

private:
    LlmClient& inner_;
    RetryPolicy policy_;
    Sleeper sleeper_;
};

// Deterministic client driven by a script. Lookup order for each request:
//   1. `by_hash`: message_sequence_hash of the request -> response
//   2. `rules`: first rule whose filters all match
//   3. `responses`: FIFO queue shared by all callers
//   4. `default`
// and otherwise LlmUnavailable("script exhausted").
//
// Script schema (JSON):
//   {"by_hash": {"<hex>": R}, "rules": [RULE], "responses": [R], "default": R}
//   RULE = {"purpose"?: str, "iteration"?: int, "contains"?: str | [str],
//           "excludes"?: str | [str], "response": R | "responses": [R]}
//   R    = "text" | {"text"?: str, "tool_calls"?: [{"id","name","arguments"}],
//                    "usage"?: {"input","output","thinking"}, "error"?: "transport" | "unavailable"}
// `contains` / `excludes` test the concatenated message contents. With
// `responses`, a rule picks entry seed % size, so distinct samples can
// follow distinct scripts deterministically.
class ScriptedLlmClient final : public LlmClient {
public:
    struct Reply {
        LlmResponse response;
        std::string error;  // "transport" or "unavailable"
    };

    struct Rule {
        std::optional<std::string> purpose;
        std::optional<int> iteration;
        std::vector<std::string> contains;
        std::vector<std::string> excludes;
        std::vector<Reply> replies;
    };

    ScriptedLlmClient() = default;
    static Reply reply_from_json(const nlohmann::json& j);
    static std::unique_ptr<ScriptedLlmClient> from_json(const nlohmann::json& script);
    static std::unique_ptr<ScriptedLlmClient> from_file(const std::filesystem::path& path);

    void push(Reply reply);
    void push_text(std::string text, TokenUsage usage = {});
    void add_rule(Rule rule);
    void set_hash_reply(const std::string& hash, Reply reply);
    void set_default(Reply reply);

    LlmResponse complete(const LlmRequest& request) override;

    std::vector<LlmRequest> requests() const;
    std::size_t call_count() const;

private:
    mutable std::mutex mu_;
    std::map<std::string, Reply> by_hash_;
    std::vector<Rule> rules_;
    std::deque<Reply> fifo_;
    std::optional<Reply> default_;
    std::vector<LlmRequest> requests_;
};

struct HttpClientOptions {
    std::string api_key;
    std::string base_url;
    std::chrono::milliseconds timeout{600000};
};

// Anthropic Messages API. Thinking tokens are billed inside output tokens
// and are not reported separately.
class AnthropicClient final : public LlmClient {
public:
    explicit AnthropicClient(HttpClientOptions options);
    LlmResponse complete(const LlmRequest& request) override;

    static nlohmann::json request_body(const LlmRequest& request);
    static LlmResponse parse_response(const nlohmann::json& body);

private:
    HttpClientOptions options_;
};

// OpenAI-compatible chat completions API.
class OpenAiClient final : public LlmClient {
public:
    explicit OpenAiClient(HttpClientOptions options);
    LlmResponse complete(const LlmRequest& request) override;

    static nlohmann::json request_body(const LlmRequest& request);
    static LlmResponse parse_response(const nlohmann::json& body);

private:
    HttpClientOptions options_;
};

}  // namespace proofloop::proposer
