#include "local_server.hpp"
#include "support.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/proposer/clients.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <mutex>

using namespace proofloop;
using namespace proofloop::proposer;
using nlohmann::json;

namespace {

LlmRequest basic_request() {
    LlmRequest r;
    r.model = "m";
    r.messages = {{Role::system, "sys", {}, {}}, {Role::user, "hello", {}, {}}};
    return r;
}

// Fails with TransportError `failures` times, then answers.
class FlakyClient final : public LlmClient {
public:
    explicit FlakyClient(int failures) : failures_(failures) {}
    LlmResponse complete(const LlmRequest&) override {
        if (calls++ < failures_) throw TransportError("reset");
        return LlmResponse{"ok", {}, {1, 2, 3}};
    }
    int calls = 0;

private:
    int failures_;
};

}  // namespace

// ---- retries

TEST(Retrying, BackoffThenSuccess) {
    FlakyClient inner(2);
    std::vector<long> delays;
    RetryingClient client(inner, RetryPolicy{}, [&](std::chrono::milliseconds d) { delays.push_back(d.count()); });
    EXPECT_EQ(client.complete(basic_request()).text, "ok");
    EXPECT_EQ(inner.calls, 3);
    EXPECT_EQ(delays, (std::vector<long>{1000, 2000}));
}

TEST(Retrying, GivesUpAfterBudget) {
    FlakyClient inner(10);
    RetryingClient client(inner, RetryPolicy{3, std::chrono::milliseconds(0), 2.0}, [](auto) {});
    EXPECT_THROW(client.complete(basic_request()), LlmUnavailable);
    EXPECT_EQ(inner.calls, 3);
}

TEST(Retrying, UnavailablePassesStraightThrough) {
    ScriptedLlmClient inner;
    ScriptedLlmClient::Reply r;
    r.error = "unavailable";
    inner.push(r);
    RetryingClient client(inner, RetryPolicy{3, std::chrono::milliseconds(0), 2.0}, [](auto) {});
    EXPECT_THROW(client.complete(basic_request()), LlmUnavailable);
    EXPECT_EQ(inner.call_count(), 1u);
}

// ---- scripted

TEST(Scripted, FifoThenDefaultThenExhausted) {
    ScriptedLlmClient c;
    c.push_text("one", {10, 20, 0});
    c.push_text("two");
    auto req = basic_request();
    const auto first = c.complete(req);
    EXPECT_EQ(first.text, "one");
    EXPECT_EQ(first.usage, (TokenUsage{10, 20, 0}));
    EXPECT_EQ(c.complete(req).text, "two");
    EXPECT_THROW(c.complete(req), LlmUnavailable);
    c.set_default(tsupport::text_reply("fallback"));
    EXPECT_EQ(c.complete(req).text, "fallback");
    EXPECT_EQ(c.call_count(), 4u);
}

TEST(Scripted, RulesFilterOnPurposeIterationAndContent) {
    const auto c = ScriptedLlmClient::from_json(json::parse(R"({
        "rules": [
            {"purpose": "review", "response": "R"},
            {"purpose": "propose", "iteration": 2, "response": "P2"},
            {"contains": ["hello"], "excludes": "nope", "responses": ["A", "B", "C"]}
        ],
        "default": "D"
    })"));
    auto req = basic_request();
    req.purpose = "review";
    EXPECT_EQ(c->complete(req).text, "R");
    req.purpose = "propose";
    req.iteration = 2;
    EXPECT_EQ(c->complete(req).text, "P2");
    req.iteration = 1;
    req.seed = 4;
    EXPECT_EQ(c->complete(req).text, "B");  // 4 % 3
    req.messages.push_back({Role::user, "nope", {}, {}});
    EXPECT_EQ(c->complete(req).text, "D");
}

TEST(Scripted, HashLookupComesFirst) {
    ScriptedLlmClient c;
    c.set_default(tsupport::text_reply("default"));
    auto req = basic_request();
    c.set_hash_reply(message_sequence_hash(req.messages), tsupport::text_reply("hashed"));
    EXPECT_EQ(c.complete(req).text, "hashed");
    req.messages[1].content = "other";
    EXPECT_EQ(c.complete(req).text, "default");
}

TEST(Scripted, ToolCallsAndErrorsFromJson) {
    const auto c = ScriptedLlmClient::from_json(json::parse(R"({
        "responses": [
            {"tool_calls": [{"id": "c1", "name": "library_search", "arguments": {"query": "add_comm"}}],
             "usage": {"input": 5, "output": 6, "thinking": 7}},
            {"error": "transport"}
        ]
    })"));
    const auto r = c->complete(basic_request());
    ASSERT_EQ(r.tool_calls.size(), 1u);
    EXPECT_EQ(r.tool_calls[0].name, "library_search");
    EXPECT_EQ(r.tool_calls[0].arguments["query"], "add_comm");
    EXPECT_EQ(r.usage, (TokenUsage{5, 6, 7}));
    EXPECT_THROW(c->complete(basic_request()), TransportError);
}

TEST(MessageHash, StableAndSensitive) {
    const auto a = basic_request().messages;
    auto b = a;
    EXPECT_EQ(message_sequence_hash(a), message_sequence_hash(b));
    b[0].role = Role::user;
    EXPECT_NE(message_sequence_hash(a), message_sequence_hash(b));
    EXPECT_EQ(message_sequence_hash(a).size(), 64u);
}

// ---- Anthropic

TEST(Anthropic, RequestBodyShape) {
    auto req = basic_request();
    req.thinking.tokens = 32000;
    req.max_output_tokens = 16000;
    req.tools = {{"library_search", "search", json{{"type", "object"}}}};
    req.allow_tool_calls = false;
    req.messages.push_back({Role::assistant, "", {{"t1", "library_search", json{{"query", "x"}}}}, {}});
    req.messages.push_back({Role::tool, "result 1", {}, "t1"});
    const auto body = AnthropicClient::request_body(req);
    EXPECT_EQ(body["system"], "sys");
    EXPECT_EQ(body["thinking"]["budget_tokens"], 32000);
    EXPECT_EQ(body["max_tokens"], 36096);
    EXPECT_EQ(body["tool_choice"]["type"], "none");
    ASSERT_EQ(body["messages"].size(), 3u);
    EXPECT_EQ(body["messages"][1]["content"][0]["type"], "tool_use");
    EXPECT_EQ(body["messages"][2]["content"][0]["tool_use_id"], "t1");
}

TEST(Anthropic, AgainstLocalServer) {
    tsupport::LocalServer srv;
    std::string key;
    json seen;
    srv.server.Post("/v1/messages", [&](const httplib::Request& rq, httplib::Response& rs) {
        key = rq.get_header_value("x-api-key");
        seen = json::parse(rq.body);
        rs.set_content(R"({"content": [{"type": "thinking", "thinking": "hmm"},
                                       {"type": "text", "text": "answer"},
                                       {"type": "tool_use", "id": "tu1", "name": "web_search", "input": {"query": "q"}}],
                           "usage": {"input_tokens": 100, "cache_read_input_tokens": 20, "output_tokens": 50}})",
                       "application/json");
    });
    srv.start();
    AnthropicClient client({"secret", srv.url(), std::chrono::seconds(5)});
    const auto r = client.complete(basic_request());
    EXPECT_EQ(key, "secret");
    EXPECT_EQ(seen["model"], "m");
    EXPECT_EQ(r.text, "answer");
    ASSERT_EQ(r.tool_calls.size(), 1u);
    EXPECT_EQ(r.tool_calls[0].id, "tu1");
    EXPECT_EQ(r.usage, (TokenUsage{120, 50, 0}));
}

TEST(Anthropic, StatusMapping) {
    tsupport::LocalServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/v1/messages", [&](const httplib::Request&, httplib::Response& rs) {
        const int n = ++hits;
        if (n == 1) {
            rs.status = 529;
            rs.set_content("overloaded", "text/plain");
        } else if (n == 2) {
            rs.status = 200;
            rs.set_content(R"({"content": [{"type": "text", "text": "fine"}]})", "application/json");
        } else {
            rs.status = 400;
            rs.set_content("bad request", "text/plain");
        }
    });
    srv.start();
    AnthropicClient inner({"k", srv.url(), std::chrono::seconds(5)});
    RetryingClient client(inner, RetryPolicy{3, std::chrono::milliseconds(1), 2.0});
    EXPECT_EQ(client.complete(basic_request()).text, "fine");
    EXPECT_EQ(hits.load(), 2);
    EXPECT_THROW(client.complete(basic_request()), LlmUnavailable);
    EXPECT_EQ(hits.load(), 3);  // 400 is not retried
}

TEST(Anthropic, ServerErrorsExhaustRetries) {
    tsupport::LocalServer srv;
    std::atomic<int> hits{0};
    srv.server.Post("/v1/messages", [&](const httplib::Request&, httplib::Response& rs) {
        ++hits;
        rs.status = 503;
    });
    srv.start();
    AnthropicClient inner({"k", srv.url(), std::chrono::seconds(5)});
    RetryingClient client(inner, RetryPolicy{3, std::chrono::milliseconds(1), 2.0});
    EXPECT_THROW(client.complete(basic_request()), LlmUnavailable);
    EXPECT_EQ(hits.load(), 3);
}

TEST(Anthropic, ConnectionRefusedIsTransport) {
    int port = 0;
    {
        tsupport::LocalServer srv;
        srv.start();
        port = srv.port();
    }
    AnthropicClient client({"k", "http://127.0.0.1:" + std::to_string(port), std::chrono::seconds(2)});
    EXPECT_THROW(client.complete(basic_request()), TransportError);
}

// ---- OpenAI

TEST(OpenAi, RequestBodyShape) {
    auto req = basic_request();
    req.thinking.level = "high";
    req.response_schema = json{{"type", "object"}};
    req.tools = {{"web_search", "search", json{{"type", "object"}}}};
    req.allow_tool_calls = false;
    req.seed = 42;
    const auto body = OpenAiClient::request_body(req);
    EXPECT_EQ(body["reasoning_effort"], "high");
    EXPECT_EQ(body["tool_choice"], "none");
    EXPECT_EQ(body["seed"], 42);
    EXPECT_EQ(body["response_format"]["type"], "json_schema");
    EXPECT_EQ(body["messages"][0]["role"], "system");
}

TEST(OpenAi, AgainstLocalServerWithPathPrefix) {
    tsupport::LocalServer srv;
    std::string auth;
    srv.server.Post("/v1/chat/completions", [&](const httplib::Request& rq, httplib::Response& rs) {
        auth = rq.get_header_value("Authorization");
        rs.set_content(R"({"choices": [{"message": {"content": "done", "tool_calls": [
                              {"id": "c1", "type": "function", "function": {"name": "library_search", "arguments": "{\"query\": \"n + 0\"}"}}]}}],
                           "usage": {"prompt_tokens": 70, "completion_tokens": 90,
                                     "completion_tokens_details": {"reasoning_tokens": 60}}})",
                       "application/json");
    });
    srv.start();
    OpenAiClient client({"sk-test", srv.url() + "/v1", std::chrono::seconds(5)});
    const auto r = client.complete(basic_request());
    EXPECT_EQ(auth, "Bearer sk-test");
    EXPECT_EQ(r.text, "done");
    ASSERT_EQ(r.tool_calls.size(), 1u);
    EXPECT_EQ(r.tool_calls[0].arguments["query"], "n + 0");
    EXPECT_EQ(r.usage, (TokenUsage{70, 30, 60}));
}

TEST(OpenAi, MalformedBodyIsTransport) {
    tsupport::LocalServer srv;
    srv.server.Post("/chat/completions", [&](const httplib::Request&, httplib::Response& rs) {
        rs.set_content("{\"unexpected\": true}", "application/json");
    });
    srv.start();
    OpenAiClient client({"k", srv.url(), std::chrono::seconds(5)});
    EXPECT_THROW(client.complete(basic_request()), TransportError);
}
