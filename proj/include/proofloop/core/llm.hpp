#pragma once

#include "proofloop/core/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace proofloop {

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role r);

struct ToolCall {
    std::string id;
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();

    bool operator==(const ToolCall&) const = default;
};

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    std::vector<ToolCall> tool_calls;  // assistant turns only
    std::string tool_call_id;          // tool turns only

    bool operator==(const ChatMessage&) const = default;
};

using MessageSequence = std::vector<ChatMessage>;

struct ToolSpec {
    std::string name;
    std::string description;
    nlohmann::json parameters;  // JSON schema of the arguments object
};

struct LlmRequest {
    std::string model;
    MessageSequence messages;
    std::vector<ToolSpec> tools;
    ThinkingBudget thinking;
    // When set, providers with a native structured mode are asked for this schema.
    std::optional<nlohmann::json> response_schema;
    std::uint64_t seed = 0;
    int max_output_tokens = 16000;
    // False asks the provider not to emit tool calls even though tools are listed.
    bool allow_tool_calls = true;
    // Bookkeeping for logs and scripted clients; providers ignore these.
    std::string purpose;  // "propose", "review", "reflect"
    int iteration = 0;
};

struct LlmResponse {
    std::string text;
    std::vector<ToolCall> tool_calls;
    TokenUsage usage;
};

// Chat-completion style model endpoint. Implementations must be safe to call
// from concurrent attempt loops. Throws TransportError on retryable failures
// and LlmUnavailable when the service cannot be used at all.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

// Hex SHA-256 over a canonical serialization of the sequence.
std::string message_sequence_hash(const MessageSequence& messages);

}  // namespace proofloop
