#pragma once

#include "proofloop/core/llm.hpp"
#include "proofloop/core/types.hpp"
#include "proofloop/toolbox/toolbox.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace proofloop::proposer {

// System prompt for the mode, the target/file user prompt, then the memory
// messages in order. Memory is ignored in single-shot mode.
MessageSequence assemble_messages(const TheoremTask& task, const MemoryRender& memory, ProverMode mode,
                                  std::string_view lean_version = "4.24");

// Accepts a JSON object (bare or in a ```json fence) or the field-header
// layout from the system prompt (`imports: [...]`, `updated_theorem:` ...).
// Text ahead of the first header counts as reasoning. A fenced block inside
// updated_theorem is unwrapped. Throws ParseError when updated_theorem is
// missing or empty.
ProofProposal parse_proposal(std::string_view raw);

// Reads `[A, "B"]`, a bullet list or a comma-separated line.
std::vector<std::string> parse_name_list(std::string_view text);

nlohmann::json proposal_schema();

// Turns a provider tool call into a request; nullopt for unknown tools.
std::optional<toolbox::ToolCallRequest> to_tool_request(const ToolCall& call);

inline constexpr std::string_view kToolRoundRefusal =
    "refused: only one round of tool calls is allowed; reply now with the final proposal";

// Dispatches the round concurrently and returns one tool message per
// request, in request order. Requests past max_tool_calls are refused,
// disabled tools answer "tool disabled", and failures become error text.
std::vector<ChatMessage> execute_tool_round(const std::vector<toolbox::ToolCallRequest>& requests,
                                            const toolbox::Toolbox* toolbox, int max_tool_calls);

struct ProposeResult {
    std::optional<ProofProposal> proposal;
    std::string parse_error;  // set when proposal is empty
    std::string raw;          // final model text
    TokenUsage usage;         // summed over every call of the pass
    int tool_rounds = 0;
    int llm_calls = 0;
    MessageSequence transcript;  // prompt plus every assistant/tool turn
};

// One assemble -> (optional tool round) -> final generation pass. A second
// batch of tool calls is answered with a refusal and one more call that
// forbids tools. Parse failures are reported in the result, not thrown.
// Throws LlmUnavailable from the client.
class Proposer {
public:
    Proposer(LlmClient& llm, const toolbox::Toolbox* toolbox) : llm_(llm), toolbox_(toolbox) {}

    ProposeResult propose(const TheoremTask& task, const MemoryRender& memory, const ProverConfig& config,
                          std::uint64_t seed = 0, int iteration = 0) const;

private:
    LlmClient& llm_;
    const toolbox::Toolbox* toolbox_;
};

}  // namespace proofloop::proposer
