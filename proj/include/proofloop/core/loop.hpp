#pragma once

#include "proofloop/core/clock.hpp"
#include "proofloop/core/llm.hpp"
#include "proofloop/core/types.hpp"
#include "proofloop/leanenv/build.hpp"
#include "proofloop/toolbox/toolbox.hpp"

#include <cstdint>
#include <functional>

namespace proofloop {

// Everything an attempt loop talks to. Services are shared between
// concurrent loops and must be thread-safe.
struct ServiceBundle {
    LlmClient* proposer = nullptr;
    LlmClient* reviewer = nullptr;    // null: deterministic checks decide alone
    LlmClient* reflection = nullptr;  // null: the proposer client reflects
    leanenv::BuildBackend* builder = nullptr;
    toolbox::LibrarySearch* library = nullptr;
    toolbox::WebSearch* web = nullptr;
    toolbox::ToolboxOptions tool_options;
    PriceTable prices;  // empty: costs are reported as 0
    const Clock* clock = nullptr;  // null: system clock
    std::function<void(const AttemptRecord&)> on_attempt;
};

// The configuration a loop actually runs with: single-shot means one
// iteration and no memory.
ProverConfig effective_config(const ProverConfig& config);

// Propose -> review -> remember until the reviewer approves or the budget
// runs out. Cycle failures become feedback for the next cycle; service
// failures (LLM retries exhausted, workspace unusable, target missing) end
// the loop with an error outcome. Never throws for a well-formed bundle.
ProofResult run_attempt_loop(const TheoremTask& task, const ProverConfig& config, const ServiceBundle& services,
                             std::uint64_t seed = 0);

}  // namespace proofloop
