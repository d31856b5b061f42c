#pragma once

#include "proofloop/core/llm.hpp"
#include "proofloop/core/types.hpp"

#include <nlohmann/json.hpp>

namespace proofloop {

void to_json(nlohmann::json& j, const ProofProposal& p);
void from_json(const nlohmann::json& j, ProofProposal& p);
void to_json(nlohmann::json& j, const Diagnostic& d);
void from_json(const nlohmann::json& j, Diagnostic& d);
void to_json(nlohmann::json& j, const TokenUsage& u);
void from_json(const nlohmann::json& j, TokenUsage& u);
void to_json(nlohmann::json& j, const AttemptRecord& a);
void to_json(nlohmann::json& j, const ProofResult& r);
void to_json(nlohmann::json& j, const ChatMessage& m);
void to_json(nlohmann::json& j, const ToolCall& c);

// Canonical form used for fingerprints and ledger headers.
nlohmann::json config_to_json(const ProverConfig& config);
std::string config_fingerprint(const ProverConfig& config);

}  // namespace proofloop
