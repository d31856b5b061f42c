#include "proofloop/core/llm.hpp"

#include "proofloop/core/hash.hpp"
#include "proofloop/core/serialize.hpp"

namespace proofloop {

std::string_view to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

std::string message_sequence_hash(const MessageSequence& messages) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& m : messages) j.push_back(m);
    return sha256_hex(j.dump());
}

}  // namespace proofloop
