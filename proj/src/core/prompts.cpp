#include "proofloop/core/prompts.hpp"

#include <cstring>
#include <stdexcept>

namespace proofloop::prompts {

std::string_view file_name(Template t) {
    switch (t) {
        case Template::proposer_system_iterative: return "proposer_system_iterative.txt";
        case Template::proposer_system_single_shot: return "proposer_system_single_shot.txt";
        case Template::proposer_user: return "proposer_user.txt";
        case Template::proposer_experience: return "proposer_experience.txt";
        case Template::proposer_past_attempts: return "proposer_past_attempts.txt";
        case Template::previous_attempt: return "previous_attempt.txt";
        case Template::attempt: return "attempt.txt";
        case Template::context_summary_system: return "context_summary_system.txt";
        case Template::context_summary_user: return "context_summary_user.txt";
        case Template::reviewer_system: return "reviewer_system.txt";
        case Template::reviewer_user: return "reviewer_user.txt";
    }
    return {};
}

std::string_view text(Template t) {
    const auto name = file_name(t);
    for (std::size_t i = 0; i < detail::kEmbeddedCount; ++i) {
        if (name == detail::kEmbedded[i].name) return detail::kEmbedded[i].content;
    }
    throw std::logic_error("template not embedded: " + std::string(name));
}

std::string fill(std::string_view tpl, const Vars& vars) {
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            const auto close = tpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const auto key = tpl.substr(i + 1, close - i - 1);
                bool replaced = false;
                for (const auto& [name, value] : vars) {
                    if (name == key) {
                        out.append(value);
                        replaced = true;
                        break;
                    }
                }
                if (replaced) {
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i]);
        ++i;
    }
    return out;
}

}  // namespace proofloop::prompts
