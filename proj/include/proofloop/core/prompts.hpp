#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace proofloop::prompts {

// Prompt templates shipped under templates/ and embedded at build time.
enum class Template {
    proposer_system_iterative,
    proposer_system_single_shot,
    proposer_user,
    proposer_experience,
    proposer_past_attempts,
    previous_attempt,
    attempt,
    context_summary_system,
    context_summary_user,
    reviewer_system,
    reviewer_user,
};

inline constexpr Template kAllTemplates[] = {
    Template::proposer_system_iterative, Template::proposer_system_single_shot,
    Template::proposer_user,             Template::proposer_experience,
    Template::proposer_past_attempts,    Template::previous_attempt,
    Template::attempt,                   Template::context_summary_system,
    Template::context_summary_user,      Template::reviewer_system,
    Template::reviewer_user,
};

std::string_view file_name(Template t);
std::string_view text(Template t);

using Vars = std::vector<std::pair<std::string_view, std::string_view>>;

// Replaces `{name}` for every name in vars in a single left-to-right pass.
// Braces that do not spell a known name are copied through, and substituted
// values are never rescanned.
std::string fill(std::string_view tpl, const Vars& vars);

inline std::string fill(Template t, const Vars& vars) { return fill(text(t), vars); }

namespace detail {
struct EmbeddedTemplate {
    const char* name;
    const char* content;
};
extern const EmbeddedTemplate kEmbedded[];
extern const std::size_t kEmbeddedCount;
}  // namespace detail

}  // namespace proofloop::prompts
