#include "proofloop/memory/memory.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/prompts.hpp"

namespace proofloop::memory {

using prompts::Template;

namespace {

constexpr std::string_view kTruncated = "\n[truncated to fit the context budget]";

std::string omitted_note(std::size_t n) {
    return "\n\n[" + std::to_string(n) + (n == 1 ? " older attempt" : " older attempts") +
           " omitted to fit the context budget]";
}

std::size_t total_size(const std::vector<std::string>& messages) {
    std::size_t n = 0;
    for (const auto& m : messages) n += m.size();
    return n;
}

std::string one_line(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return out;
}

}  // namespace

std::string utf8_prefix(std::string_view s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return std::string(s);
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return std::string(s.substr(0, cut));
}

std::string render_attempt(const AttemptRecord& attempt) {
    const std::string reasoning = attempt.proposal ? attempt.proposal->reasoning : std::string();
    return prompts::fill(Template::attempt,
                         {{"reasoning", reasoning}, {"code", attempt.code()}, {"feedback", attempt.feedback}});
}

MessageSequence reflection_messages(const AttemptRecord& attempt, std::string_view previous_notes) {
    const std::string reasoning = attempt.proposal ? attempt.proposal->reasoning : std::string();
    MessageSequence out;
    out.push_back({Role::system, std::string(prompts::text(Template::context_summary_system)), {}, {}});
    out.push_back({Role::user,
                   prompts::fill(Template::context_summary_user, {{"reasoning", reasoning},
                                                                  {"code", attempt.code()},
                                                                  {"feedback", attempt.feedback},
                                                                  {"previous_context", previous_notes}}),
                   {},
                   {}});
    return out;
}

MemoryState::MemoryState(MemoryConfig config) : config_(std::move(config)) {
    if (config_.kind == MemoryKind::history && config_.history_n < 1) throw ConfigError("history n must be at least 1");
}

UsageByModel MemoryState::update(const AttemptRecord& attempt, const Reflector& reflector) {
    UsageByModel usage;
    switch (config_.kind) {
        case MemoryKind::none:
            return usage;
        case MemoryKind::history:
            attempts_.push_back(attempt);
            while (attempts_.size() > static_cast<std::size_t>(config_.history_n)) attempts_.pop_front();
            return usage;
        case MemoryKind::self_managed:
            break;
    }

    last_ = attempt;
    std::string failure;
    if (reflector.llm == nullptr) {
        failure = "no reflection model configured";
    } else {
        LlmRequest request;
        request.model = reflector.model;
        request.messages = reflection_messages(attempt, notes_);
        request.thinking = reflector.thinking;
        request.max_output_tokens = reflector.max_output_tokens;
        request.seed = reflector.seed;
        request.purpose = "reflect";
        request.iteration = attempt.iteration;
        try {
            const LlmResponse response = reflector.llm->complete(request);
            add_usage(usage, reflector.model, response.usage);
            std::string text = response.text;
            while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) text.pop_back();
            if (text.empty()) {
                failure = "empty reflection";
            } else {
                notes_ = utf8_prefix(text, config_.notes_cap);
            }
        } catch (const Error& e) {
            failure = e.what();
        }
    }

    if (!failure.empty()) {
        const std::string marker = utf8_prefix(
            "[reflection after attempt " + std::to_string(attempt.iteration) + " failed: " + one_line(failure) + "]",
            config_.notes_cap);
        const std::size_t sep = notes_.empty() ? 0 : 1;
        const std::size_t room = config_.notes_cap > marker.size() + sep ? config_.notes_cap - marker.size() - sep : 0;
        std::string kept = utf8_prefix(notes_, room);
        if (!kept.empty()) kept.push_back('\n');
        notes_ = kept + marker;
    }
    return usage;
}

MemoryRender MemoryState::render() const {
    switch (config_.kind) {
        case MemoryKind::none:
            return {};
        case MemoryKind::history:
            return render_history();
        case MemoryKind::self_managed:
            return render_self_managed();
    }
    return {};
}

MemoryRender MemoryState::render_history() const {
    MemoryRender out;
    if (attempts_.empty()) return out;

    // Most recent first; drop from the old end until the messages fit.
    std::vector<std::string> blocks;
    for (auto it = attempts_.rbegin(); it != attempts_.rend(); ++it) blocks.push_back(render_attempt(*it));

    std::size_t keep = blocks.size();
    while (true) {
        std::vector<std::string> messages;
        messages.push_back(prompts::fill(Template::previous_attempt, {{"attempt", blocks[0]}}));
        if (keep > 1) {
            std::string older;
            for (std::size_t i = 1; i < keep; ++i) {
                if (i > 1) older += "\n\n";
                older += blocks[i];
            }
            messages.push_back(prompts::fill(Template::proposer_past_attempts, {{"previous_attempts", older}}));
        }
        const std::size_t dropped = blocks.size() - keep;
        if (dropped > 0) messages.back() += omitted_note(dropped);

        if (total_size(messages) <= config_.render_budget || keep == 1) {
            out.truncated = dropped > 0;
            if (total_size(messages) > config_.render_budget) {
                // Even the latest attempt alone is over budget.
                const std::string note(kTruncated);
                const std::size_t room = config_.render_budget > note.size() ? config_.render_budget - note.size() : 0;
                messages = {utf8_prefix(messages[0], room) + note};
                out.truncated = true;
            }
            out.messages = std::move(messages);
            return out;
        }
        --keep;
    }
}

MemoryRender MemoryState::render_self_managed() const {
    MemoryRender out;
    std::size_t budget = config_.render_budget;
    if (config_.include_last_attempt && last_) {
        std::string msg = prompts::fill(Template::previous_attempt, {{"attempt", render_attempt(*last_)}});
        if (msg.size() > budget) {
            const std::string note(kTruncated);
            msg = utf8_prefix(msg, budget > note.size() ? budget - note.size() : 0) + note;
            out.truncated = true;
        }
        budget -= std::min(budget, msg.size());
        out.messages.push_back(std::move(msg));
    }
    if (notes_.empty()) return out;

    std::string msg = prompts::fill(Template::proposer_experience, {{"experience", notes_}});
    if (msg.size() > budget) {
        // Keep the head of the notes; the template frame stays intact.
        const std::size_t frame = msg.size() - notes_.size();
        const std::size_t overhead = frame + kTruncated.size();
        if (budget <= overhead) {
            out.truncated = true;
            return out;
        }
        const std::string cut = utf8_prefix(notes_, budget - overhead) + std::string(kTruncated);
        msg = prompts::fill(Template::proposer_experience, {{"experience", cut}});
        out.truncated = true;
    }
    out.messages.push_back(std::move(msg));
    return out;
}

}  // namespace proofloop::memory
