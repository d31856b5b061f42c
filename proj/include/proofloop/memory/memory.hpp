#pragma once

#include "proofloop/core/llm.hpp"
#include "proofloop/core/types.hpp"

#include <deque>
#include <optional>
#include <string>

namespace proofloop::memory {

// One attempt in the `<attempt>` template.
std::string render_attempt(const AttemptRecord& attempt);

// The two reflection messages for a self-managed update.
MessageSequence reflection_messages(const AttemptRecord& attempt, std::string_view previous_notes);

struct Reflector {
    LlmClient* llm = nullptr;  // null: reflection always fails over to the marker
    std::string model;
    ThinkingBudget thinking;
    int max_output_tokens = 16000;
    std::uint64_t seed = 0;
};

// Carry-over context of one attempt loop.
//   none          keeps nothing
//   history       keeps the n most recent attempts
//   self_managed  keeps reflection notes (and, by default, the last attempt)
class MemoryState {
public:
    explicit MemoryState(MemoryConfig config);

    // Folds a finished attempt in. Returns the reflection LLM usage (empty
    // unless self-managed). A failed reflection keeps the old notes and
    // appends a one-line marker; it never throws.
    UsageByModel update(const AttemptRecord& attempt, const Reflector& reflector = {});

    // Prompt messages for the next proposal, within the render budget.
    MemoryRender render() const;

    MemoryKind kind() const { return config_.kind; }
    const std::deque<AttemptRecord>& attempts() const { return attempts_; }
    const std::string& notes() const { return notes_; }
    const std::optional<AttemptRecord>& last_attempt() const { return last_; }
    const MemoryConfig& config() const { return config_; }

private:
    MemoryRender render_history() const;
    MemoryRender render_self_managed() const;

    MemoryConfig config_;
    std::deque<AttemptRecord> attempts_;
    std::optional<AttemptRecord> last_;
    std::string notes_;
};

// Cuts to at most max_bytes without splitting a UTF-8 sequence.
std::string utf8_prefix(std::string_view s, std::size_t max_bytes);

}  // namespace proofloop::memory
