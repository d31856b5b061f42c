#pragma once

#include "proofloop/core/llm.hpp"
#include "proofloop/core/types.hpp"
#include "proofloop/leanenv/build.hpp"
#include "proofloop/review/checks.hpp"

#include <optional>
#include <string>
#include <vector>

namespace proofloop::review {

struct ReviewOptions {
    std::vector<std::string> denylist = default_denylist();
    std::string reviewer_model = "mock";
    ThinkingBudget thinking;
    int max_output_tokens = 16000;
    double build_timeout_s = 300.0;
    std::string scratch_file = "Main.lean";
};

struct ReviewOutcome {
    AttemptStage stage = AttemptStage::build_failed;
    std::optional<BuildFeedback> build;     // set for build_failed / open_goals
    std::optional<ReviewVerdict> verdict;   // set for loophole / rejected / approved
    LoopholeReport loopholes;
    CandidateFile candidate;
    std::string feedback;  // text handed back to the proposer
    UsageByModel usage;    // reviewer LLM tokens, if it was called
    double queue_wait_s = 0.0;
};

// Line mapping for feedback: lines inside the target theorem are reported
// relative to the theorem (as the proposer wrote it), others as file lines.
struct FeedbackFrame {
    int target_first_line = 1;
    int target_last_line = 0;  // 0: report every line as a file line
};

std::string render_build_feedback(const BuildFeedback& feedback, const FeedbackFrame& frame = {});
std::string render_loophole_feedback(const LoopholeReport& report);
std::string render_verdict(const ReviewVerdict& verdict);

// Reads `check1: True, check2: ..., approved: ...` / `reasoning: ...` text
// or an equivalent JSON object. Missing checks read as False; approved is
// forced False unless all three checks hold.
ReviewVerdict parse_reviewer_verdict(std::string_view text);

// Checks the reviewer agent's three questions without an LLM: check 1 by
// statement comparison, check 2 by sorry/admit tokens in the proposed body,
// check 3 by remaining compiler errors and non-sorry loopholes.
ReviewVerdict deterministic_verdict(std::string_view original_theorem, const ProofProposal& proposal,
                                    const std::vector<Diagnostic>& non_goal_diagnostics,
                                    const LoopholeReport& loopholes);

MessageSequence reviewer_messages(std::string_view original_theorem, std::string_view proposed_theorem);

nlohmann::json reviewer_schema();

// Compiler plus reviewer: assemble -> strip -> build -> deterministic checks
// -> reviewer LLM. The LLM is only called for a clean, sorry-free build that
// passes every deterministic check. A null reviewer approves whatever passes
// the deterministic checks.
class ReviewSystem {
public:
    ReviewSystem(leanenv::BuildBackend& builder, LlmClient* reviewer, ReviewOptions options);

    // Throws TargetNotFound, WorkspaceError and LlmUnavailable.
    ReviewOutcome review(const TheoremTask& task, const ProofProposal& proposal, int iteration = 0) const;

    const ReviewOptions& options() const { return options_; }

private:
    leanenv::BuildBackend& builder_;
    LlmClient* reviewer_;
    ReviewOptions options_;
};

}  // namespace proofloop::review
