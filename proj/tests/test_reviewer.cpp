#include "support.hpp"

#include "proofloop/core/prompts.hpp"
#include "proofloop/review/reviewer.hpp"

#include <gtest/gtest.h>

using namespace proofloop;
using namespace proofloop::review;

namespace {

constexpr const char* kOriginal = "theorem foo (n : Nat) : n + 0 = n := sorry";

ProofProposal proposal(const std::string& theorem) {
    ProofProposal p;
    p.updated_theorem = theorem;
    return p;
}

struct Checks {
    bool c1, c2, c3, approved;
    bool operator==(const Checks&) const = default;
};

Checks checks(const ReviewVerdict& v) { return {v.statement_preserved, v.no_sorry, v.no_other_issues, v.approved}; }

}  // namespace

// The three worked reviewer examples, decided without an LLM.
TEST(DeterministicVerdict, UndefinedReferenceGoesToCheck3) {
    const auto p = proposal("theorem foo (n : Nat) : n + 0 = n := by\n  have h1 := foo_h1\n  exact h1");
    const auto v = deterministic_verdict(kOriginal, p, {tsupport::error_at(2, 13, "unknown identifier 'foo_h1'")},
                                         detect_loopholes(p.updated_theorem, default_denylist()));
    EXPECT_EQ(checks(v), (Checks{true, true, false, false}));
    EXPECT_NE(v.reasoning.find("foo_h1"), std::string::npos);
}

TEST(DeterministicVerdict, AddedParameterFailsCheck1) {
    const auto p = proposal("theorem foo (n m : Nat) : n + m = n := by omega");
    const auto v = deterministic_verdict(kOriginal, p, {}, detect_loopholes(p.updated_theorem, default_denylist()));
    EXPECT_EQ(checks(v), (Checks{false, true, true, false}));
}

TEST(DeterministicVerdict, RetainedSorryFailsCheck2) {
    const auto p = proposal("theorem foo (n : Nat) : n + 0 = n := by sorry");
    const auto v = deterministic_verdict(kOriginal, p, {}, detect_loopholes(p.updated_theorem, default_denylist()));
    EXPECT_EQ(checks(v), (Checks{true, false, true, false}));
}

TEST(DeterministicVerdict, CleanProofApproved) {
    const auto p = proposal("theorem foo (n : Nat) : n + 0 = n := by omega");
    const auto v = deterministic_verdict(kOriginal, p, {}, {});
    EXPECT_EQ(checks(v), (Checks{true, true, true, true}));
    EXPECT_TRUE(v.deterministic);
}

TEST(DeterministicVerdict, OtherLoopholesGoToCheck3) {
    const auto p = proposal("theorem foo (n : Nat) : n + 0 = n := by apply?");
    const auto v = deterministic_verdict(kOriginal, p, {}, detect_loopholes(p.updated_theorem, default_denylist()));
    EXPECT_EQ(checks(v), (Checks{true, true, false, false}));
}

TEST(VerdictParsing, FieldLayout) {
    const auto v = parse_reviewer_verdict(
        "check1: True, check2: True, check3: False, approved: False\nreasoning: \"Statement preserved, no sorry, but "
        "references undefined foo_h1\"");
    EXPECT_EQ(checks(v), (Checks{true, true, false, false}));
    EXPECT_EQ(v.reasoning, "Statement preserved, no sorry, but references undefined foo_h1");
    EXPECT_FALSE(v.deterministic);
}

TEST(VerdictParsing, MarkdownDecoration) {
    const auto v = parse_reviewer_verdict("**Check 1**: true\n**check-2**: TRUE\n- check3 = true\napproved: true");
    EXPECT_EQ(checks(v), (Checks{true, true, true, true}));
}

TEST(VerdictParsing, JsonObject) {
    const auto v = parse_reviewer_verdict(std::string("Here you go:\n```json\n") + tsupport::kApproveVerdict + "\n```");
    EXPECT_EQ(checks(v), (Checks{true, true, true, true}));
    EXPECT_EQ(v.reasoning, "looks right");
}

TEST(VerdictParsing, ApprovalNeedsAllChecks) {
    EXPECT_FALSE(parse_reviewer_verdict("check1: True, check2: False, check3: True, approved: True").approved);
    // A missing check reads as False.
    const auto v = parse_reviewer_verdict("check1: True, check3: True, approved: True");
    EXPECT_FALSE(v.no_sorry);
    EXPECT_FALSE(v.approved);
    EXPECT_NE(v.reasoning.find("did not state all three checks"), std::string::npos);
}

TEST(VerdictParsing, ExplicitDisapprovalWins) {
    EXPECT_FALSE(parse_reviewer_verdict("check1: True, check2: True, check3: True, approved: False").approved);
    EXPECT_TRUE(parse_reviewer_verdict("check1: True, check2: True, check3: True").approved);
}

TEST(ReviewerMessages, FilledFromTemplates) {
    const auto m = reviewer_messages(kOriginal, "theorem foo (n : Nat) : n + 0 = n := by simp");
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m[0].content, prompts::text(prompts::Template::reviewer_system));
    EXPECT_NE(m[1].content.find("<original>\n```lean\n" + std::string(kOriginal) + "\n```\n</original>"), std::string::npos);
    EXPECT_NE(m[1].content.find("theorem foo (n : Nat) : n + 0 = n := by simp"), std::string::npos);
    EXPECT_EQ(m[1].content.find("{original_theorem}"), std::string::npos);
    EXPECT_EQ(m[1].content.find("{proposed_proof}"), std::string::npos);
}

// ---- the pipeline

class Pipeline : public ::testing::Test {
protected:
    TheoremTask task = tsupport::add_zero_task();
    tsupport::MockWorld world;

    ReviewOutcome run(const std::string& theorem, bool with_reviewer = true) {
        ReviewSystem rs(*world.builder, with_reviewer ? world.reviewer.get() : nullptr, ReviewOptions{});
        return rs.review(task, proposal(theorem), 1);
    }
};

TEST_F(Pipeline, FailingBuildListsErrorsByTheoremLine) {
    world.builder = std::make_unique<leanenv::MockBuildBackend>(std::vector<leanenv::MockBuildBackend::Rule>{
        {"", "Nat.add_succ", tsupport::failed_build({tsupport::error_at(6, 2, "unknown identifier 'Nat.add_succ'")})}});
    const auto out = run("theorem add_zero' (n : Nat) : n + 0 = n := by\n  exact Nat.add_succ n");
    EXPECT_EQ(out.stage, AttemptStage::build_failed);
    EXPECT_EQ(out.feedback, "The build failed with 1 error:\nline 2: unknown identifier 'Nat.add_succ'\n");
    EXPECT_EQ(world.reviewer->call_count(), 0u);
}

TEST_F(Pipeline, StrippedSorryReportsGoals) {
    leanenv::BuildReport report;
    report.success = false;
    report.diagnostics = {tsupport::error_at(7, 12, "unsolved goals\ncase zero\n⊢ 0 + 0 = 0"),
                          tsupport::error_at(8, 17, "unsolved goals\ncase succ\nk : ℕ\nih : k + 0 = k\n⊢ k + 1 + 0 = k + 1")};
    world.builder = std::make_unique<leanenv::MockBuildBackend>(std::vector<leanenv::MockBuildBackend::Rule>{}, report);
    const auto out = run("theorem add_zero' (n : Nat) : n + 0 = n := by\n  induction n with\n  | zero => sorry\n  | succ k ih => sorry");
    EXPECT_EQ(out.stage, AttemptStage::open_goals);
    ASSERT_TRUE(out.build);
    EXPECT_TRUE(out.build->compiled);
    ASSERT_EQ(out.build->goal_states.size(), 2u);
    EXPECT_EQ(out.build->goal_states[0].goal, "case zero\n⊢ 0 + 0 = 0");
    EXPECT_NE(out.feedback.find("sorry #1 at line 3, column 13:\nunsolved goals\ncase zero\n⊢ 0 + 0 = 0"), std::string::npos);
    EXPECT_NE(out.feedback.find("sorry #2 at line 4, column 18:"), std::string::npos);
    // The built source had its placeholders removed.
    const auto built = world.builder->requests().back().source;
    EXPECT_NE(built.find("| zero => \n"), std::string::npos);
    EXPECT_EQ(world.reviewer->call_count(), 0u);
}

TEST_F(Pipeline, LoopholeShortCircuitsTheReviewer) {
    const auto out = run("theorem add_zero' (n : Nat) : n + 0 = n := by\n  apply?");
    EXPECT_EQ(out.stage, AttemptStage::loophole);
    EXPECT_TRUE(out.loopholes.has("apply?"));
    EXPECT_NE(out.feedback.find("apply?"), std::string::npos);
    EXPECT_EQ(world.reviewer->call_count(), 0u);
}

TEST_F(Pipeline, ChangedStatementShortCircuitsTheReviewer) {
    const auto out = run("theorem add_zero' (n m : Nat) : n + m = n := by\n  simp");
    EXPECT_EQ(out.stage, AttemptStage::loophole);
    ASSERT_TRUE(out.verdict);
    EXPECT_FALSE(out.verdict->statement_preserved);
    EXPECT_EQ(world.reviewer->call_count(), 0u);
}

TEST_F(Pipeline, ReviewerApproves) {
    world.reviewer->push_text(tsupport::kApproveVerdict, {300, 40, 0});
    const auto out = run("theorem add_zero' (n : Nat) : n + 0 = n := by\n  simp");
    EXPECT_EQ(out.stage, AttemptStage::approved);
    ASSERT_TRUE(out.verdict);
    EXPECT_EQ(checks(*out.verdict), (Checks{true, true, true, true}));
    ASSERT_EQ(world.reviewer->requests().size(), 1u);
    const auto req = world.reviewer->requests()[0];
    EXPECT_EQ(req.purpose, "review");
    EXPECT_EQ(req.iteration, 1);
    EXPECT_NE(req.messages[1].content.find(tsupport::kAddZeroTarget), std::string::npos);
    EXPECT_EQ(out.usage.at("mock"), (TokenUsage{300, 40, 0}));
}

TEST_F(Pipeline, ReviewerRejects) {
    world.reviewer->push_text(tsupport::kRejectVerdict);
    const auto out = run("theorem add_zero' (n : Nat) : n + 0 = n := by\n  simp");
    EXPECT_EQ(out.stage, AttemptStage::rejected);
    EXPECT_NE(out.feedback.find("circular argument"), std::string::npos);
}

TEST_F(Pipeline, NullReviewerTrustsDeterministicChecks) {
    const auto out = run("theorem add_zero' (n : Nat) : n + 0 = n := by\n  simp", false);
    EXPECT_EQ(out.stage, AttemptStage::approved);
}

TEST_F(Pipeline, WarningsDoNotBlockApproval) {
    leanenv::BuildReport report;
    report.success = true;
    report.diagnostics = {{"Main.lean", 5, 0, Severity::warning, "unused variable"}};
    world.builder = std::make_unique<leanenv::MockBuildBackend>(std::vector<leanenv::MockBuildBackend::Rule>{}, report);
    const auto out = run("theorem add_zero' (n : Nat) : n + 0 = n := by\n  simp", false);
    EXPECT_EQ(out.stage, AttemptStage::approved);
}
