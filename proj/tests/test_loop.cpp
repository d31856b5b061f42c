#include "support.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/loop.hpp"
#include "proofloop/lean/source.hpp"
#include "proofloop/review/checks.hpp"

#include <gtest/gtest.h>

#include <chrono>

using namespace proofloop;
using proofloop::tsupport::MockWorld;

namespace {

std::string theorem_with(const std::string& tactic) {
    return "theorem add_zero' (n : Nat) : n + 0 = n := by\n  " + tactic;
}

void on_iteration(proposer::ScriptedLlmClient& llm, int iteration, const std::string& reply, TokenUsage usage = {}) {
    proposer::ScriptedLlmClient::Rule rule;
    rule.purpose = "propose";
    rule.iteration = iteration;
    rule.replies.push_back(tsupport::text_reply(reply, usage));
    llm.add_rule(std::move(rule));
}

std::unique_ptr<leanenv::MockBuildBackend> builder_failing_on(const std::vector<std::string>& needles) {
    std::vector<leanenv::MockBuildBackend::Rule> rules;
    for (const auto& n : needles) {
        leanenv::MockBuildBackend::Rule r;
        r.contains = n;
        r.report = tsupport::failed_build({tsupport::error_at(6, 2, "unknown tactic '" + n + "'")});
        rules.push_back(std::move(r));
    }
    return std::make_unique<leanenv::MockBuildBackend>(std::move(rules));
}

std::vector<AttemptStage> stages(const ProofResult& r) {
    std::vector<AttemptStage> out;
    for (const auto& a : r.transcript) out.push_back(a.stage);
    return out;
}

}  // namespace

TEST(Loop, FailTwiceThenProveAtThree) {
    MockWorld w;
    w.builder = builder_failing_on({"bad_one", "bad_two"});
    on_iteration(*w.llm, 1, tsupport::proposal_json(theorem_with("bad_one")));
    on_iteration(*w.llm, 2, tsupport::proposal_json(theorem_with("bad_two")));
    on_iteration(*w.llm, 3, tsupport::proposal_json(theorem_with("simp")));
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));

    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(10), w.bundle());
    ASSERT_EQ(r.outcome, ProofResult::Outcome::proved) << r.error_reason;
    EXPECT_EQ(r.proved_iteration, 3);
    EXPECT_EQ(stages(r), (std::vector<AttemptStage>{AttemptStage::build_failed, AttemptStage::build_failed,
                                                    AttemptStage::approved}));
    for (std::size_t i = 0; i < r.transcript.size(); ++i) EXPECT_EQ(r.transcript[i].iteration, static_cast<int>(i) + 1);

    // Iteration 2 saw iteration 1's feedback, iteration 3 saw both.
    const auto reqs = w.llm->requests();
    ASSERT_EQ(reqs.size(), 3u);
    std::string prompt2, prompt3;
    for (const auto& m : reqs[1].messages) prompt2 += m.content;
    for (const auto& m : reqs[2].messages) prompt3 += m.content;
    EXPECT_NE(prompt2.find("unknown tactic 'bad_one'"), std::string::npos);
    EXPECT_NE(prompt3.find("unknown tactic 'bad_one'"), std::string::npos);
    EXPECT_NE(prompt3.find("unknown tactic 'bad_two'"), std::string::npos);
    EXPECT_EQ(w.reviewer->call_count(), 1u);
}

TEST(Loop, AlwaysSorryExhaustsAtBudget) {
    for (int budget : {1, 3, 7}) {
        MockWorld w;
        w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("sorry"))));
        w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));
        const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(budget), w.bundle());
        EXPECT_EQ(r.outcome, ProofResult::Outcome::exhausted);
        ASSERT_EQ(static_cast<int>(r.transcript.size()), budget);
        for (const auto& a : r.transcript) EXPECT_EQ(a.stage, AttemptStage::open_goals);
        EXPECT_EQ(r.proved_iteration, 0);
        EXPECT_TRUE(r.final_source.empty());
        EXPECT_EQ(w.reviewer->call_count(), 0u);
        EXPECT_EQ(static_cast<int>(w.builder->requests().size()), budget);
    }
}

TEST(Loop, ApplyQuestionNeverProves) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("apply?"))));
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(3), w.bundle());
    EXPECT_EQ(r.outcome, ProofResult::Outcome::exhausted);
    for (const auto& a : r.transcript) {
        EXPECT_EQ(a.stage, AttemptStage::loophole);
        EXPECT_NE(a.feedback.find("apply?"), std::string::npos);
    }
}

TEST(Loop, ChangedStatementNeverProves) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(
        tsupport::proposal_json("theorem add_zero' (n : Nat) : n + 0 = n + 0 := by\n  rfl")));
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(2), w.bundle());
    EXPECT_EQ(r.outcome, ProofResult::Outcome::exhausted);
    EXPECT_EQ(stages(r), (std::vector<AttemptStage>{AttemptStage::loophole, AttemptStage::loophole}));
}

TEST(Loop, ReviewerRejectionReentersLoop) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("simp"))));
    w.reviewer->push_text(tsupport::kRejectVerdict);
    w.reviewer->push_text(tsupport::kApproveVerdict);
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(5), w.bundle());
    ASSERT_EQ(r.outcome, ProofResult::Outcome::proved);
    EXPECT_EQ(r.proved_iteration, 2);
    EXPECT_EQ(r.transcript[0].stage, AttemptStage::rejected);
    EXPECT_NE(r.transcript[0].feedback.find("circular argument"), std::string::npos);
    std::string prompt2;
    const auto reqs = w.llm->requests();
    for (const auto& m : reqs.at(1).messages) prompt2 += m.content;
    EXPECT_NE(prompt2.find("circular argument"), std::string::npos);
}

TEST(Loop, ApprovedFinalSourcePassesIndependentChecks) {
    MockWorld w;
    const std::string proof = theorem_with("simp");
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(proof, "simp closes it", {"Mathlib.Tactic"})));
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));
    const auto task = tsupport::add_zero_task();
    const auto r = run_attempt_loop(task, tsupport::test_config(3), w.bundle());
    ASSERT_EQ(r.outcome, ProofResult::Outcome::proved);
    const auto span = lean::find_declaration(r.final_source, "add_zero'");
    ASSERT_TRUE(span);
    const auto decl = r.final_source.substr(span->begin, span->size());
    EXPECT_EQ(decl, proof);
    EXPECT_TRUE(review::check_statement_preserved(task.target_theorem, decl));
    EXPECT_TRUE(review::no_sorry_in(r.final_source));
    EXPECT_TRUE(review::detect_loopholes(r.final_source, default_denylist()).clean());
    EXPECT_NE(r.final_source.find("import Mathlib.Tactic\n"), std::string::npos);
    // What was built is what is returned.
    EXPECT_EQ(w.builder->requests().back().source, r.final_source);
}

TEST(Loop, CostIsSumOfPerCycleCosts) {
    MockWorld w;
    w.builder = builder_failing_on({"bad"});
    on_iteration(*w.llm, 1, tsupport::proposal_json(theorem_with("bad")), {1000, 2000, 0});
    on_iteration(*w.llm, 2, tsupport::proposal_json(theorem_with("simp")), {3000, 500, 0});
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict, {400, 100, 0}));
    auto bundle = w.bundle();
    bundle.prices.set("mock", Price{3.0, 15.0, 15.0});
    bundle.prices.set("judge", Price{1.0, 5.0, 5.0});
    auto cfg = tsupport::test_config(5);
    cfg.reviewer_model = "judge";
    const auto r = run_attempt_loop(tsupport::add_zero_task(), cfg, bundle);
    ASSERT_EQ(r.outcome, ProofResult::Outcome::proved);
    // Oracle: (1000*3 + 2000*15 + 3000*3 + 500*15) / 1e6 + (400*1 + 100*5) / 1e6
    const double expected = (3000.0 + 30000.0 + 9000.0 + 7500.0) / 1e6 + (400.0 + 500.0) / 1e6;
    EXPECT_NEAR(r.total_cost, expected, 1e-12);
    double summed = 0.0;
    for (const auto& a : r.transcript) summed += bundle.prices.cost(a.usage);
    EXPECT_NEAR(r.total_cost, summed, 1e-12);
}

TEST(Loop, MissingPriceIsAnError) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("simp"))));
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));
    auto bundle = w.bundle();
    bundle.prices.set("other", Price{1, 1, 1});
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(2), bundle);
    EXPECT_EQ(r.outcome, ProofResult::Outcome::error);
    EXPECT_NE(r.error_reason.find("mock"), std::string::npos);
}

TEST(Loop, MalformedProposalBecomesFeedback) {
    MockWorld w;
    on_iteration(*w.llm, 1, "I am not sure what to do.");
    on_iteration(*w.llm, 2, tsupport::proposal_json(theorem_with("simp")));
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(3), w.bundle());
    ASSERT_EQ(r.outcome, ProofResult::Outcome::proved);
    EXPECT_EQ(r.transcript[0].stage, AttemptStage::malformed);
    EXPECT_EQ(r.transcript[0].feedback.rfind("malformed proposal: ", 0), 0u);
    EXPECT_EQ(r.transcript[0].code(), "I am not sure what to do.");
    EXPECT_EQ(w.builder->requests().size(), 1u);
}

TEST(Loop, LlmUnavailableEndsWithError) {
    MockWorld w;
    on_iteration(*w.llm, 1, tsupport::proposal_json(theorem_with("sorry")));
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(4), w.bundle());
    EXPECT_EQ(r.outcome, ProofResult::Outcome::error);
    EXPECT_NE(r.error_reason.find("proposer failed"), std::string::npos);
    EXPECT_EQ(r.transcript.size(), 1u);
}

TEST(Loop, ReviewerUnavailableEndsWithError) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("simp"))));
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(4), w.bundle());
    EXPECT_EQ(r.outcome, ProofResult::Outcome::error);
    EXPECT_NE(r.error_reason.find("review failed"), std::string::npos);
}

TEST(Loop, InvalidInputsAreErrorsNotThrows) {
    MockWorld w;
    auto task = tsupport::add_zero_task();
    task.target_theorem = "theorem missing : True := sorry";
    EXPECT_EQ(run_attempt_loop(task, tsupport::test_config(2), w.bundle()).outcome, ProofResult::Outcome::error);
    EXPECT_EQ(run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(0), w.bundle()).outcome,
              ProofResult::Outcome::error);
    EXPECT_EQ(run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(2), ServiceBundle{}).outcome,
              ProofResult::Outcome::error);
}

TEST(Loop, SingleShotRunsOnceWithoutMemory) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("sorry"))));
    auto cfg = tsupport::test_config(9);
    cfg.mode = ProverMode::single_shot;
    const auto r = run_attempt_loop(tsupport::add_zero_task(), cfg, w.bundle());
    EXPECT_EQ(r.outcome, ProofResult::Outcome::exhausted);
    EXPECT_EQ(r.transcript.size(), 1u);
    EXPECT_EQ(w.llm->requests().at(0).messages.size(), 2u);
}

TEST(Loop, SelfManagedReflectsBetweenButNotAfterLast) {
    MockWorld w;
    w.llm->add_rule({std::string("reflect"), std::nullopt, {}, {}, {tsupport::text_reply("lesson", {5, 5, 0})}});
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("sorry"))));
    auto cfg = tsupport::test_config(3);
    cfg.memory.kind = MemoryKind::self_managed;
    const auto r = run_attempt_loop(tsupport::add_zero_task(), cfg, w.bundle());
    EXPECT_EQ(r.outcome, ProofResult::Outcome::exhausted);
    int reflections = 0;
    for (const auto& q : w.llm->requests()) reflections += q.purpose == "reflect";
    EXPECT_EQ(reflections, 2);
    EXPECT_EQ(r.transcript[0].tokens(), (TokenUsage{5, 5, 0}));
    EXPECT_EQ(r.transcript[2].tokens(), (TokenUsage{}));
}

TEST(Loop, OnAttemptSeesEveryCycleInOrder) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("sorry"))));
    std::vector<int> seen;
    auto bundle = w.bundle();
    bundle.on_attempt = [&](const AttemptRecord& a) { seen.push_back(a.iteration); };
    run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(4), bundle);
    EXPECT_EQ(seen, (std::vector<int>{1, 2, 3, 4}));
}

TEST(Loop, WallTimeFromClock) {
    MockWorld w;
    w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("sorry"))));
    const auto r = run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(2), w.bundle());
    for (const auto& a : r.transcript) EXPECT_GE(a.wall_time_s, 0.0);
}

TEST(Loop, ToolFaultDoesNotStopTheLoop) {
    MockWorld w;
    auto web = toolbox::ScriptedWebSearch::from_json(nlohmann::json::parse(R"({"default": {"error": "timeout"}})"));
    proposer::ScriptedLlmClient::Reply call;
    call.response.tool_calls = {{"c1", "web_search", {{"query", "anything"}}}};
    w.llm->push(call);
    w.llm->push_text(tsupport::proposal_json(theorem_with("simp")));
    w.reviewer->set_default(tsupport::text_reply(tsupport::kApproveVerdict));
    auto bundle = w.bundle();
    bundle.web = &web;
    auto cfg = tsupport::test_config(2);
    cfg.tools_enabled = {Tool::web_search};
    const auto r = run_attempt_loop(tsupport::add_zero_task(), cfg, bundle);
    ASSERT_EQ(r.outcome, ProofResult::Outcome::proved);
    EXPECT_EQ(r.transcript[0].tool_rounds, 1);
    EXPECT_EQ(w.llm->requests().at(1).messages.back().content, "error: web search: timeout");
}

TEST(Loop, SuiteOfTwentyLoopsIsFast) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < 20; ++i) {
        MockWorld w;
        w.llm->set_default(tsupport::text_reply(tsupport::proposal_json(theorem_with("sorry"))));
        run_attempt_loop(tsupport::add_zero_task(), tsupport::test_config(20), w.bundle());
    }
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(10));
}
