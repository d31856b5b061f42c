#include "support.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/prompts.hpp"
#include "proofloop/lean/source.hpp"
#include "proofloop/memory/memory.hpp"

#include <gtest/gtest.h>

using namespace proofloop;
using namespace proofloop::memory;
using proofloop::lean::count_occurrences;

namespace {

AttemptRecord attempt(int iteration, const std::string& feedback = "") {
    AttemptRecord a;
    a.iteration = iteration;
    a.proposal = ProofProposal{"r" + std::to_string(iteration), {}, {},
                               "theorem t : True := attempt_" + std::to_string(iteration)};
    a.stage = AttemptStage::build_failed;
    a.feedback = feedback.empty() ? "feedback " + std::to_string(iteration) : feedback;
    return a;
}

MemoryConfig history(int n) {
    MemoryConfig c;
    c.kind = MemoryKind::history;
    c.history_n = n;
    return c;
}

MemoryConfig self_managed(bool include_last = true) {
    MemoryConfig c;
    c.kind = MemoryKind::self_managed;
    c.include_last_attempt = include_last;
    return c;
}

// Iterations named in a rendered prompt, in order of appearance.
std::vector<int> iterations_in(const std::string& text) {
    std::vector<int> out;
    for (auto pos = text.find("attempt_"); pos != std::string::npos; pos = text.find("attempt_", pos + 1)) {
        out.push_back(std::stoi(text.substr(pos + 8)));
    }
    return out;
}

}  // namespace

TEST(HistoryMemory, KeepsMostRecentN) {
    MemoryState state(history(5));
    for (int i = 1; i <= 10; ++i) {
        state.update(attempt(i));
        const auto& kept = state.attempts();
        const int expected = std::min(i, 5);
        ASSERT_EQ(static_cast<int>(kept.size()), expected);
        for (int k = 0; k < expected; ++k) EXPECT_EQ(kept[k].iteration, i - expected + 1 + k);

        const auto render = state.render();
        std::string all;
        for (const auto& m : render.messages) all += m;
        EXPECT_EQ(static_cast<int>(count_occurrences(all, "<attempt>")), expected);
        // Most recent first.
        std::vector<int> want;
        for (int k = i; k > i - expected; --k) want.push_back(k);
        EXPECT_EQ(iterations_in(all), want);
        EXPECT_FALSE(render.truncated);
    }
}

TEST(HistoryMemory, LatestInPreviousAttemptOlderInPastAttempts) {
    MemoryState state(history(3));
    state.update(attempt(1));
    EXPECT_EQ(state.render().messages.size(), 1u);
    state.update(attempt(2));
    const auto r = state.render();
    ASSERT_EQ(r.messages.size(), 2u);
    EXPECT_EQ(r.messages[0], prompts::fill(prompts::Template::previous_attempt, {{"attempt", render_attempt(attempt(2))}}));
    EXPECT_EQ(r.messages[1],
              prompts::fill(prompts::Template::proposer_past_attempts, {{"previous_attempts", render_attempt(attempt(1))}}));
}

TEST(HistoryMemory, EmptyBeforeFirstUpdate) {
    EXPECT_TRUE(MemoryState(history(2)).render().empty());
    EXPECT_TRUE(MemoryState(self_managed()).render().empty());
}

TEST(HistoryMemory, BudgetDropsOldestFirst) {
    auto cfg = history(5);
    cfg.render_budget = 1200;
    MemoryState state(cfg);
    for (int i = 1; i <= 5; ++i) state.update(attempt(i, std::string(150, 'x')));
    const auto r = state.render();
    std::size_t total = 0;
    std::string all;
    for (const auto& m : r.messages) {
        total += m.size();
        all += m;
    }
    EXPECT_LE(total, cfg.render_budget);
    EXPECT_TRUE(r.truncated);
    const auto its = iterations_in(all);
    ASSERT_FALSE(its.empty());
    EXPECT_EQ(its.front(), 5);
    for (std::size_t k = 1; k < its.size(); ++k) EXPECT_EQ(its[k], its[k - 1] - 1);
    EXPECT_NE(all.find("omitted to fit the context budget"), std::string::npos);
}

TEST(HistoryMemory, SingleHugeAttemptIsCut) {
    auto cfg = history(2);
    cfg.render_budget = 300;
    MemoryState state(cfg);
    state.update(attempt(1, std::string(5000, 'y')));
    const auto r = state.render();
    ASSERT_EQ(r.messages.size(), 1u);
    EXPECT_LE(r.messages[0].size(), 300u);
    EXPECT_TRUE(r.truncated);
}

TEST(HistoryMemory, RejectsNonPositiveN) {
    EXPECT_THROW(MemoryState{history(0)}, ConfigError);
}

TEST(NoMemory, KeepsNothing) {
    MemoryConfig c;
    c.kind = MemoryKind::none;
    MemoryState state(c);
    state.update(attempt(1));
    EXPECT_TRUE(state.render().empty());
}

TEST(SelfManagedMemory, ReflectionPromptMatchesGolden) {
    AttemptRecord a;
    a.iteration = 1;
    a.proposal = ProofProposal{"Try induction on n.", {}, {}, "theorem add_zero' (n : Nat) : n + 0 = n := by\n  induction n"};
    a.feedback = "The build failed with 1 error:\nline 2: unsolved goals";
    const auto msgs = reflection_messages(a, "Nat.add_succ needs an explicit argument.");
    ASSERT_EQ(msgs.size(), 2u);
    EXPECT_EQ(msgs[0].role, Role::system);
    EXPECT_EQ(msgs[0].content, tsupport::read_file(tsupport::source_dir() / "templates/context_summary_system.txt"));
    EXPECT_EQ(msgs[1].role, Role::user);
    EXPECT_EQ(msgs[1].content, tsupport::read_file(tsupport::source_dir() / "tests/golden/reflection_user.txt"));
}

TEST(SelfManagedMemory, ReflectionReplacesNotesAndSeesPrevious) {
    MemoryState state(self_managed());
    proposer::ScriptedLlmClient llm;
    llm.push_text("note one", {100, 10, 0});
    llm.push_text("note one\nnote two", {200, 20, 0});
    const Reflector reflector{&llm, "reflect-model", {}, 1000, 3};

    const auto u1 = state.update(attempt(1), reflector);
    EXPECT_EQ(state.notes(), "note one");
    EXPECT_EQ(u1.at("reflect-model"), (TokenUsage{100, 10, 0}));
    state.update(attempt(2), reflector);
    EXPECT_EQ(state.notes(), "note one\nnote two");

    const auto reqs = llm.requests();
    ASSERT_EQ(reqs.size(), 2u);
    EXPECT_EQ(reqs[0].purpose, "reflect");
    EXPECT_EQ(reqs[0].model, "reflect-model");
    EXPECT_NE(reqs[0].messages[1].content.find("<previous-context>\n\n</previous-context>"), std::string::npos);
    EXPECT_NE(reqs[1].messages[1].content.find("<previous-context>\nnote one\n</previous-context>"), std::string::npos);
    EXPECT_EQ(reqs[1].iteration, 2);

    const auto r = state.render();
    ASSERT_EQ(r.messages.size(), 2u);
    EXPECT_NE(r.messages[0].find("attempt_2"), std::string::npos);
    EXPECT_EQ(r.messages[1], prompts::fill(prompts::Template::proposer_experience, {{"experience", "note one\nnote two"}}));
}

TEST(SelfManagedMemory, NotesOnlyWhenLastAttemptExcluded) {
    MemoryState state(self_managed(false));
    proposer::ScriptedLlmClient llm;
    llm.push_text("lesson");
    state.update(attempt(1), {&llm, "m", {}, 100, 0});
    const auto r = state.render();
    ASSERT_EQ(r.messages.size(), 1u);
    EXPECT_NE(r.messages[0].find("<experience>\nlesson\n</experience>"), std::string::npos);
}

TEST(SelfManagedMemory, FailedReflectionKeepsNotesAndAddsMarker) {
    MemoryState state(self_managed());
    proposer::ScriptedLlmClient llm;
    llm.push_text("kept");
    {
        proposer::ScriptedLlmClient::Reply r;
        r.error = "unavailable";
        llm.push(r);
    }
    state.update(attempt(1), {&llm, "m", {}, 100, 0});
    EXPECT_NO_THROW(state.update(attempt(2), {&llm, "m", {}, 100, 0}));
    EXPECT_EQ(state.notes().rfind("kept\n[reflection after attempt 2 failed: ", 0), 0u);
    EXPECT_EQ(state.notes().back(), ']');
    EXPECT_EQ(state.last_attempt()->iteration, 2);

    MemoryState bare(self_managed());
    bare.update(attempt(1));
    EXPECT_EQ(bare.notes(), "[reflection after attempt 1 failed: no reflection model configured]");
}

TEST(SelfManagedMemory, EmptyReflectionCountsAsFailure) {
    MemoryState state(self_managed());
    proposer::ScriptedLlmClient llm;
    llm.push_text("  \n");
    state.update(attempt(1), {&llm, "m", {}, 100, 0});
    EXPECT_NE(state.notes().find("empty reflection"), std::string::npos);
}

TEST(SelfManagedMemory, NotesCapped) {
    auto cfg = self_managed();
    cfg.notes_cap = 50;
    MemoryState state(cfg);
    proposer::ScriptedLlmClient llm;
    llm.push_text(std::string(200, 'n'));
    state.update(attempt(1), {&llm, "m", {}, 100, 0});
    EXPECT_EQ(state.notes().size(), 50u);
    // Repeated failures never grow past the cap.
    for (int i = 2; i < 20; ++i) state.update(attempt(i));
    EXPECT_LE(state.notes().size(), 50u);
}

TEST(SelfManagedMemory, RenderBudgetTruncatesNotesKeepingFrame) {
    auto cfg = self_managed(false);
    cfg.render_budget = 400;
    MemoryState state(cfg);
    proposer::ScriptedLlmClient llm;
    llm.push_text(std::string(3000, 'z'));
    state.update(attempt(1), {&llm, "m", {}, 100, 0});
    const auto r = state.render();
    ASSERT_EQ(r.messages.size(), 1u);
    EXPECT_LE(r.messages[0].size(), 400u);
    EXPECT_TRUE(r.truncated);
    EXPECT_NE(r.messages[0].find("</experience>"), std::string::npos);
}

TEST(Utf8Prefix, NeverSplitsSequences) {
    const std::string s = "aαβγ";  // 1 + 2 + 2 + 2 bytes
    EXPECT_EQ(utf8_prefix(s, 2), "a");
    EXPECT_EQ(utf8_prefix(s, 3), "aα");
    EXPECT_EQ(utf8_prefix(s, 100), s);
}
