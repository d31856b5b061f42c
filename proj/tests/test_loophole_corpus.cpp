#include "oracle.hpp"
#include "support.hpp"

#include "proofloop/review/checks.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace proofloop;

namespace {

struct CorpusEntry {
    std::string file;
    bool positive = false;
    std::set<std::string> kinds;
};

std::vector<CorpusEntry> load_corpus() {
    const auto dir = tsupport::source_dir() / "tests" / "corpus";
    const auto j = nlohmann::json::parse(tsupport::read_file(dir / "classification.json"));
    std::vector<CorpusEntry> out;
    for (const auto& e : j.at("entries")) {
        CorpusEntry c;
        c.file = e.at("file").get<std::string>();
        c.positive = e.at("class").get<std::string>() == "positive";
        for (const auto& k : e.at("kinds")) c.kinds.insert(k.get<std::string>());
        out.push_back(std::move(c));
    }
    return out;
}

std::string corpus_text(const CorpusEntry& e) {
    return tsupport::read_file(tsupport::source_dir() / "tests" / "corpus" / e.file);
}

}  // namespace

TEST(LoopholeCorpus, SizeAndBalance) {
    const auto corpus = load_corpus();
    int pos = 0;
    int neg = 0;
    for (const auto& e : corpus) (e.positive ? pos : neg)++;
    EXPECT_GE(pos, 10);
    EXPECT_GE(neg, 10);
}

TEST(LoopholeCorpus, EveryPositiveIsFlaggedWithItsKinds) {
    for (const auto& e : load_corpus()) {
        if (!e.positive) continue;
        const auto report = review::detect_loopholes(corpus_text(e), default_denylist());
        std::set<std::string> got;
        for (const auto& v : report.violations) got.insert(v.kind);
        EXPECT_EQ(got, e.kinds) << e.file;
    }
}

TEST(LoopholeCorpus, NoNegativeIsFlagged) {
    for (const auto& e : load_corpus()) {
        if (e.positive) continue;
        const auto report = review::detect_loopholes(corpus_text(e), default_denylist());
        EXPECT_TRUE(report.clean()) << e.file << ": " << (report.clean() ? "" : report.violations[0].kind);
    }
}

TEST(LoopholeCorpus, StripAgreesWithOracle) {
    for (const auto& e : load_corpus()) {
        const std::string text = corpus_text(e);
        const auto got = review::strip_sorries(text);
        const auto want = tsupport::oracle_strip(text);
        EXPECT_EQ(got.source, want.source) << e.file;
        EXPECT_EQ(got.sorry_sites, want.sites) << e.file;
    }
}
