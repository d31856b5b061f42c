#pragma once

#include "proofloop/core/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace proofloop::harness {

inline constexpr std::string_view kLedgerSchema = "proofloop.ledger/1";

// JSONL run ledger. Line 1 is the header, every further line one
// (task, sample) outcome:
//   {"type":"header","schema":"proofloop.ledger/1","fingerprint","config","seed",
//    "samples_per_task","manifest","tasks":[ids],"prices":{model:{input,output,thinking}},
//    "created_at"}
//   {"type":"row","task_id","sample","outcome","solved_at","error","cost_usd",
//    "fingerprint","started_at","finished_at","attempts":[attempt records],"final_source"?}
struct LedgerHeader {
    std::string fingerprint;
    nlohmann::json config;
    std::uint64_t seed = 0;
    int samples_per_task = 1;
    std::string manifest;
    std::vector<std::string> tasks;
    PriceTable prices;
    std::string created_at;

    int max_iterations() const;
};

struct IterationUsage {
    int iteration = 1;
    AttemptStage stage = AttemptStage::malformed;
    UsageByModel usage;
    double wall_time_s = 0.0;
};

struct LedgerRow {
    std::string task_id;
    int sample = 0;
    ProofResult::Outcome outcome = ProofResult::Outcome::exhausted;
    std::optional<int> solved_at;
    std::string error;
    double cost_usd = 0.0;
    std::string fingerprint;
    std::string started_at;
    std::string finished_at;
    std::vector<IterationUsage> iterations;
    nlohmann::json attempts = nlohmann::json::array();  // full attempt records
    std::string final_source;

    UsageByModel usage() const;
    UsageByModel usage_through(int iteration) const;
};

struct Ledger {
    LedgerHeader header;
    std::vector<LedgerRow> rows;

    std::set<std::pair<std::string, int>> completed() const;
};

nlohmann::json header_to_json(const LedgerHeader& h);
LedgerHeader header_from_json(const nlohmann::json& j);
nlohmann::json row_to_json(const LedgerRow& r);
LedgerRow row_from_json(const nlohmann::json& j);

LedgerRow make_row(const ProofResult& result, int sample, const std::string& fingerprint,
                   const std::string& started_at, const std::string& finished_at);

struct ReadOptions {
    // A final line without a newline that does not parse is a crash
    // artifact; tolerate it instead of failing.
    bool tolerate_torn_tail = true;
};

// Throws LedgerError naming the file and line of the first malformed line.
Ledger read_ledger(const std::filesystem::path& path, ReadOptions options = {});

// Single appending writer; each row is flushed to the OS before append()
// returns, so a killed process loses at most the row being written.
class LedgerWriter {
public:
    // Creates the file with the header, or, with resume, checks the existing
    // header matches and truncates a torn last line. Throws LedgerError.
    LedgerWriter(const std::filesystem::path& path, const LedgerHeader& header, bool resume);

    void append(const LedgerRow& row);
    const Ledger& existing() const { return existing_; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::mutex mu_;
    Ledger existing_;
};

}  // namespace proofloop::harness
