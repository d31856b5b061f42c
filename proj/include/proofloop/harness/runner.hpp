#pragma once

#include "proofloop/core/loop.hpp"
#include "proofloop/harness/ledger.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace proofloop::harness {

struct BenchmarkOptions {
    int samples_per_task = 1;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::filesystem::path ledger_path;
    bool resume = false;
    std::string manifest_name;
    // Called after a row has reached the ledger file, in ledger order.
    std::function<void(const LedgerRow&)> on_row;
};

struct BenchmarkResult {
    Ledger ledger;            // full ledger as re-read from disk
    std::size_t executed = 0;
    std::size_t skipped = 0;  // already in the ledger when resuming
};

LedgerHeader make_header(const std::vector<TheoremTask>& tasks, const ProverConfig& config,
                         const PriceTable& prices, const BenchmarkOptions& options, const std::string& created_at);

// Runs samples_per_task independent loops per task on `jobs` worker threads.
// Rows are written in (task, sample) order whatever order units finish in,
// so an interrupted and resumed run produces the same file as an
// uninterrupted one. Only ledger I/O failures throw (LedgerError).
BenchmarkResult run_benchmark(const std::vector<TheoremTask>& tasks, const ProverConfig& config,
                              const ServiceBundle& services, const BenchmarkOptions& options);

}  // namespace proofloop::harness
