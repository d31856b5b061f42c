#pragma once

#include "proofloop/harness/ledger.hpp"
#include "proofloop/harness/stats.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace proofloop::harness {

struct ReportOptions {
    std::vector<int> ks = {1};
    int resamples = kDefaultBootstrapResamples;
    std::optional<std::uint64_t> seed;   // default: the ledger's run seed
    std::optional<PriceTable> prices;    // default: the prices recorded in the ledger
};

struct PassAtKRow {
    int k = 1;
    double estimate = 0.0;
    Interval ci;
};

struct TaskRow {
    TaskCounts counts;
    Interval ci;  // Clopper-Pearson on c / n
};

struct LedgerSummary {
    std::string label;
    LedgerHeader header;
    std::size_t rows = 0;
    std::size_t proved_rows = 0;
    std::size_t error_rows = 0;
    std::size_t solved_tasks = 0;  // proved in at least one sample
    int max_iterations = 0;
    std::uint64_t bootstrap_seed = 0;
    int resamples = 0;
    std::vector<TaskRow> tasks;
    std::vector<PassAtKRow> pass_at_k;
    std::vector<int> skipped_ks;  // larger than the smallest per-task sample count
    std::vector<CurvePoint> curve;
    std::string curve_note;  // why the curve is missing, if it is
    CostReport cost;
};

// Throws MissingPrice when the price table lacks a model used in the ledger.
LedgerSummary summarize(const Ledger& ledger, const ReportOptions& options, std::string label = {});

std::string render_text_report(const LedgerSummary& summary);
std::string pass_at_k_csv(const LedgerSummary& summary);  // k,estimate,lo,hi
std::string curve_csv(const LedgerSummary& summary);      // iteration,mean,sem

// Ablation view over several ledgers: solve rate and cost per sample both at
// each run's own budget and at the smallest budget among them.
std::string render_comparison(const std::vector<std::pair<std::string, Ledger>>& ledgers, const ReportOptions& options);

std::string format_fixed(double v, int digits = 6);

}  // namespace proofloop::harness
