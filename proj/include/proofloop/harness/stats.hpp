#pragma once

#include "proofloop/core/types.hpp"
#include "proofloop/harness/ledger.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace proofloop::harness {

// Unbiased estimator 1 - C(n-c, k) / C(n, k), evaluated as a running
// product. Throws DomainError unless 0 <= c <= n and 1 <= k <= n.
double pass_at_k(int n, int c, int k);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

// Exact (Clopper-Pearson) 95% interval for a binomial proportion.
// Throws DomainError unless n >= 1 and 0 <= c <= n.
Interval clopper_pearson(int n, int c, double confidence = 0.95);
inline Interval ci95(int n, int c) { return clopper_pearson(n, c, 0.95); }

struct TaskCounts {
    std::string task_id;
    int n = 0;  // samples
    int c = 0;  // proved samples
};

// Per-task sample and success counts, in first-seen order.
std::vector<TaskCounts> task_counts(const std::vector<LedgerRow>& rows);

// Mean over tasks of pass_at_k. Throws DomainError if some task has fewer
// than k samples.
double dataset_pass_at_k(const std::vector<TaskCounts>& tasks, int k);

inline constexpr int kDefaultBootstrapResamples = 10000;

// Percentile bootstrap over tasks for dataset_pass_at_k.
Interval bootstrap_pass_at_k(const std::vector<TaskCounts>& tasks, int k, std::uint64_t seed,
                             int resamples = kDefaultBootstrapResamples, double confidence = 0.95);

struct CurvePoint {
    int iteration = 0;
    double mean = 0.0;
    double sem = 0.0;
};

// One run: task id -> iteration it was solved at (nullopt if never).
using RunOutcomes = std::map<std::string, std::optional<int>>;

// Sample index r across all tasks forms run r.
std::vector<RunOutcomes> split_runs(const std::vector<LedgerRow>& rows);

// Mean fraction of tasks solved by iteration t over runs, with standard
// error sample_stddev / sqrt(runs) (0 for one run), for t = 1..max_iteration.
// Throws MismatchedRuns when runs cover different task sets.
std::vector<CurvePoint> iteration_curve(const std::vector<RunOutcomes>& runs, int max_iteration);

struct CostReport {
    std::map<std::string, double> per_task;   // summed over samples
    std::map<std::string, double> per_model;
    double total = 0.0;
    double mean_per_sample = 0.0;
    std::size_t samples = 0;
};

// Prices every row's token counts. Throws MissingPrice for an unpriced model.
CostReport cost_report(const std::vector<LedgerRow>& rows, const PriceTable& prices,
                       std::optional<int> through_iteration = std::nullopt);

}  // namespace proofloop::harness
