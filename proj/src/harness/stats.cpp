#include "proofloop/harness/stats.hpp"

#include "proofloop/core/errors.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace proofloop::harness {

double pass_at_k(int n, int c, int k) {
    if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
        throw DomainError("pass@k needs 0 <= c <= n and 1 <= k <= n (got n=" + std::to_string(n) +
                          ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
    }
    if (n - c < k) return 1.0;
    // C(n-c, k) / C(n, k) = prod_{i=0}^{k-1} (n-c-i) / (n-i)
    double miss = 1.0;
    for (int i = 0; i < k; ++i) miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - miss;
}

Interval clopper_pearson(int n, int c, double confidence) {
    if (n < 1 || c < 0 || c > n) {
        throw DomainError("Clopper-Pearson needs n >= 1 and 0 <= c <= n (got n=" + std::to_string(n) +
                          ", c=" + std::to_string(c) + ")");
    }
    if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");
    const double alpha = 1.0 - confidence;
    Interval out;
    out.lo = c == 0 ? 0.0 : boost::math::ibeta_inv(static_cast<double>(c), static_cast<double>(n - c + 1), alpha / 2);
    out.hi = c == n ? 1.0 : boost::math::ibeta_inv(static_cast<double>(c + 1), static_cast<double>(n - c), 1 - alpha / 2);
    return out;
}

std::vector<TaskCounts> task_counts(const std::vector<LedgerRow>& rows) {
    std::vector<TaskCounts> out;
    std::map<std::string, std::size_t> index;
    for (const auto& r : rows) {
        auto [it, fresh] = index.emplace(r.task_id, out.size());
        if (fresh) out.push_back({r.task_id, 0, 0});
        auto& t = out[it->second];
        ++t.n;
        if (r.outcome == ProofResult::Outcome::proved) ++t.c;
    }
    return out;
}

double dataset_pass_at_k(const std::vector<TaskCounts>& tasks, int k) {
    if (tasks.empty()) throw DomainError("pass@k over an empty task set");
    double sum = 0.0;
    for (const auto& t : tasks) sum += pass_at_k(t.n, t.c, k);
    return sum / static_cast<double>(tasks.size());
}

namespace {

// Linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

}  // namespace

Interval bootstrap_pass_at_k(const std::vector<TaskCounts>& tasks, int k, std::uint64_t seed, int resamples,
                             double confidence) {
    if (tasks.empty()) throw DomainError("bootstrap over an empty task set");
    if (resamples < 1) throw DomainError("bootstrap needs at least one resample");
    std::vector<double> per_task;
    per_task.reserve(tasks.size());
    for (const auto& t : tasks) per_task.push_back(pass_at_k(t.n, t.c, k));

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, tasks.size() - 1);
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (auto& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < tasks.size(); ++i) sum += per_task[pick(rng)];
        m = sum / static_cast<double>(tasks.size());
    }
    std::sort(means.begin(), means.end());
    const double alpha = 1.0 - confidence;
    return {quantile(means, alpha / 2), quantile(means, 1 - alpha / 2)};
}

std::vector<RunOutcomes> split_runs(const std::vector<LedgerRow>& rows) {
    std::map<int, RunOutcomes> by_sample;
    for (const auto& r : rows) by_sample[r.sample][r.task_id] = r.solved_at;
    std::vector<RunOutcomes> out;
    for (auto& [sample, run] : by_sample) out.push_back(std::move(run));
    return out;
}

std::vector<CurvePoint> iteration_curve(const std::vector<RunOutcomes>& runs, int max_iteration) {
    if (runs.empty()) throw MismatchedRuns("iteration curve needs at least one run");
    std::set<std::string> tasks;
    for (const auto& [id, _] : runs.front()) tasks.insert(id);
    if (tasks.empty()) throw MismatchedRuns("run without tasks");
    for (std::size_t r = 1; r < runs.size(); ++r) {
        std::set<std::string> other;
        for (const auto& [id, _] : runs[r]) other.insert(id);
        if (other != tasks) {
            throw MismatchedRuns("run " + std::to_string(r) + " covers " + std::to_string(other.size()) +
                                 " tasks, run 0 covers " + std::to_string(tasks.size()) + " (task sets differ)");
        }
    }

    const auto runs_d = static_cast<double>(runs.size());
    std::vector<CurvePoint> out;
    for (int t = 1; t <= max_iteration; ++t) {
        std::vector<double> fractions;
        for (const auto& run : runs) {
            std::size_t solved = 0;
            for (const auto& [id, at] : run) {
                if (at && *at <= t) ++solved;
            }
            fractions.push_back(static_cast<double>(solved) / static_cast<double>(run.size()));
        }
        double mean = 0.0;
        for (double f : fractions) mean += f;
        mean /= runs_d;
        double sem = 0.0;
        if (runs.size() > 1) {
            double ss = 0.0;
            for (double f : fractions) ss += (f - mean) * (f - mean);
            sem = std::sqrt(ss / (runs_d - 1.0)) / std::sqrt(runs_d);
        }
        out.push_back({t, mean, sem});
    }
    return out;
}

CostReport cost_report(const std::vector<LedgerRow>& rows, const PriceTable& prices,
                       std::optional<int> through_iteration) {
    CostReport out;
    for (const auto& r : rows) {
        const UsageByModel usage = through_iteration ? r.usage_through(*through_iteration) : r.usage();
        double row_cost = 0.0;
        for (const auto& [model, u] : usage) {
            const double c = prices.cost(model, u);
            out.per_model[model] += c;
            row_cost += c;
        }
        out.per_task[r.task_id] += row_cost;
        out.total += row_cost;
        ++out.samples;
    }
    out.mean_per_sample = out.samples == 0 ? 0.0 : out.total / static_cast<double>(out.samples);
    return out;
}

}  // namespace proofloop::harness
