#include "proofloop/harness/report.hpp"

#include "proofloop/core/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace proofloop::harness {

std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

namespace {

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s.append(width - s.size(), ' ');
    return s;
}

std::string config_line(const LedgerHeader& h) {
    const auto& c = h.config;
    if (!c.is_object()) return "config: (unknown)";
    std::ostringstream out;
    out << "config: model=" << c.value("model", "?") << " mode=" << c.value("mode", "?")
        << " memory=" << (c.contains("memory") ? c.at("memory").value("kind", "?") : std::string("?"))
        << " max_iterations=" << c.value("max_iterations", 0)
        << " thinking=" << c.value("thinking_budget", "");
    std::vector<std::string> tools = c.value("tools", std::vector<std::string>{});
    out << " tools=";
    if (tools.empty()) out << "none";
    for (std::size_t i = 0; i < tools.size(); ++i) out << (i ? "," : "") << tools[i];
    return out.str();
}

int max_iterations_of(const Ledger& ledger) {
    int m = ledger.header.max_iterations();
    for (const auto& r : ledger.rows) {
        for (const auto& it : r.iterations) m = std::max(m, it.iteration);
    }
    return std::max(m, 1);
}

}  // namespace

LedgerSummary summarize(const Ledger& ledger, const ReportOptions& options, std::string label) {
    LedgerSummary s;
    s.label = std::move(label);
    s.header = ledger.header;
    s.rows = ledger.rows.size();
    s.max_iterations = max_iterations_of(ledger);
    s.bootstrap_seed = options.seed.value_or(ledger.header.seed);
    s.resamples = options.resamples;
    for (const auto& r : ledger.rows) {
        if (r.outcome == ProofResult::Outcome::proved) ++s.proved_rows;
        if (r.outcome == ProofResult::Outcome::error) ++s.error_rows;
    }

    const auto counts = task_counts(ledger.rows);
    int min_n = counts.empty() ? 0 : counts.front().n;
    for (const auto& t : counts) {
        s.tasks.push_back({t, ci95(t.n, t.c)});
        if (t.c > 0) ++s.solved_tasks;
        min_n = std::min(min_n, t.n);
    }

    for (int k : options.ks) {
        if (counts.empty() || k < 1 || k > min_n) {
            s.skipped_ks.push_back(k);
            continue;
        }
        s.pass_at_k.push_back({k, dataset_pass_at_k(counts, k),
                               bootstrap_pass_at_k(counts, k, s.bootstrap_seed, options.resamples)});
    }

    if (ledger.rows.empty()) {
        s.curve_note = "no rows";
    } else {
        try {
            s.curve = iteration_curve(split_runs(ledger.rows), s.max_iterations);
        } catch (const MismatchedRuns& e) {
            s.curve_note = e.what();
        }
    }

    s.cost = cost_report(ledger.rows, options.prices.value_or(ledger.header.prices));
    return s;
}

std::string render_text_report(const LedgerSummary& s) {
    std::ostringstream out;
    const double tasks = static_cast<double>(s.tasks.size());
    out << "proofloop report" << (s.label.empty() ? "" : " - " + s.label) << '\n';
    out << "fingerprint: " << s.header.fingerprint << "  seed: " << s.header.seed
        << "  manifest: " << (s.header.manifest.empty() ? "-" : s.header.manifest) << '\n';
    out << config_line(s.header) << '\n';
    out << "CI method: pass@k intervals are percentile bootstrap over tasks (" << s.resamples
        << " resamples, seed " << s.bootstrap_seed << "); per-task intervals are exact Clopper-Pearson 95%\n";
    out << "tasks: " << s.tasks.size() << "  rows: " << s.rows << "  proved rows: " << s.proved_rows
        << "  error rows: " << s.error_rows << '\n';
    out << "solved tasks (any sample): " << s.solved_tasks << " ("
        << format_fixed(tasks > 0 ? 100.0 * static_cast<double>(s.solved_tasks) / tasks : 0.0, 1) << "%)\n";

    out << "\npass@k\n";
    out << "  " << pad("k", 6) << pad("estimate", 12) << "95% CI\n";
    for (const auto& r : s.pass_at_k) {
        out << "  " << pad(std::to_string(r.k), 6) << pad(format_fixed(r.estimate), 12) << '[' << format_fixed(r.ci.lo)
            << ", " << format_fixed(r.ci.hi) << "]\n";
    }
    for (int k : s.skipped_ks) out << "  " << pad(std::to_string(k), 6) << "skipped: fewer than k samples for some task\n";

    out << "\niteration curve (mean solved fraction over runs, SEM)\n";
    if (s.curve.empty()) {
        out << "  unavailable: " << s.curve_note << '\n';
    } else {
        out << "  " << pad("iter", 6) << pad("mean", 12) << "sem\n";
        for (const auto& p : s.curve) {
            out << "  " << pad(std::to_string(p.iteration), 6) << pad(format_fixed(p.mean), 12) << format_fixed(p.sem)
                << '\n';
        }
    }

    out << "\ncost (USD)\n";
    out << "  total: " << format_fixed(s.cost.total) << "  mean per sample: " << format_fixed(s.cost.mean_per_sample)
        << '\n';
    for (const auto& [model, c] : s.cost.per_model) out << "  model " << model << ": " << format_fixed(c) << '\n';

    out << "\nper task\n";
    out << "  " << pad("task", 28) << pad("n", 5) << pad("c", 5) << pad("cost", 12) << "95% CI (c/n)\n";
    for (const auto& t : s.tasks) {
        const auto it = s.cost.per_task.find(t.counts.task_id);
        const double cost = it == s.cost.per_task.end() ? 0.0 : it->second;
        out << "  " << pad(t.counts.task_id, 28) << pad(std::to_string(t.counts.n), 5) << pad(std::to_string(t.counts.c), 5)
            << pad(format_fixed(cost), 12) << '[' << format_fixed(t.ci.lo) << ", " << format_fixed(t.ci.hi) << "]\n";
    }
    return out.str();
}

std::string pass_at_k_csv(const LedgerSummary& s) {
    std::ostringstream out;
    out << "k,estimate,lo,hi\n";
    for (const auto& r : s.pass_at_k) {
        out << r.k << ',' << format_fixed(r.estimate, 10) << ',' << format_fixed(r.ci.lo, 10) << ','
            << format_fixed(r.ci.hi, 10) << '\n';
    }
    return out.str();
}

std::string curve_csv(const LedgerSummary& s) {
    std::ostringstream out;
    out << "iteration,mean,sem\n";
    for (const auto& p : s.curve) out << p.iteration << ',' << format_fixed(p.mean, 10) << ',' << format_fixed(p.sem, 10) << '\n';
    return out.str();
}

std::string render_comparison(const std::vector<std::pair<std::string, Ledger>>& ledgers, const ReportOptions& options) {
    if (ledgers.empty()) return {};
    int cap = 0;
    for (const auto& [label, l] : ledgers) {
        const int m = max_iterations_of(l);
        cap = cap == 0 ? m : std::min(cap, m);
    }

    std::ostringstream out;
    out << "comparison (common iteration cap " << cap << ")\n";
    out << "  " << pad("ledger", 24) << pad("fingerprint", 18) << pad("budget", 8) << pad("solved@budget", 15)
        << pad("solved@cap", 12) << pad("cost/sample", 13) << "cost/sample@cap\n";
    for (const auto& [label, l] : ledgers) {
        const PriceTable& prices = options.prices ? *options.prices : l.header.prices;
        const int budget = max_iterations_of(l);
        std::string at_budget = "-";
        std::string at_cap = "-";
        if (!l.rows.empty()) {
            try {
                const auto curve = iteration_curve(split_runs(l.rows), budget);
                at_budget = format_fixed(curve.back().mean, 4);
                at_cap = format_fixed(curve[static_cast<std::size_t>(cap - 1)].mean, 4);
            } catch (const MismatchedRuns&) {
            }
        }
        const auto full = cost_report(l.rows, prices);
        const auto capped = cost_report(l.rows, prices, cap);
        out << "  " << pad(label, 24) << pad(l.header.fingerprint, 18) << pad(std::to_string(budget), 8)
            << pad(at_budget, 15) << pad(at_cap, 12) << pad(format_fixed(full.mean_per_sample), 13)
            << format_fixed(capped.mean_per_sample) << '\n';
    }
    return out.str();
}

}  // namespace proofloop::harness
