#include "proofloop/harness/runner.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/hash.hpp"
#include "proofloop/core/serialize.hpp"

#include <atomic>
#include <exception>
#include <map>
#include <thread>

namespace proofloop::harness {

LedgerHeader make_header(const std::vector<TheoremTask>& tasks, const ProverConfig& config,
                         const PriceTable& prices, const BenchmarkOptions& options, const std::string& created_at) {
    LedgerHeader h;
    h.fingerprint = config_fingerprint(config);
    h.config = config_to_json(config);
    h.seed = options.seed;
    h.samples_per_task = options.samples_per_task;
    h.manifest = options.manifest_name;
    for (const auto& t : tasks) h.tasks.push_back(t.id);
    h.prices = prices;
    h.created_at = created_at;
    return h;
}

namespace {

struct Unit {
    const TheoremTask* task;
    int sample;
};

}  // namespace

BenchmarkResult run_benchmark(const std::vector<TheoremTask>& tasks, const ProverConfig& config,
                              const ServiceBundle& services, const BenchmarkOptions& options) {
    if (options.samples_per_task < 1) throw ConfigError("samples per task must be at least 1");
    if (options.ledger_path.empty()) throw ConfigError("benchmark needs a ledger path");
    config.validate();

    const Clock& clock = services.clock != nullptr ? *services.clock : system_clock();
    LedgerWriter writer(options.ledger_path, make_header(tasks, config, services.prices, options, clock.timestamp()),
                        options.resume);
    const auto done = writer.existing().completed();
    const std::string fingerprint = config_fingerprint(config);

    BenchmarkResult result;
    std::vector<Unit> units;
    for (const auto& task : tasks) {
        for (int s = 0; s < options.samples_per_task; ++s) {
            if (done.count({task.id, s})) {
                ++result.skipped;
            } else {
                units.push_back({&task, s});
            }
        }
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex mu;
    std::map<std::size_t, LedgerRow> ready;  // finished out of order, waiting for their turn
    std::size_t next_to_write = 0;
    std::exception_ptr failure;

    const auto worker = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= units.size()) return;
            const Unit& u = units[i];
            const std::string started = clock.timestamp();
            ProofResult res;
            try {
                res = run_attempt_loop(*u.task, config, services, derive_seed(options.seed, u.task->id, u.sample));
            } catch (const std::exception& e) {
                res.task_id = u.task->id;
                res.outcome = ProofResult::Outcome::error;
                res.error_reason = std::string("unexpected failure: ") + e.what();
            }
            LedgerRow row = make_row(res, u.sample, fingerprint, started, clock.timestamp());

            std::lock_guard lock(mu);
            ready.emplace(i, std::move(row));
            try {
                while (!ready.empty() && ready.begin()->first == next_to_write) {
                    writer.append(ready.begin()->second);
                    if (options.on_row) options.on_row(ready.begin()->second);
                    ready.erase(ready.begin());
                    ++next_to_write;
                    ++result.executed;
                }
            } catch (...) {
                if (!failure) failure = std::current_exception();
                abort.store(true);
                return;
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(options.jobs, units.size()));
    if (!units.empty()) {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t + 1 < threads; ++t) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    result.ledger = read_ledger(options.ledger_path);
    return result;
}

}  // namespace proofloop::harness
