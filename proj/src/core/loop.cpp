#include "proofloop/core/loop.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/hash.hpp"
#include "proofloop/memory/memory.hpp"
#include "proofloop/proposer/proposer.hpp"
#include "proofloop/review/reviewer.hpp"

namespace proofloop {

ProverConfig effective_config(const ProverConfig& config) {
    ProverConfig out = config;
    if (out.mode == ProverMode::single_shot) {
        out.max_iterations = 1;
        out.memory.kind = MemoryKind::none;
    }
    return out;
}

namespace {

ProofResult error_result(ProofResult result, const std::string& reason) {
    result.outcome = ProofResult::Outcome::error;
    result.error_reason = reason;
    return result;
}

}  // namespace

ProofResult run_attempt_loop(const TheoremTask& task, const ProverConfig& config, const ServiceBundle& services,
                             std::uint64_t seed) {
    ProofResult result;
    result.task_id = task.id;

    ProverConfig cfg;
    try {
        cfg = effective_config(config);
        cfg.validate();
        validate_task(task);
        if (services.proposer == nullptr || services.builder == nullptr) {
            throw ConfigError("service bundle needs a proposer client and a build backend");
        }
    } catch (const Error& e) {
        return error_result(std::move(result), e.what());
    }

    const Clock& clock = services.clock != nullptr ? *services.clock : system_clock();
    const toolbox::Toolbox tools(cfg.tools_enabled, services.library, services.web, services.tool_options);
    const proposer::Proposer proposer(*services.proposer, &tools);

    review::ReviewOptions review_options;
    review_options.denylist = cfg.denylist;
    review_options.reviewer_model = cfg.effective_reviewer_model();
    review_options.thinking = cfg.thinking_budget;
    review_options.build_timeout_s = cfg.build_timeout_s;
    review_options.scratch_file = cfg.scratch_file;
    const review::ReviewSystem reviewer(*services.builder, services.reviewer, review_options);

    memory::MemoryState memory(cfg.memory);
    memory::Reflector reflector;
    reflector.llm = services.reflection != nullptr ? services.reflection : services.proposer;
    reflector.model = cfg.effective_reflection_model();
    reflector.thinking = cfg.thinking_budget;

    UsageByModel usage;
    const auto finish = [&](ProofResult r) {
        try {
            if (!services.prices.entries().empty()) r.total_cost = services.prices.cost(usage);
        } catch (const MissingPrice& e) {
            if (r.outcome != ProofResult::Outcome::error) return error_result(std::move(r), e.what());
        }
        return r;
    };

    for (int t = 1; t <= cfg.max_iterations; ++t) {
        const double started = clock.elapsed_seconds();
        double queue_wait = 0.0;
        AttemptRecord record;
        record.iteration = t;

        proposer::ProposeResult proposed;
        try {
            proposed = proposer.propose(task, memory.render(), cfg, derive_seed(seed, "propose", t), t);
        } catch (const Error& e) {
            return finish(error_result(std::move(result), std::string("proposer failed: ") + e.what()));
        }
        add_usage(record.usage, cfg.model, proposed.usage);
        record.raw_response = proposed.raw;
        record.tool_rounds = proposed.tool_rounds;

        std::string final_source;
        std::string failure;
        if (!proposed.proposal) {
            record.stage = AttemptStage::malformed;
            record.feedback = "malformed proposal: " + proposed.parse_error;
        } else {
            record.proposal = proposed.proposal;
            try {
                const review::ReviewOutcome outcome = reviewer.review(task, *proposed.proposal, t);
                queue_wait = outcome.queue_wait_s;
                record.stage = outcome.stage;
                record.feedback = outcome.feedback;
                merge_usage(record.usage, outcome.usage);
                if (outcome.stage == AttemptStage::approved) final_source = outcome.candidate.source;
            } catch (const Error& e) {
                failure = std::string("review failed: ") + e.what();
                record.stage = AttemptStage::build_failed;
                record.feedback = failure;
            }
        }
        record.wall_time_s = std::max(0.0, clock.elapsed_seconds() - started - queue_wait);

        const bool last = t == cfg.max_iterations;
        if (failure.empty() && !record.approved() && !last) {
            reflector.seed = derive_seed(seed, "reflect", t);
            merge_usage(record.usage, memory.update(record, reflector));
        }

        merge_usage(usage, record.usage);
        result.transcript.push_back(record);
        if (services.on_attempt) services.on_attempt(result.transcript.back());

        if (!failure.empty()) return finish(error_result(std::move(result), failure));
        if (record.approved()) {
            result.outcome = ProofResult::Outcome::proved;
            result.proved_iteration = t;
            result.final_source = std::move(final_source);
            return finish(std::move(result));
        }
    }
    result.outcome = ProofResult::Outcome::exhausted;
    return finish(std::move(result));
}

}  // namespace proofloop
