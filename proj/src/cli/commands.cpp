#include "proofloop/cli/commands.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/serialize.hpp"
#include "proofloop/harness/manifest.hpp"
#include "proofloop/harness/report.hpp"
#include "proofloop/harness/runner.hpp"
#include "proofloop/leanenv/build.hpp"
#include "proofloop/proposer/clients.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

namespace proofloop::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string env_secret(const std::string& var) {
    const char* v = std::getenv(var.c_str());
    if (v == nullptr || *v == '\0') throw ConfigError("environment variable " + var + " is not set");
    return v;
}

template <typename T>
T* keep(ServiceSet& set, std::unique_ptr<T> p) {
    T* raw = p.get();
    set.owned.push_back(std::shared_ptr<T>(std::move(p)));
    return raw;
}

std::string first_line(const std::string& s) {
    const auto nl = s.find('\n');
    return nl == std::string::npos ? s : s.substr(0, nl) + " ...";
}

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
}

std::string safe_name(std::string s) {
    for (auto& c : s) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')) c = '_';
    }
    return s;
}

// Common flags: each one writes one settings key.
struct FlagTable {
    std::map<std::string, std::string> values;
    std::vector<std::pair<CLI::Option*, std::string>> options;

    void add(CLI::App& app, const std::string& flag, const std::string& key) {
        const KeySpec* spec = find_key(key);
        options.emplace_back(app.add_option(flag, values[key], spec ? spec->help : std::string()), key);
    }
    void add_switch(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
        options.emplace_back(app.add_flag(flag, help), key);
        values[key] = "true";
    }
    std::map<std::string, std::string> given() const {
        std::map<std::string, std::string> out;
        for (const auto& [opt, key] : options) {
            if (opt->count() > 0) out[key] = values.at(key);
        }
        return out;
    }
};

struct CommonArgs {
    std::string config;
    std::string profile;
    std::vector<std::string> overrides;
    FlagTable flags;

    void attach(CLI::App& app) {
        app.add_option("--config", config, "config file (JSON)");
        app.add_option("--profile", profile, "profile inside the config file");
        app.add_option("--set", overrides, "override a config key: key=value (repeatable)");
    }
    Settings resolve() const {
        std::optional<ConfigFile> file;
        if (!config.empty()) file = ConfigFile::load(config);
        return Settings::resolve(file, profile, overrides, flags.given());
    }
};

void attach_prover_flags(CLI::App& app, FlagTable& f) {
    f.add(app, "--max-iterations", "max_iterations");
    f.add(app, "--mode", "mode");
    f.add(app, "--memory", "memory");
    f.add(app, "--history-n", "history_n");
    f.add(app, "--tools", "tools");
    f.add(app, "--thinking", "thinking_budget");
    f.add(app, "--model", "model");
    f.add(app, "--reviewer-model", "reviewer_model");
    f.add(app, "--build-timeout", "build_timeout");
    f.add(app, "--max-tool-calls", "max_tool_calls");
    f.add(app, "--lean-version", "lean_version");
    f.add(app, "--llm-provider", "llm.provider");
    f.add(app, "--llm-script", "llm.script");
    f.add(app, "--build-backend", "build.backend");
    f.add(app, "--build-script", "build.script");
    f.add(app, "--workspace", "build.workspace");
    f.add(app, "--build-jobs", "build.jobs");
    f.add(app, "--seed", "bench.seed");
}

int prove(const CommonArgs& common, const std::string& file, const std::string& theorem, std::ostream& out,
          std::ostream& err) {
    Settings settings = common.resolve();
    const ProverConfig config = settings.prover_config();
    const ProverConfig effective = effective_config(config);
    check_prices(settings.prices(), effective, settings.boolean("reviewer.llm"));
    if (!fs::is_regular_file(file)) throw ConfigError("no such file: " + file);
    const TheoremTask task = harness::task_from_file(file, theorem);

    ServiceSet services = build_services(settings, config);
    const int budget = effective.max_iterations;
    services.bundle.on_attempt = [&](const AttemptRecord& a) {
        const TokenUsage t = a.tokens();
        out << "iteration " << a.iteration << "/" << budget << ": " << to_string(a.stage) << " (tokens in "
            << t.input << ", out " << t.output << ", thinking " << t.thinking << "; "
            << harness::format_fixed(a.wall_time_s, 2) << " s)";
        if (!a.approved()) out << " - " << first_line(a.feedback);
        out << std::endl;
    };

    const ProofResult result = run_attempt_loop(task, config, services.bundle, settings.u64("bench.seed"));

    const fs::path dir = settings.str("output.dir");
    const fs::path transcript = dir / (safe_name(theorem) + ".transcript.json");
    json j = result;
    j["config"] = config_to_json(config);
    j["fingerprint"] = config_fingerprint(config);
    write_file(transcript, j.dump(2) + "\n");
    out << "transcript: " << transcript.string() << "\n";

    switch (result.outcome) {
        case ProofResult::Outcome::proved: {
            const fs::path source = dir / (safe_name(theorem) + ".proved.lean");
            write_file(source, result.final_source);
            out << "proved at iteration " << result.proved_iteration << "; cost $"
                << harness::format_fixed(result.total_cost) << "\nfinal source: " << source.string() << "\n";
            return kExitProved;
        }
        case ProofResult::Outcome::exhausted:
            out << "exhausted after " << result.transcript.size() << " iterations; cost $"
                << harness::format_fixed(result.total_cost) << "\n";
            return kExitExhausted;
        case ProofResult::Outcome::error:
            err << "error: " << result.error_reason << "\n";
            return kExitError;
    }
    return kExitError;
}

void print_summary(const harness::LedgerSummary& s, std::ostream& out) {
    const double tasks = static_cast<double>(s.tasks.size());
    out << "tasks: " << s.tasks.size() << "  samples/task: " << s.header.samples_per_task << "  rows: " << s.rows
        << "  errors: " << s.error_rows << "\n";
    out << "solved: " << s.solved_tasks << "/" << s.tasks.size() << " tasks ("
        << harness::format_fixed(tasks > 0 ? 100.0 * static_cast<double>(s.solved_tasks) / tasks : 0.0, 1)
        << "%), " << s.proved_rows << "/" << s.rows << " samples\n";
    out << "mean cost per sample: $" << harness::format_fixed(s.cost.mean_per_sample) << "  total: $"
        << harness::format_fixed(s.cost.total) << "\n";
    for (const auto& r : s.pass_at_k) {
        out << "pass@" << r.k << ": " << harness::format_fixed(r.estimate) << "  95% CI ["
            << harness::format_fixed(r.ci.lo) << ", " << harness::format_fixed(r.ci.hi) << "]\n";
    }
    for (int k : s.skipped_ks) out << "pass@" << k << ": skipped (fewer than " << k << " samples per task)\n";
}

int bench(const CommonArgs& common, const std::string& manifest_path, std::ostream& out) {
    Settings settings = common.resolve();
    const ProverConfig config = settings.prover_config();
    check_prices(settings.prices(), effective_config(config), settings.boolean("reviewer.llm"));

    const auto manifest = harness::load_manifest(manifest_path);
    fs::path root = settings.str("bench.root");
    if (root.empty()) root = fs::path(manifest_path).parent_path();
    harness::validate_paths(manifest, root);
    const auto tasks = harness::load_tasks(manifest, root);

    harness::BenchmarkOptions options;
    options.samples_per_task = settings.integer("bench.samples");
    options.seed = settings.u64("bench.seed");
    options.jobs = static_cast<std::size_t>(std::max(1, settings.integer("bench.jobs")));
    options.resume = settings.boolean("bench.resume");
    options.manifest_name = manifest.name;
    options.ledger_path = settings.str("bench.ledger");
    if (options.ledger_path.empty()) {
        options.ledger_path = fs::path(settings.str("output.dir")) /
                              (safe_name(manifest.name) + "-" + config_fingerprint(config) + ".jsonl");
    }

    ServiceSet services = build_services(settings, config);
    const std::size_t total = tasks.size() * static_cast<std::size_t>(options.samples_per_task);
    std::size_t finished = 0;
    options.on_row = [&](const harness::LedgerRow& row) {
        ++finished;
        out << "[" << finished << "] " << row.task_id << " #" << row.sample << ": " << to_string(row.outcome);
        if (row.solved_at) out << " at iteration " << *row.solved_at;
        if (!row.error.empty()) out << " (" << first_line(row.error) << ")";
        out << std::endl;
    };

    const auto result = harness::run_benchmark(tasks, config, services.bundle, options);
    out << "ledger: " << options.ledger_path.string() << "\n";
    out << "ran " << result.executed << " of " << total << " samples (" << result.skipped
        << " already in the ledger)\n";

    harness::ReportOptions ropts;
    ropts.ks = settings.ints("bench.k");
    ropts.resamples = settings.integer("report.resamples");
    print_summary(harness::summarize(result.ledger, ropts), out);
    return 0;
}

int report(const CommonArgs& common, const std::vector<std::string>& ledgers, bool seed_given, std::ostream& out) {
    Settings settings = common.resolve();
    harness::ReportOptions ropts;
    ropts.ks = settings.ints("bench.k");
    ropts.resamples = settings.integer("report.resamples");
    if (seed_given) ropts.seed = settings.u64("bench.seed");
    if (!settings.prices().entries().empty()) ropts.prices = settings.prices();
    const std::string csv_dir = settings.str("report.csv_dir");

    std::vector<std::pair<std::string, harness::Ledger>> loaded;
    for (const auto& path : ledgers) loaded.emplace_back(fs::path(path).stem().string(), harness::read_ledger(path));

    for (std::size_t i = 0; i < loaded.size(); ++i) {
        const auto& [label, ledger] = loaded[i];
        const auto summary = harness::summarize(ledger, ropts, label);
        if (i) out << "\n";
        out << harness::render_text_report(summary);
        if (!csv_dir.empty()) {
            const fs::path dir = csv_dir;
            write_file(dir / (label + ".pass_at_k.csv"), harness::pass_at_k_csv(summary));
            write_file(dir / (label + ".curve.csv"), harness::curve_csv(summary));
        }
    }
    if (loaded.size() > 1) out << "\n" << harness::render_comparison(loaded, ropts);
    return 0;
}

}  // namespace

void check_prices(const PriceTable& prices, const ProverConfig& config, bool reviewer_llm) {
    if (prices.entries().empty()) return;
    prices.at(config.model);
    if (reviewer_llm) prices.at(config.effective_reviewer_model());
    if (config.memory.kind == MemoryKind::self_managed && config.mode == ProverMode::iterative) {
        prices.at(config.effective_reflection_model());
    }
}

ServiceSet build_services(const Settings& settings, const ProverConfig& config) {
    ServiceSet set;
    auto& b = set.bundle;
    (void)config;

    // LLM
    const std::string provider = settings.str("llm.provider");
    LlmClient* raw = nullptr;
    if (provider == "mock") {
        const std::string script = settings.str("llm.script");
        if (script.empty()) throw ConfigError("llm.script is required for the mock LLM provider (--llm-script)");
        raw = keep(set, proposer::ScriptedLlmClient::from_file(script));
    } else {
        std::string key_env = settings.str("llm.api_key_env");
        if (key_env.empty()) key_env = provider == "anthropic" ? "ANTHROPIC_API_KEY" : "OPENAI_API_KEY";
        proposer::HttpClientOptions opts;
        opts.api_key = env_secret(key_env);
        opts.base_url = settings.str("llm.base_url");
        opts.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(settings.number("llm.timeout_s") * 1000));
        if (provider == "anthropic") {
            raw = keep(set, std::make_unique<proposer::AnthropicClient>(opts));
        } else {
            raw = keep(set, std::make_unique<proposer::OpenAiClient>(opts));
        }
    }
    proposer::RetryPolicy policy;
    policy.attempts = settings.integer("llm.retries");
    policy.initial_delay = std::chrono::milliseconds(settings.integer("llm.retry_delay_ms"));
    LlmClient* llm = keep(set, std::make_unique<proposer::RetryingClient>(*raw, policy));
    b.proposer = llm;
    b.reflection = llm;
    b.reviewer = settings.boolean("reviewer.llm") ? llm : nullptr;

    // Build
    if (settings.str("build.backend") == "mock") {
        const std::string script = settings.str("build.script");
        b.builder = script.empty() ? keep(set, std::make_unique<leanenv::MockBuildBackend>())
                                   : keep(set, leanenv::MockBuildBackend::from_file(script));
    } else {
        leanenv::Workspace ws;
        ws.root = settings.str("build.workspace");
        if (ws.root.empty()) throw ConfigError("build.workspace is required for the lake backend (--workspace)");
        ws.build_command = settings.strings("build.command");
        ws.scratch_dir = settings.str("build.scratch_dir");
        ws.validate();
        const int jobs = settings.integer("build.jobs");
        b.builder = keep(set, std::make_unique<leanenv::LakeBackend>(
                                  ws, jobs > 0 ? static_cast<std::size_t>(jobs) : leanenv::default_build_concurrency()));
    }

    // Tools
    const std::string lib = settings.str("library.backend");
    if (lib == "mock") {
        const std::string table = settings.str("library.table");
        b.library = table.empty()
                        ? keep(set, std::make_unique<toolbox::MockLibrarySearch>(toolbox::MockLibrarySearch::builtin_table()))
                        : keep(set, std::make_unique<toolbox::MockLibrarySearch>(toolbox::MockLibrarySearch::from_file(table)));
    } else if (lib == "http") {
        const std::string endpoint = settings.str("library.endpoint");
        if (endpoint.empty()) throw ConfigError("library.endpoint is required for the http library backend");
        b.library = keep(set, std::make_unique<toolbox::HttpLibrarySearch>(endpoint));
    }
    const std::string web = settings.str("web.backend");
    if (web == "mock") {
        const std::string script = settings.str("web.script");
        b.web = script.empty() ? keep(set, std::make_unique<toolbox::ScriptedWebSearch>())
                               : keep(set, std::make_unique<toolbox::ScriptedWebSearch>(toolbox::ScriptedWebSearch::from_file(script)));
    } else if (web == "tavily") {
        b.web = keep(set, std::make_unique<toolbox::TavilyWebSearch>(env_secret(settings.str("web.api_key_env")),
                                                                     settings.str("web.base_url")));
    }
    const int limit = settings.integer("tools.limit");
    const int snippet = settings.integer("tools.snippet_chars");
    if (limit < 1 || snippet < 1) throw ConfigError("tools.limit and tools.snippet_chars must be positive");
    b.tool_options.default_limit = static_cast<std::size_t>(limit);
    b.tool_options.snippet_chars = static_cast<std::size_t>(snippet);

    b.prices = settings.prices();
    return set;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"proofloop: iterative Lean 4 proving loop and benchmark harness", "proofloop"};
    app.require_subcommand(1);

    CommonArgs prove_args;
    std::string prove_file;
    std::string prove_theorem;
    auto* prove_cmd = app.add_subcommand("prove", "run one attempt loop on a theorem");
    prove_args.attach(*prove_cmd);
    attach_prover_flags(*prove_cmd, prove_args.flags);
    prove_args.flags.add(*prove_cmd, "--out-dir", "output.dir");
    prove_cmd->add_option("file", prove_file, "Lean source file")->required();
    prove_cmd->add_option("theorem", prove_theorem, "name of the theorem to prove")->required();

    CommonArgs bench_args;
    std::string manifest;
    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark over a dataset manifest");
    bench_args.attach(*bench_cmd);
    attach_prover_flags(*bench_cmd, bench_args.flags);
    bench_args.flags.add(*bench_cmd, "--root", "bench.root");
    bench_args.flags.add(*bench_cmd, "--ledger", "bench.ledger");
    bench_args.flags.add_switch(*bench_cmd, "--resume", "bench.resume", "continue an existing ledger");
    bench_args.flags.add(*bench_cmd, "--samples", "bench.samples");
    bench_args.flags.add(*bench_cmd, "--k", "bench.k");
    bench_args.flags.add(*bench_cmd, "--jobs", "bench.jobs");
    bench_args.flags.add(*bench_cmd, "--resamples", "report.resamples");
    bench_args.flags.add(*bench_cmd, "--out-dir", "output.dir");
    bench_cmd->add_option("manifest", manifest, "dataset manifest (JSON)")->required();

    CommonArgs report_args;
    std::vector<std::string> ledgers;
    auto* report_cmd = app.add_subcommand("report", "statistics from one or more ledgers");
    report_args.attach(*report_cmd);
    report_args.flags.add(*report_cmd, "--k", "bench.k");
    report_args.flags.add(*report_cmd, "--resamples", "report.resamples");
    report_args.flags.add(*report_cmd, "--seed", "bench.seed");
    report_args.flags.add(*report_cmd, "--csv-dir", "report.csv_dir");
    report_cmd->add_option("ledgers", ledgers, "ledger files (JSONL)")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            err << sub->help();
        } else {
            err << app.help();
        }
        return kExitUsage;
    }

    try {
        if (prove_cmd->parsed()) return prove(prove_args, prove_file, prove_theorem, out, err);
        if (bench_cmd->parsed()) return bench(bench_args, manifest, out);
        const bool seed_given = report_args.flags.given().count("bench.seed") != 0;
        return report(report_args, ledgers, seed_given, out);
    } catch (const ConfigError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidTask& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const MissingPrice& e) {
        err << "error: " << e.what() << "\n";
        return prove_cmd->parsed() || bench_cmd->parsed() ? kExitUsage : kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace proofloop::cli
