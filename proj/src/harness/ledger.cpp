#include "proofloop/harness/ledger.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/serialize.hpp"

#include <sstream>

namespace proofloop::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json prices_to_json(const PriceTable& prices) {
    json j = json::object();
    for (const auto& [model, p] : prices.entries()) {
        j[model] = {{"input", p.input}, {"output", p.output}, {"thinking", p.thinking}};
    }
    return j;
}

PriceTable prices_from_json(const json& j) {
    PriceTable t;
    for (const auto& [model, p] : j.items()) {
        t.set(model, {p.value("input", 0.0), p.value("output", 0.0), p.value("thinking", p.value("output", 0.0))});
    }
    return t;
}

UsageByModel usage_from_json(const json& j) {
    UsageByModel out;
    for (const auto& [model, u] : j.items()) out[model] = u.get<TokenUsage>();
    return out;
}

struct RawLine {
    std::string text;
    std::size_t number = 0;
    bool terminated = true;
};

std::vector<RawLine> read_lines(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LedgerError("cannot open ledger " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();
    std::vector<RawLine> out;
    std::size_t start = 0;
    std::size_t number = 1;
    while (start < data.size()) {
        const auto nl = data.find('\n', start);
        if (nl == std::string::npos) {
            out.push_back({data.substr(start), number, false});
            break;
        }
        out.push_back({data.substr(start, nl - start), number, true});
        start = nl + 1;
        ++number;
    }
    return out;
}

}  // namespace

int LedgerHeader::max_iterations() const {
    if (config.is_object() && config.contains("max_iterations")) {
        int i = config.at("max_iterations").get<int>();
        if (config.value("mode", "iterative") == "single-shot") i = 1;
        return i;
    }
    return 0;
}

UsageByModel LedgerRow::usage() const {
    UsageByModel out;
    for (const auto& it : iterations) merge_usage(out, it.usage);
    return out;
}

UsageByModel LedgerRow::usage_through(int iteration) const {
    UsageByModel out;
    for (const auto& it : iterations) {
        if (it.iteration <= iteration) merge_usage(out, it.usage);
    }
    return out;
}

std::set<std::pair<std::string, int>> Ledger::completed() const {
    std::set<std::pair<std::string, int>> out;
    for (const auto& r : rows) out.emplace(r.task_id, r.sample);
    return out;
}

json header_to_json(const LedgerHeader& h) {
    return json{{"type", "header"},
                {"schema", std::string(kLedgerSchema)},
                {"fingerprint", h.fingerprint},
                {"config", h.config},
                {"seed", h.seed},
                {"samples_per_task", h.samples_per_task},
                {"manifest", h.manifest},
                {"tasks", h.tasks},
                {"prices", prices_to_json(h.prices)},
                {"created_at", h.created_at}};
}

LedgerHeader header_from_json(const json& j) {
    if (j.value("type", "") != "header") throw LedgerError("first line is not a ledger header");
    const auto schema = j.value("schema", "");
    if (schema != kLedgerSchema) throw LedgerError("unsupported ledger schema '" + schema + "'");
    LedgerHeader h;
    h.fingerprint = j.at("fingerprint").get<std::string>();
    h.config = j.value("config", json::object());
    h.seed = j.value("seed", std::uint64_t{0});
    h.samples_per_task = j.value("samples_per_task", 1);
    h.manifest = j.value("manifest", "");
    h.tasks = j.value("tasks", std::vector<std::string>{});
    if (j.contains("prices")) h.prices = prices_from_json(j.at("prices"));
    h.created_at = j.value("created_at", "");
    return h;
}

json row_to_json(const LedgerRow& r) {
    json j{{"type", "row"},
           {"task_id", r.task_id},
           {"sample", r.sample},
           {"outcome", std::string(to_string(r.outcome))},
           {"solved_at", r.solved_at ? json(*r.solved_at) : json(nullptr)},
           {"error", r.error},
           {"cost_usd", r.cost_usd},
           {"fingerprint", r.fingerprint},
           {"started_at", r.started_at},
           {"finished_at", r.finished_at},
           {"attempts", r.attempts}};
    if (!r.final_source.empty()) j["final_source"] = r.final_source;
    return j;
}

LedgerRow row_from_json(const json& j) {
    if (j.value("type", "") != "row") throw LedgerError("not a ledger row");
    LedgerRow r;
    r.task_id = j.at("task_id").get<std::string>();
    r.sample = j.at("sample").get<int>();
    const auto outcome = parse_outcome(j.at("outcome").get<std::string>());
    if (!outcome) throw LedgerError("unknown outcome '" + j.at("outcome").get<std::string>() + "'");
    r.outcome = *outcome;
    if (!j.at("solved_at").is_null()) r.solved_at = j.at("solved_at").get<int>();
    r.error = j.value("error", "");
    r.cost_usd = j.value("cost_usd", 0.0);
    r.fingerprint = j.value("fingerprint", "");
    r.started_at = j.value("started_at", "");
    r.finished_at = j.value("finished_at", "");
    r.attempts = j.value("attempts", json::array());
    r.final_source = j.value("final_source", "");
    for (const auto& a : r.attempts) {
        IterationUsage it;
        it.iteration = a.at("iteration").get<int>();
        const auto stage = parse_attempt_stage(a.at("stage").get<std::string>());
        if (!stage) throw LedgerError("unknown stage '" + a.at("stage").get<std::string>() + "'");
        it.stage = *stage;
        it.usage = usage_from_json(a.value("usage", json::object()));
        it.wall_time_s = a.value("wall_time_s", 0.0);
        r.iterations.push_back(std::move(it));
    }
    return r;
}

LedgerRow make_row(const ProofResult& result, int sample, const std::string& fingerprint,
                   const std::string& started_at, const std::string& finished_at) {
    json j = result;  // reuse the attempt serialization
    json row{{"type", "row"},
             {"task_id", result.task_id},
             {"sample", sample},
             {"outcome", std::string(to_string(result.outcome))},
             {"solved_at", result.outcome == ProofResult::Outcome::proved ? json(result.proved_iteration) : json(nullptr)},
             {"error", result.error_reason},
             {"cost_usd", result.total_cost},
             {"fingerprint", fingerprint},
             {"started_at", started_at},
             {"finished_at", finished_at},
             {"attempts", j.at("transcript")}};
    if (result.outcome == ProofResult::Outcome::proved) row["final_source"] = result.final_source;
    return row_from_json(row);
}

Ledger read_ledger(const fs::path& path, ReadOptions options) {
    const auto lines = read_lines(path);
    Ledger ledger;
    bool have_header = false;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.text.empty()) continue;
        const bool last = i + 1 == lines.size();
        const json j = json::parse(line.text, nullptr, false);
        const auto where = path.string() + ":" + std::to_string(line.number) + ": ";
        if (j.is_discarded()) {
            if (last && !line.terminated && options.tolerate_torn_tail) break;
            throw LedgerError(where + "malformed ledger line (not JSON)");
        }
        try {
            if (!have_header) {
                ledger.header = header_from_json(j);
                have_header = true;
            } else {
                ledger.rows.push_back(row_from_json(j));
            }
        } catch (const LedgerError& e) {
            throw LedgerError(where + e.what());
        } catch (const json::exception& e) {
            throw LedgerError(where + "malformed ledger line: " + e.what());
        }
    }
    if (!have_header) throw LedgerError(path.string() + ": empty ledger (no header)");
    return ledger;
}

LedgerWriter::LedgerWriter(const fs::path& path, const LedgerHeader& header, bool resume) : path_(path) {
    const bool exists = fs::exists(path) && fs::file_size(path) > 0;
    if (exists && !resume) throw LedgerError(path.string() + " already exists; pass resume to continue it");

    if (exists) {
        existing_ = read_ledger(path);
        const auto& old = existing_.header;
        if (old.fingerprint != header.fingerprint) {
            throw LedgerError(path.string() + ": config fingerprint " + old.fingerprint + " does not match " +
                              header.fingerprint);
        }
        if (old.seed != header.seed || old.samples_per_task != header.samples_per_task || old.tasks != header.tasks) {
            throw LedgerError(path.string() + ": seed, sample count or task list differ from the existing run");
        }
        // Drop a torn tail so the next row starts on a fresh line.
        const auto lines = read_lines(path);
        if (!lines.empty() && !lines.back().terminated) {
            std::uintmax_t keep = 0;
            for (std::size_t i = 0; i + 1 < lines.size(); ++i) keep += lines[i].text.size() + 1;
            fs::resize_file(path, keep);
        }
        out_.open(path, std::ios::binary | std::ios::app);
    } else {
        if (path.has_parent_path()) fs::create_directories(path.parent_path());
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (out_) {
            out_ << header_to_json(header).dump() << '\n';
            out_.flush();
        }
        existing_.header = header;
    }
    if (!out_) throw LedgerError("cannot write ledger " + path.string());
}

void LedgerWriter::append(const LedgerRow& row) {
    std::lock_guard lock(mu_);
    out_ << row_to_json(row).dump() << '\n';
    out_.flush();
    if (!out_) throw LedgerError("write to " + path_.string() + " failed");
}

}  // namespace proofloop::harness
