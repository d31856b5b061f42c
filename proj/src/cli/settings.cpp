#include "proofloop/cli/settings.hpp"

#include "proofloop/core/errors.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace proofloop::cli {

using nlohmann::json;
namespace fs = std::filesystem;

const std::vector<KeySpec>& known_keys() {
    using K = KeyType;
    static const std::vector<KeySpec> keys = {
        {"max_iterations", K::integer, 20, {}, false, "iteration budget I"},
        {"mode", K::string, "iterative", {"iterative", "single-shot"}, false, "prover mode"},
        {"memory", K::string, "self-managed", {"none", "history", "self-managed"}, false, "memory strategy"},
        {"history_n", K::integer, 5, {}, false, "attempts kept by history memory"},
        {"notes_cap", K::integer, 4000, {}, false, "self-managed notes cap (chars)"},
        {"render_budget", K::integer, 120000, {}, false, "memory render budget (chars)"},
        {"include_last_attempt", K::boolean, true, {}, false, "self-managed memory also shows the last attempt"},
        {"reflection_model", K::string, "", {}, false, "reflection model (default: model)"},
        {"tools", K::string_list, json::array(), {"library_search", "web_search", "library", "web"}, false,
         "enabled tools"},
        {"thinking_budget", K::string, "10000", {}, false, "thinking tokens or provider level"},
        {"model", K::string, "mock", {}, false, "proposer model"},
        {"reviewer_model", K::string, "", {}, false, "reviewer model (default: model)"},
        {"build_timeout", K::number, 300.0, {}, false, "build timeout (s)"},
        {"max_tool_calls", K::integer, 4, {}, false, "tool calls per round"},
        {"lean_version", K::string, "4.24", {}, false, "Lean version named in prompts"},
        {"denylist", K::string_list, default_denylist(), {}, false, "loophole denylist"},
        {"scratch_file", K::string, "Main.lean", {}, false, "scratch file name per task"},

        {"llm.provider", K::string, "mock", {"mock", "anthropic", "openai"}, false, "LLM backend"},
        {"llm.script", K::string, "", {}, true, "scripted LLM script (mock provider)"},
        {"llm.base_url", K::string, "", {}, false, "provider base URL"},
        {"llm.api_key_env", K::string, "", {}, false, "environment variable holding the API key"},
        {"llm.timeout_s", K::number, 600.0, {}, false, "LLM request timeout (s)"},
        {"llm.retries", K::integer, 3, {}, false, "attempts per LLM call"},
        {"llm.retry_delay_ms", K::integer, 1000, {}, false, "first retry delay (ms)"},
        {"llm.max_output_tokens", K::integer, 16000, {}, false, "output token cap per call"},
        {"reviewer.llm", K::boolean, true, {}, false, "ask the reviewer LLM after deterministic checks"},

        {"build.backend", K::string, "mock", {"mock", "lake"}, false, "build backend"},
        {"build.script", K::string, "", {}, true, "mock build script"},
        {"build.workspace", K::string, "", {}, true, "Lean package root (lake backend)"},
        {"build.command", K::string_list, json::array({"lake", "env", "lean", "{file}"}), {}, false,
         "build argv; {file} and {module} are substituted"},
        {"build.jobs", K::integer, 0, {}, false, "concurrent builds (0: half the cores)"},
        {"build.scratch_dir", K::string, "ProofloopScratch", {}, false, "scratch directory inside the workspace"},

        {"library.backend", K::string, "mock", {"none", "mock", "http"}, false, "library search backend"},
        {"library.endpoint", K::string, "", {}, false, "library search service URL"},
        {"library.table", K::string, "", {}, true, "mock premise table (JSON)"},
        {"web.backend", K::string, "mock", {"none", "mock", "tavily"}, false, "web search backend"},
        {"web.script", K::string, "", {}, true, "scripted web search (JSON)"},
        {"web.base_url", K::string, "https://api.tavily.com", {}, false, "web search base URL"},
        {"web.api_key_env", K::string, "TAVILY_API_KEY", {}, false, "environment variable holding the key"},
        {"tools.limit", K::integer, 10, {}, false, "hits per tool call"},
        {"tools.snippet_chars", K::integer, 500, {}, false, "web snippet truncation"},

        {"bench.samples", K::integer, 1, {}, false, "samples per task"},
        {"bench.seed", K::uint64, 0, {}, false, "run seed"},
        {"bench.jobs", K::integer, 1, {}, false, "concurrent attempt loops"},
        {"bench.k", K::int_list, json::array({1}), {}, false, "k values for pass@k"},
        {"bench.ledger", K::string, "", {}, false, "ledger path"},
        {"bench.root", K::string, "", {}, true, "dataset root for manifest paths"},
        {"bench.resume", K::boolean, false, {}, false, "continue an existing ledger"},

        {"report.resamples", K::integer, 10000, {}, false, "bootstrap resamples"},
        {"report.csv_dir", K::string, "", {}, false, "directory for CSV exports"},
        {"output.dir", K::string, "proofloop-out", {}, false, "directory for prove outputs"},
    };
    return keys;
}

const KeySpec* find_key(std::string_view name) {
    const auto& keys = known_keys();
    const auto it = std::find_if(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.name == name; });
    return it == keys.end() ? nullptr : &*it;
}

namespace {

std::string trimmed(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        auto item = trimmed(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

void check_choices(const KeySpec& spec, const std::string& v) {
    if (spec.choices.empty()) return;
    if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
        std::string allowed;
        for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
        throw ConfigError("invalid value '" + v + "' for " + spec.name + " (allowed: " + allowed + ")");
    }
}

// Checks a JSON value from a config file against the key's type.
json coerce(const KeySpec& spec, const json& v) {
    if (v.is_string() && spec.type != KeyType::string) return parse_value(spec, v.get<std::string>());
    const auto bad = [&] { return ConfigError("wrong type for " + spec.name + ": " + v.dump()); };
    switch (spec.type) {
        case KeyType::integer:
            if (!v.is_number_integer()) throw bad();
            return v;
        case KeyType::uint64:
            if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) throw bad();
            return json(v.get<std::uint64_t>());
        case KeyType::number:
            if (!v.is_number()) throw bad();
            return json(v.get<double>());
        case KeyType::boolean:
            if (!v.is_boolean()) throw bad();
            return v;
        case KeyType::string:
            if (v.is_number()) return json(v.dump());
            if (!v.is_string()) throw bad();
            check_choices(spec, v.get<std::string>());
            return v;
        case KeyType::string_list:
            if (!v.is_array()) throw bad();
            for (const auto& x : v) {
                if (!x.is_string()) throw bad();
                check_choices(spec, x.get<std::string>());
            }
            return v;
        case KeyType::int_list:
            if (!v.is_array()) throw bad();
            for (const auto& x : v) {
                if (!x.is_number_integer()) throw bad();
            }
            return v;
    }
    throw bad();
}

void flatten(const json& obj, const std::string& prefix, std::map<std::string, json>& out) {
    for (const auto& [k, v] : obj.items()) {
        const std::string key = prefix.empty() ? k : prefix + "." + k;
        if (v.is_object() && find_key(key) == nullptr) {
            flatten(v, key, out);
        } else {
            out[key] = v;
        }
    }
}

PriceTable parse_prices(const json& j) {
    PriceTable t;
    if (!j.is_object()) throw ConfigError("prices must be an object of model -> {input, output, thinking}");
    for (const auto& [model, p] : j.items()) {
        if (!p.is_object() || !p.contains("input") || !p.contains("output")) {
            throw ConfigError("price for '" + model + "' needs input and output (USD per 1M tokens)");
        }
        const double out = p.at("output").get<double>();
        t.set(model, {p.at("input").get<double>(), out, p.value("thinking", out)});
    }
    return t;
}

}  // namespace

json parse_value(const KeySpec& spec, std::string_view text) {
    const std::string s = trimmed(text);
    const auto fail = [&](const std::string& why) {
        return ConfigError("invalid value '" + s + "' for " + spec.name + ": " + why);
    };
    try {
        switch (spec.type) {
            case KeyType::integer: {
                std::size_t used = 0;
                const long long v = std::stoll(s, &used);
                if (used != s.size()) throw fail("not an integer");
                return json(v);
            }
            case KeyType::uint64: {
                std::size_t used = 0;
                if (!s.empty() && s.front() == '-') throw fail("must be non-negative");
                const unsigned long long v = std::stoull(s, &used);
                if (used != s.size()) throw fail("not an integer");
                return json(static_cast<std::uint64_t>(v));
            }
            case KeyType::number: {
                std::size_t used = 0;
                const double v = std::stod(s, &used);
                if (used != s.size()) throw fail("not a number");
                return json(v);
            }
            case KeyType::boolean:
                if (s == "true" || s == "1" || s == "yes" || s == "on") return json(true);
                if (s == "false" || s == "0" || s == "no" || s == "off") return json(false);
                throw fail("not a boolean");
            case KeyType::string:
                check_choices(spec, s);
                return json(s);
            case KeyType::string_list:
            case KeyType::int_list: {
                json arr;
                if (!s.empty() && s.front() == '[') {
                    arr = json::parse(s, nullptr, false);
                    if (arr.is_discarded() || !arr.is_array()) throw fail("not a JSON array");
                } else {
                    arr = json::array();
                    for (const auto& item : split_commas(s)) {
                        arr.push_back(spec.type == KeyType::int_list ? parse_value({spec.name, KeyType::integer, {}, {}, false, {}}, item)
                                                                     : json(item));
                    }
                }
                return coerce(spec, arr);
            }
        }
    } catch (const std::invalid_argument&) {
        throw fail("cannot parse");
    } catch (const std::out_of_range&) {
        throw fail("out of range");
    }
    throw fail("unsupported type");
}

ConfigFile ConfigFile::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    ConfigFile f;
    f.path = path;
    try {
        f.data = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!f.data.is_object()) throw ConfigError(path.string() + ": top level must be an object");
    return f;
}

void Settings::set(const std::string& key, json value, std::string source) {
    values_[key] = std::move(value);
    sources_[key] = std::move(source);
}

Settings Settings::resolve(const std::optional<ConfigFile>& config, const std::string& profile,
                           const std::vector<std::string>& overrides, const std::map<std::string, std::string>& flags) {
    Settings s;
    for (const auto& k : known_keys()) s.set(k.name, k.default_value, "default");

    std::string chosen = profile;
    if (config) {
        const auto& data = config->data;
        if (chosen.empty()) chosen = data.value("default_profile", "default");
        if (data.contains("prices")) s.prices_ = parse_prices(data.at("prices"));

        const json profiles = data.value("profiles", json::object());
        std::vector<std::string> chain;
        std::set<std::string> seen;
        for (std::string name = chosen; !name.empty();) {
            if (!seen.insert(name).second) throw ConfigError("profile inheritance cycle at '" + name + "'");
            if (!profiles.contains(name)) {
                if (name == "default" && chain.empty()) break;
                throw ConfigError("unknown profile '" + name + "' in " + config->path.string());
            }
            chain.push_back(name);
            name = profiles.at(name).value("extends", "");
        }
        const fs::path base = config->path.has_parent_path() ? config->path.parent_path() : fs::path(".");
        for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
            json body = profiles.at(*it);
            if (body.contains("prices")) {
                for (const auto& [model, p] : parse_prices(body.at("prices")).entries()) s.prices_.set(model, p);
                body.erase("prices");
            }
            body.erase("extends");
            std::map<std::string, json> flat;
            flatten(body, "", flat);
            for (const auto& [key, value] : flat) {
                const KeySpec* spec = find_key(key);
                if (spec == nullptr) throw ConfigError("unknown config key '" + key + "' in profile '" + *it + "'");
                json v = coerce(*spec, value);
                if (spec->is_path && v.is_string() && !v.get<std::string>().empty() &&
                    fs::path(v.get<std::string>()).is_relative()) {
                    v = (base / v.get<std::string>()).lexically_normal().string();
                }
                s.set(key, std::move(v), "profile " + *it);
            }
        }
    } else if (!chosen.empty() && chosen != "default") {
        throw ConfigError("profile '" + chosen + "' requested without a config file");
    }
    s.profile_ = chosen.empty() ? "default" : chosen;

    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
        const std::string key = trimmed(std::string_view(o).substr(0, eq));
        const KeySpec* spec = find_key(key);
        if (spec == nullptr) throw ConfigError("unknown config key '" + key + "'");
        s.set(key, parse_value(*spec, std::string_view(o).substr(eq + 1)), "--set");
    }
    for (const auto& [key, text] : flags) {
        const KeySpec* spec = find_key(key);
        if (spec == nullptr) throw ConfigError("unknown config key '" + key + "'");
        s.set(key, parse_value(*spec, text), "flag");
    }
    return s;
}

const json& Settings::get(std::string_view key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return it->second;
}

std::string Settings::str(std::string_view key) const { return get(key).get<std::string>(); }
int Settings::integer(std::string_view key) const { return get(key).get<int>(); }
std::uint64_t Settings::u64(std::string_view key) const { return get(key).get<std::uint64_t>(); }
double Settings::number(std::string_view key) const { return get(key).get<double>(); }
bool Settings::boolean(std::string_view key) const { return get(key).get<bool>(); }
std::vector<std::string> Settings::strings(std::string_view key) const { return get(key).get<std::vector<std::string>>(); }
std::vector<int> Settings::ints(std::string_view key) const { return get(key).get<std::vector<int>>(); }

const std::string& Settings::source(std::string_view key) const {
    const auto it = sources_.find(key);
    if (it == sources_.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
    return it->second;
}

ProverConfig Settings::prover_config() const {
    ProverConfig c;
    c.max_iterations = integer("max_iterations");
    c.mode = str("mode") == "single-shot" ? ProverMode::single_shot : ProverMode::iterative;
    const auto mem = str("memory");
    c.memory.kind = mem == "none" ? MemoryKind::none : mem == "history" ? MemoryKind::history : MemoryKind::self_managed;
    c.memory.history_n = integer("history_n");
    const int cap = integer("notes_cap");
    const int budget = integer("render_budget");
    if (cap < 1 || budget < 1) throw ConfigError("notes_cap and render_budget must be positive");
    c.memory.notes_cap = static_cast<std::size_t>(cap);
    c.memory.render_budget = static_cast<std::size_t>(budget);
    c.memory.include_last_attempt = boolean("include_last_attempt");
    c.memory.reflection_model = str("reflection_model");
    for (const auto& t : strings("tools")) {
        const auto tool = parse_tool(t);
        if (!tool) throw ConfigError("unknown tool '" + t + "'");
        c.tools_enabled.insert(*tool);
    }
    c.thinking_budget = ThinkingBudget::parse(str("thinking_budget"));
    c.model = str("model");
    c.reviewer_model = str("reviewer_model");
    c.build_timeout_s = number("build_timeout");
    c.max_tool_calls = integer("max_tool_calls");
    c.lean_version = str("lean_version");
    c.denylist = strings("denylist");
    c.scratch_file = str("scratch_file");
    c.validate();
    return c;
}

json Settings::to_json() const {
    json j = json::object();
    for (const auto& [k, v] : values_) j[k] = v;
    return j;
}

}  // namespace proofloop::cli
