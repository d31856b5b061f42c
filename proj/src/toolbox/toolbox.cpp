#include "proofloop/toolbox/toolbox.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/core/http.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace proofloop::toolbox {

using nlohmann::json;

namespace {

// Runs of identifier characters are one token; any other non-space byte
// sequence up to the next space or identifier character is one token.
std::vector<std::string> tokenize(std::string_view s) {
    const auto is_word = [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '.' || c == '\'' || c >= 0x80; };
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        if (is_word(c)) {
            while (j < s.size() && is_word(static_cast<unsigned char>(s[j]))) ++j;
        } else {
            while (j < s.size() && !is_word(static_cast<unsigned char>(s[j])) &&
                   !std::isspace(static_cast<unsigned char>(s[j])))
                ++j;
        }
        out.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return out;
}

std::set<std::string> token_set(const PremiseHit& entry) {
    std::set<std::string> out;
    for (auto& t : tokenize(entry.statement)) out.insert(std::move(t));
    for (auto& t : tokenize(entry.name)) out.insert(std::move(t));
    // Name components so `add_zero` finds `Nat.add_zero`.
    std::size_t start = 0;
    while (start <= entry.name.size()) {
        const auto dot = entry.name.find('.', start);
        const auto part = entry.name.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!part.empty()) out.insert(part);
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return out;
}

std::string truncate_utf8(const std::string& s, std::size_t max_bytes) {
    if (s.size() <= max_bytes) return s;
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
    return s.substr(0, cut) + "...";
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

WebHit web_hit_from_json(const json& j) {
    WebHit h;
    h.title = j.value("title", "");
    h.url = j.value("url", "");
    h.snippet = j.contains("snippet") ? j.value("snippet", "") : j.value("content", "");
    return h;
}

}  // namespace

std::vector<PremiseHit> normalize_premises(std::vector<PremiseHit> hits, std::size_t limit) {
    for (auto& h : hits) h.score = std::clamp(h.score, 0.0, 1.0);
    std::stable_sort(hits.begin(), hits.end(), [](const PremiseHit& a, const PremiseHit& b) { return a.score > b.score; });
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

bool is_well_formed_url(const std::string& url) {
    std::string_view rest;
    if (url.rfind("https://", 0) == 0) {
        rest = std::string_view(url).substr(8);
    } else if (url.rfind("http://", 0) == 0) {
        rest = std::string_view(url).substr(7);
    } else {
        return false;
    }
    const auto host = rest.substr(0, rest.find_first_of("/?#"));
    if (host.empty()) return false;
    return std::none_of(url.begin(), url.end(), [](unsigned char c) { return std::isspace(c) || c < 0x20; });
}

std::vector<WebHit> normalize_web_hits(std::vector<WebHit> hits, std::size_t limit, std::size_t snippet_chars) {
    std::vector<WebHit> out;
    for (auto& h : hits) {
        if (out.size() >= limit) break;
        if (!is_well_formed_url(h.url)) continue;
        h.snippet = truncate_utf8(h.snippet, snippet_chars);
        out.push_back(std::move(h));
    }
    return out;
}

HttpLibrarySearch::HttpLibrarySearch(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {}

std::vector<PremiseHit> HttpLibrarySearch::search(const std::string& query, std::size_t limit) {
    const json body = {{"query", query}, {"limit", limit}};
    HttpResponse res;
    try {
        res = http_post_json(endpoint_, "/search", {}, body.dump(), timeout_);
    } catch (const Error& e) {
        throw ToolUnavailable(std::string("library search: ") + e.what());
    }
    if (res.status != 200) throw ToolUnavailable("library search: HTTP " + std::to_string(res.status));
    try {
        const json j = json::parse(res.body);
        std::vector<PremiseHit> hits;
        for (const auto& r : j.at("results")) {
            hits.push_back({r.at("name").get<std::string>(), r.value("statement", ""), r.value("score", 0.0),
                            r.value("module", "")});
        }
        return normalize_premises(std::move(hits), limit);
    } catch (const json::exception& e) {
        throw ToolUnavailable(std::string("library search: bad response: ") + e.what());
    }
}

MockLibrarySearch::MockLibrarySearch(std::vector<PremiseHit> table) : table_(std::move(table)) {}

MockLibrarySearch MockLibrarySearch::from_file(const std::filesystem::path& path) {
    const json j = read_json_file(path);
    std::vector<PremiseHit> table;
    for (const auto& e : j) {
        table.push_back({e.at("name").get<std::string>(), e.value("statement", ""), 0.0, e.value("module", "")});
    }
    return MockLibrarySearch(std::move(table));
}

std::vector<PremiseHit> MockLibrarySearch::builtin_table() {
    const std::string m = "Init.Data.Nat.Basic";
    return {
        {"Nat.add_zero", "∀ (n : ℕ), n + 0 = n", 0, m},
        {"Nat.zero_add", "∀ (n : ℕ), 0 + n = n", 0, m},
        {"Nat.add_comm", "∀ (n m : ℕ), n + m = m + n", 0, m},
        {"Nat.add_assoc", "∀ (n m k : ℕ), n + m + k = n + (m + k)", 0, m},
        {"Nat.add_succ", "∀ (n m : ℕ), n + Nat.succ m = Nat.succ (n + m)", 0, m},
        {"Nat.succ_add", "∀ (n m : ℕ), Nat.succ n + m = Nat.succ (n + m)", 0, m},
        {"Nat.mul_zero", "∀ (n : ℕ), n * 0 = 0", 0, m},
        {"Nat.zero_mul", "∀ (n : ℕ), 0 * n = 0", 0, m},
        {"Nat.mul_one", "∀ (n : ℕ), n * 1 = n", 0, m},
        {"Nat.one_mul", "∀ (n : ℕ), 1 * n = n", 0, m},
        {"Nat.mul_comm", "∀ (n m : ℕ), n * m = m * n", 0, m},
        {"Nat.succ_ne_zero", "∀ (n : ℕ), n + 1 ≠ 0", 0, m},
        {"Nat.le_refl", "∀ (n : ℕ), n ≤ n", 0, m},
        {"Nat.lt_irrefl", "∀ (n : ℕ), ¬n < n", 0, m},
    };
}

std::vector<PremiseHit> MockLibrarySearch::search(const std::string& query, std::size_t limit) {
    if (limit < 1) throw ToolUnavailable("library search: limit must be at least 1");
    const auto q_tokens = tokenize(query);
    const std::set<std::string> q_set(q_tokens.begin(), q_tokens.end());
    std::vector<PremiseHit> hits;
    for (const auto& entry : table_) {
        PremiseHit hit = entry;
        if (!query.empty() &&
            (entry.name.find(query) != std::string::npos || entry.statement.find(query) != std::string::npos)) {
            hit.score = 1.0;
        } else {
            if (q_set.empty()) continue;
            const auto tokens = token_set(entry);
            std::size_t shared = 0;
            for (const auto& t : q_set) shared += tokens.count(t);
            if (shared == 0) continue;
            // Overlap stays strictly below an exact match.
            hit.score = 0.9 * static_cast<double>(shared) / static_cast<double>(q_set.size());
        }
        hits.push_back(std::move(hit));
    }
    return normalize_premises(std::move(hits), limit);
}

TavilyWebSearch::TavilyWebSearch(std::string api_key, std::string base_url, std::chrono::milliseconds timeout)
    : api_key_(std::move(api_key)), base_url_(std::move(base_url)), timeout_(timeout) {}

std::vector<WebHit> TavilyWebSearch::search(const std::string& query, std::size_t limit) {
    const json body = {{"query", query}, {"max_results", limit}, {"search_depth", "basic"}};
    HttpResponse res;
    try {
        res = http_post_json(base_url_, "/search", {{"Authorization", "Bearer " + api_key_}}, body.dump(), timeout_);
    } catch (const Error& e) {
        throw ToolUnavailable(std::string("web search: ") + e.what());
    }
    if (res.status != 200) throw ToolUnavailable("web search: HTTP " + std::to_string(res.status));
    try {
        const json j = json::parse(res.body);
        std::vector<WebHit> hits;
        if (j.contains("results")) {
            for (const auto& r : j.at("results")) hits.push_back(web_hit_from_json(r));
        }
        return hits;
    } catch (const json::exception& e) {
        throw ToolUnavailable(std::string("web search: bad response: ") + e.what());
    }
}

ScriptedWebSearch::ScriptedWebSearch(std::map<std::string, Entry> queries, Entry fallback)
    : queries_(std::move(queries)), fallback_(std::move(fallback)) {}

ScriptedWebSearch ScriptedWebSearch::from_json(const json& script) {
    const auto entry_of = [](const json& j) {
        Entry e;
        if (j.is_object()) {
            e.error = j.value("error", "");
            if (j.contains("hits")) {
                for (const auto& h : j.at("hits")) e.hits.push_back(web_hit_from_json(h));
            }
        } else {
            for (const auto& h : j) e.hits.push_back(web_hit_from_json(h));
        }
        return e;
    };
    std::map<std::string, Entry> queries;
    if (script.contains("queries")) {
        for (const auto& [q, v] : script.at("queries").items()) queries[q] = entry_of(v);
    }
    Entry fallback;
    if (script.contains("default")) fallback = entry_of(script.at("default"));
    return ScriptedWebSearch(std::move(queries), std::move(fallback));
}

ScriptedWebSearch ScriptedWebSearch::from_file(const std::filesystem::path& path) {
    return from_json(read_json_file(path));
}

std::vector<WebHit> ScriptedWebSearch::search(const std::string& query, std::size_t limit) {
    const auto it = queries_.find(query);
    const Entry& e = it == queries_.end() ? fallback_ : it->second;
    if (!e.error.empty()) throw ToolUnavailable("web search: " + e.error);
    std::vector<WebHit> hits = e.hits;
    if (hits.size() > limit) hits.resize(limit);
    return hits;
}

Toolbox::Toolbox(std::set<Tool> enabled, LibrarySearch* library, WebSearch* web, ToolboxOptions options)
    : enabled_(std::move(enabled)), library_(library), web_(web), options_(options) {}

std::string Toolbox::run(const ToolCallRequest& request) const {
    if (!enabled(request.tool)) return std::string(kToolDisabled);
    const auto q = request.arguments.find("query");
    if (q == request.arguments.end() || q->second.empty()) return "error: missing query";

    std::size_t limit = options_.default_limit;
    if (const auto l = request.arguments.find("limit"); l != request.arguments.end()) {
        try {
            const long v = std::stol(l->second);
            if (v < 1) return "error: limit must be at least 1";
            limit = std::min<std::size_t>(static_cast<std::size_t>(v), options_.default_limit);
        } catch (const std::exception&) {
            return "error: limit is not a number";
        }
    }

    try {
        if (request.tool == Tool::library_search) {
            if (library_ == nullptr) return "error: library search is not configured";
            return render_premises(normalize_premises(library_->search(q->second, limit), limit));
        }
        if (web_ == nullptr) return "error: web search is not configured";
        return render_web_hits(normalize_web_hits(web_->search(q->second, limit), limit, options_.snippet_chars));
    } catch (const std::exception& e) {
        return std::string("error: ") + e.what();
    }
}

std::vector<ToolSpec> Toolbox::specs() const {
    const json params = {
        {"type", "object"},
        {"properties",
         {{"query", {{"type", "string"}}}, {"limit", {{"type", "integer"}, {"minimum", 1}}}}},
        {"required", {"query"}},
    };
    std::vector<ToolSpec> out;
    if (enabled(Tool::library_search)) {
        out.push_back({"library_search",
                       "Search Mathlib for lemmas and definitions relevant to a natural-language or Lean query.",
                       params});
    }
    if (enabled(Tool::web_search)) {
        out.push_back({"web_search", "Search the web for proof strategies and background material.", params});
    }
    return out;
}

std::string render_premises(const std::vector<PremiseHit>& hits) {
    if (hits.empty()) return "no results";
    std::ostringstream out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (i) out << '\n';
        out << hits[i].name << " : " << hits[i].statement;
    }
    return out.str();
}

std::string render_web_hits(const std::vector<WebHit>& hits) {
    if (hits.empty()) return "no results";
    std::ostringstream out;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        if (i) out << "\n\n";
        out << hits[i].title << '\n' << hits[i].url << '\n' << hits[i].snippet;
    }
    return out.str();
}

}  // namespace proofloop::toolbox
