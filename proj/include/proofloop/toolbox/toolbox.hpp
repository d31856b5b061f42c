#pragma once

#include "proofloop/core/llm.hpp"
#include "proofloop/core/types.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <vector>

namespace proofloop::toolbox {

struct PremiseHit {
    std::string name;       // fully qualified Lean identifier
    std::string statement;  // display text
    double score = 0.0;     // similarity in [0, 1]
    std::string module;     // Mathlib module path

    bool operator==(const PremiseHit&) const = default;
};

struct WebHit {
    std::string title;
    std::string url;
    std::string snippet;

    bool operator==(const WebHit&) const = default;
};

// Premise selection over Mathlib. Implementations return at most `limit`
// hits sorted by descending score and throw ToolUnavailable on failure.
class LibrarySearch {
public:
    virtual ~LibrarySearch() = default;
    virtual std::vector<PremiseHit> search(const std::string& query, std::size_t limit) = 0;
};

class WebSearch {
public:
    virtual ~WebSearch() = default;
    virtual std::vector<WebHit> search(const std::string& query, std::size_t limit) = 0;
};

// Sorts by descending score (stable on ties), clamps scores into [0, 1] and truncates.
std::vector<PremiseHit> normalize_premises(std::vector<PremiseHit> hits, std::size_t limit);

// Drops hits without an http(s) URL, truncates snippets and caps the count.
std::vector<WebHit> normalize_web_hits(std::vector<WebHit> hits, std::size_t limit, std::size_t snippet_chars);

bool is_well_formed_url(const std::string& url);

// HTTP client for a premise-search service.
//   POST <endpoint>/search  {"query": "...", "limit": N}
//   200 {"results": [{"name", "statement", "score", "module"}]}
class HttpLibrarySearch final : public LibrarySearch {
public:
    explicit HttpLibrarySearch(std::string endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(30));
    std::vector<PremiseHit> search(const std::string& query, std::size_t limit) override;

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

// Seeded in-memory index. Score is 1 when the query occurs verbatim in the
// name or statement, otherwise the fraction of query tokens found among the
// entry's tokens; entries with no shared token are not returned.
class MockLibrarySearch final : public LibrarySearch {
public:
    explicit MockLibrarySearch(std::vector<PremiseHit> table);

    // Table file: JSON array of {"name", "statement", "module"}.
    static MockLibrarySearch from_file(const std::filesystem::path& path);
    // A handful of core Nat lemmas, enough for demos and tests.
    static std::vector<PremiseHit> builtin_table();

    std::vector<PremiseHit> search(const std::string& query, std::size_t limit) override;

private:
    std::vector<PremiseHit> table_;
};

// Tavily search API client.
class TavilyWebSearch final : public WebSearch {
public:
    TavilyWebSearch(std::string api_key, std::string base_url = "https://api.tavily.com",
                    std::chrono::milliseconds timeout = std::chrono::seconds(30));
    std::vector<WebHit> search(const std::string& query, std::size_t limit) override;

private:
    std::string api_key_;
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

// Scripted web search: exact query -> hits, with optional fault injection.
// Script schema: {"queries": {"<query>": [{"title","url","snippet"}] | {"error": "timeout"}},
//                 "default": [...]}
class ScriptedWebSearch final : public WebSearch {
public:
    struct Entry {
        std::vector<WebHit> hits;
        std::string error;  // non-empty: throw ToolUnavailable with this text
    };

    ScriptedWebSearch() = default;
    explicit ScriptedWebSearch(std::map<std::string, Entry> queries, Entry fallback = {});
    static ScriptedWebSearch from_json(const nlohmann::json& script);
    static ScriptedWebSearch from_file(const std::filesystem::path& path);

    std::vector<WebHit> search(const std::string& query, std::size_t limit) override;

private:
    std::map<std::string, Entry> queries_;
    Entry fallback_;
};

struct ToolCallRequest {
    Tool tool = Tool::library_search;
    std::map<std::string, std::string> arguments;
    std::string call_id;
};

struct ToolboxOptions {
    std::size_t default_limit = 10;
    std::size_t snippet_chars = 500;
};

inline constexpr std::string_view kToolDisabled = "tool disabled";

// The tools a proposer may call. Rendering never throws: failures come back
// as error text so a broken tool cannot end an attempt loop.
class Toolbox {
public:
    Toolbox(std::set<Tool> enabled, LibrarySearch* library, WebSearch* web, ToolboxOptions options = {});

    std::string run(const ToolCallRequest& request) const;
    std::vector<ToolSpec> specs() const;  // for enabled tools only
    bool enabled(Tool t) const { return enabled_.count(t) != 0; }
    const std::set<Tool>& enabled_tools() const { return enabled_; }

private:
    std::set<Tool> enabled_;
    LibrarySearch* library_;
    WebSearch* web_;
    ToolboxOptions options_;
};

std::string render_premises(const std::vector<PremiseHit>& hits);
std::string render_web_hits(const std::vector<WebHit>& hits);

}  // namespace proofloop::toolbox
