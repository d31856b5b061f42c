#include "proofloop/leanenv/diagnostics.hpp"

#include <algorithm>
#include <optional>
#include <regex>
#include <sstream>

namespace proofloop::leanenv {

namespace {

struct Header {
    std::string file;
    int line;
    int column;
    std::string severity;
    std::string message;
};

// `<path>:<line>:<col>: <severity>: <message>`
const std::regex& lean_header() {
    static const std::regex re(R"(^(.+?):(\d+):(\d+): ([a-z]+): ?(.*)$)");
    return re;
}

// lake: `<severity>: <path>:<line>:<col>: <message>`
const std::regex& lake_header() {
    static const std::regex re(R"(^(error|warning|info|information): (.+?):(\d+):(\d+): ?(.*)$)");
    return re;
}

// Build-tool lines that never belong to a compiler message.
const std::regex& chatter() {
    static const std::regex re(
        R"(^(✖|⚠|✔|ℹ|⣿|\[\d+/\d+\]|(error|warning|info|trace): |Some required builds logged failures|Build completed|build failed|Lean exited with code))");
    return re;
}

std::optional<Header> match_header(const std::string& line) {
    std::smatch m;
    if (std::regex_match(line, m, lake_header())) {
        return Header{m[2], std::stoi(m[3]), std::stoi(m[4]), m[1], m[5]};
    }
    if (std::regex_match(line, m, lean_header())) {
        return Header{m[1], std::stoi(m[2]), std::stoi(m[3]), m[4], m[5]};
    }
    return std::nullopt;
}

bool same_file(std::string_view diag_file, std::string_view file) {
    if (file.empty() || diag_file == file) return true;
    if (diag_file.size() > file.size() && diag_file.substr(diag_file.size() - file.size()) == file) {
        return diag_file[diag_file.size() - file.size() - 1] == '/';
    }
    return false;
}

std::string goal_text(const std::string& message) {
    constexpr std::string_view prefix = "unsolved goals";
    std::string_view rest(message);
    if (rest.substr(0, prefix.size()) == prefix) rest.remove_prefix(prefix.size());
    const auto b = rest.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return message;
    const auto e = rest.find_last_not_of(" \t\r\n");
    return std::string(rest.substr(b, e - b + 1));
}

}  // namespace

std::vector<Diagnostic> parse_diagnostics(std::string_view raw_output) {
    std::vector<Diagnostic> out;
    bool open = false;
    std::istringstream in{std::string(raw_output)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (auto h = match_header(line)) {
            const auto sev = parse_severity(h->severity);
            open = sev.has_value() && h->line >= 1;
            if (open) out.push_back(Diagnostic{h->file, h->line, h->column, *sev, h->message});
            continue;
        }
        if (std::regex_search(line, chatter())) {
            open = false;
            continue;
        }
        if (open) {
            out.back().message += '\n';
            out.back().message += line;
        }
    }
    return out;
}

std::string format_diagnostics(const std::vector<Diagnostic>& diagnostics) {
    std::string out;
    for (const auto& d : diagnostics) {
        out += d.file + ':' + std::to_string(d.line) + ':' + std::to_string(d.column) + ": " +
               std::string(to_string(d.severity)) + ": " + d.message + '\n';
    }
    return out;
}

bool is_unsolved_goals(const Diagnostic& d) {
    return d.severity == Severity::error && d.message.rfind("unsolved goals", 0) == 0;
}

std::vector<std::optional<std::size_t>> match_goal_sites(const std::vector<Diagnostic>& diagnostics,
                                                         const std::vector<SourcePos>& sorry_sites,
                                                         std::string_view file) {
    std::vector<SourcePos> ordered = sorry_sites;
    std::sort(ordered.begin(), ordered.end());

    std::vector<std::optional<std::size_t>> out;
    out.reserve(sorry_sites.size());
    for (const SourcePos& site : sorry_sites) {
        const auto it = std::upper_bound(ordered.begin(), ordered.end(), site);
        const SourcePos* next = it == ordered.end() ? nullptr : &*it;

        std::optional<std::size_t> best;
        SourcePos best_pos{};
        for (std::size_t i = 0; i < diagnostics.size(); ++i) {
            const auto& d = diagnostics[i];
            if (!is_unsolved_goals(d) || !same_file(d.file, file)) continue;
            const SourcePos p{d.line, d.column};
            if (p < site || (next && !(p < *next))) continue;
            if (!best || p < best_pos) {
                best = i;
                best_pos = p;
            }
        }
        // Lean may anchor the error at the arrow or tactic opening the hole,
        // just before the stripped placeholder on the same line.
        if (!best) {
            for (std::size_t i = 0; i < diagnostics.size(); ++i) {
                const auto& d = diagnostics[i];
                if (!is_unsolved_goals(d) || !same_file(d.file, file)) continue;
                const SourcePos p{d.line, d.column};
                if (p.line != site.line || !(p < site)) continue;
                if (!best || best_pos < p) {
                    best = i;
                    best_pos = p;
                }
            }
        }
        out.push_back(best);
    }
    return out;
}

std::vector<GoalState> extract_goal_states(const std::vector<Diagnostic>& diagnostics,
                                           const std::vector<SourcePos>& sorry_sites, std::string_view file) {
    const auto matches = match_goal_sites(diagnostics, sorry_sites, file);
    std::vector<GoalState> out;
    out.reserve(sorry_sites.size());
    for (std::size_t i = 0; i < sorry_sites.size(); ++i) {
        out.push_back(GoalState{sorry_sites[i], matches[i] ? goal_text(diagnostics[*matches[i]].message)
                                                           : std::string(kNoGoalReported)});
    }
    return out;
}

}  // namespace proofloop::leanenv
