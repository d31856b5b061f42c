#include "proofloop/review/checks.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/lean/lexer.hpp"

#include <algorithm>
#include <set>

namespace proofloop::review {

namespace {

using lean::Token;
using lean::TokenKind;

struct HeaderInfo {
    std::set<std::string> imports;
    std::set<std::string> opened;
    std::size_t import_block_end = 0;  // offset just past the last import line
    bool has_imports = false;
};

bool is_name_stop(std::string_view word) {
    return word == "in" || word == "hiding" || word == "renaming";
}

HeaderInfo scan_header(std::string_view file) {
    HeaderInfo info;
    const auto tokens = lean::lex(file);
    bool in_import_block = true;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (!t.is_code()) continue;
        const auto text = t.text(file);
        const bool at_line_start = t.column == 0;

        if (in_import_block && t.kind == TokenKind::identifier && text == "import" && at_line_start) {
            std::size_t j = i + 1;
            for (; j < tokens.size(); ++j) {
                const Token& n = tokens[j];
                if (n.kind == TokenKind::whitespace) {
                    if (n.text(file).find('\n') != std::string_view::npos) break;
                    continue;
                }
                if (n.kind != TokenKind::identifier) break;
                info.imports.insert(std::string(n.text(file)));
                info.import_block_end = n.end;
            }
            info.has_imports = true;
            i = j - 1;
            continue;
        }
        in_import_block = false;

        if (t.kind == TokenKind::identifier && text == "open" && at_line_start) {
            std::vector<std::string> names;
            bool local = false;
            std::size_t j = i + 1;
            for (; j < tokens.size(); ++j) {
                const Token& n = tokens[j];
                if (n.kind == TokenKind::whitespace) {
                    if (n.text(file).find('\n') != std::string_view::npos) break;
                    continue;
                }
                if (n.kind != TokenKind::identifier) break;
                const auto word = n.text(file);
                if (word == "in") {
                    local = true;
                    break;
                }
                if (word == "scoped") continue;
                if (is_name_stop(word)) break;
                names.emplace_back(word);
            }
            if (!local) info.opened.insert(names.begin(), names.end());
            i = j - 1;
        }
    }
    if (info.has_imports) {
        const auto nl = file.find('\n', info.import_block_end);
        info.import_block_end = nl == std::string_view::npos ? file.size() : nl + 1;
    }
    return info;
}

bool is_placeholder(const Token& t, std::string_view src) {
    if (t.kind != TokenKind::identifier) return false;
    const auto text = t.text(src);
    return text == "sorry" || text == "admit";
}

std::string line_excerpt(std::string_view src, std::size_t offset) {
    const auto b = src.rfind('\n', offset == 0 ? 0 : offset - 1);
    const std::size_t begin = (b == std::string_view::npos || offset == 0) ? 0 : b + 1;
    auto end = src.find('\n', offset);
    if (end == std::string_view::npos) end = src.size();
    auto line = src.substr(begin, end - begin);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    line = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
    return std::string(line);
}

}  // namespace

CandidateFile assemble_candidate(const TheoremTask& task, const ProofProposal& proposal) {
    const std::string& file = task.file_content;
    if (task.target_theorem.empty() || lean::count_occurrences(file, task.target_theorem) != 1) {
        throw TargetNotFound("target theorem of task '" + task.id + "' not found exactly once in its file");
    }
    const std::size_t target_begin = file.find(task.target_theorem);
    const std::size_t target_end = target_begin + task.target_theorem.size();

    const HeaderInfo info = scan_header(file);
    std::string header;
    for (const auto& name : normalize_names(proposal.imports, "import")) {
        if (!info.imports.count(name)) header += "import " + name + "\n";
    }
    std::string open_line;
    for (const auto& name : normalize_names(proposal.opens, "open")) {
        if (!info.opened.count(name)) open_line += (open_line.empty() ? "" : " ") + name;
    }
    if (!open_line.empty()) header += "open " + open_line + "\n";

    std::size_t insert_at = info.has_imports ? info.import_block_end : 0;
    if (insert_at > target_begin) insert_at = target_begin;
    std::string prefix(file.substr(0, insert_at));
    if (!header.empty() && !prefix.empty() && prefix.back() != '\n') header.insert(header.begin(), '\n');

    CandidateFile c;
    c.source.reserve(file.size() + header.size() + proposal.updated_theorem.size());
    c.source += prefix;
    c.source += header;
    c.source.append(file, insert_at, target_begin - insert_at);
    const std::size_t span_begin = c.source.size();
    c.source += proposal.updated_theorem;
    const std::size_t span_end = c.source.size();
    c.source.append(file, target_end, std::string::npos);
    c.header_insertion = lean::Span{insert_at, insert_at + header.size()};
    c.target_span = lean::Span{span_begin, span_end};
    return c;
}

StrippedSource strip_sorries(std::string_view source, lean::Span region) {
    region.end = std::min(region.end, source.size());
    region.begin = std::min(region.begin, region.end);
    StrippedSource out;
    out.source.reserve(source.size());
    std::size_t copied = 0;
    std::size_t removed_in_region = 0;
    for (const Token& t : lean::lex(source)) {
        if (t.begin < region.begin || t.end > region.end || !is_placeholder(t, source)) continue;
        out.sorry_sites.push_back(SourcePos{t.line, t.column});
        out.source.append(source.substr(copied, t.begin - copied));
        copied = t.end;
        removed_in_region += t.end - t.begin;
    }
    out.source.append(source.substr(copied));
    out.region = lean::Span{region.begin, region.end - removed_in_region};
    return out;
}

StrippedSource strip_sorries(std::string_view source) { return strip_sorries(source, lean::Span{0, source.size()}); }

StrippedSource strip_sorries(CandidateFile& candidate) {
    auto out = strip_sorries(candidate.source, candidate.target_span);
    candidate.sorry_sites = out.sorry_sites;
    return out;
}

bool LoopholeReport::has(std::string_view kind) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.kind == kind; });
}

LoopholeReport detect_loopholes(std::string_view source, const std::vector<std::string>& denylist) {
    LoopholeReport report;
    for (const Token& t : lean::lex(source)) {
        if (t.kind != TokenKind::identifier && t.kind != TokenKind::command) continue;
        const auto text = t.text(source);
        for (const auto& entry : denylist) {
            if (text != entry) continue;
            const bool command_entry = !entry.empty() && entry.front() == '#';
            if (command_entry != (t.kind == TokenKind::command)) continue;
            report.violations.push_back(
                Violation{entry == "axiom" ? std::string(kAxiomIntroduction) : entry, t.line, line_excerpt(source, t.begin)});
            break;
        }
    }
    return report;
}

std::string loophole_scan_source(const ProofProposal& proposal) {
    std::string out;
    for (const auto& name : normalize_names(proposal.imports, "import")) out += "import " + name + "\n";
    for (const auto& name : normalize_names(proposal.opens, "open")) out += "open " + name + "\n";
    out += proposal.updated_theorem;
    return out;
}

bool check_statement_preserved(std::string_view original_theorem, std::string_view updated_theorem) {
    return lean::normalized_statement(original_theorem) == lean::normalized_statement(updated_theorem);
}

bool no_sorry_in(std::string_view theorem_text) {
    const auto tokens = lean::lex(theorem_text);
    return std::none_of(tokens.begin(), tokens.end(), [&](const Token& t) { return is_placeholder(t, theorem_text); });
}

}  // namespace proofloop::review
