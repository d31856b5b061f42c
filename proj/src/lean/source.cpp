#include "proofloop/lean/source.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/lean/lexer.hpp"

#include <algorithm>
#include <array>

namespace proofloop::lean {

namespace {

constexpr std::string_view kCommandKeywords[] = {
    "theorem",   "lemma",     "def",       "abbrev",        "example",  "instance",
    "structure", "class",     "inductive", "noncomputable", "private",  "protected",
    "open",      "namespace", "section",   "end",           "variable", "universe",
    "set_option", "attribute", "macro",    "syntax",        "notation", "local",
    "scoped",    "axiom",     "opaque",    "mutual",        "elab",     "macro_rules",
    "infix",     "infixl",    "infixr",    "prefix",        "postfix",  "import",
};

constexpr std::string_view kModifiers[] = {
    "private", "protected", "noncomputable", "nonrec", "unsafe", "partial",
};

bool is_command_keyword(std::string_view word) {
    return std::find(std::begin(kCommandKeywords), std::end(kCommandKeywords), word) != std::end(kCommandKeywords);
}

bool is_modifier(std::string_view word) {
    return std::find(std::begin(kModifiers), std::end(kModifiers), word) != std::end(kModifiers);
}

bool is_open_bracket(std::string_view s) {
    return s == "(" || s == "[" || s == "{" || s == "⟨" || s == "⦃" || s == "⟦";
}

bool is_close_bracket(std::string_view s) {
    return s == ")" || s == "]" || s == "}" || s == "⟩" || s == "⦄" || s == "⟧";
}

// Index of the next code token after `i`, or tokens.size().
std::size_t next_code(const std::vector<Token>& tokens, std::size_t i) {
    for (++i; i < tokens.size(); ++i) {
        if (tokens[i].is_code()) return i;
    }
    return tokens.size();
}

}  // namespace

SourcePos position_of(std::string_view src, std::size_t offset) {
    SourcePos pos{1, 0};
    offset = std::min(offset, src.size());
    for (std::size_t i = 0; i < offset; ++i) {
        const auto b = static_cast<unsigned char>(src[i]);
        if (b == '\n') {
            ++pos.line;
            pos.column = 0;
        } else if ((b & 0xC0) != 0x80) {
            ++pos.column;
        }
    }
    return pos;
}

std::optional<TheoremHeader> find_theorem_header(std::string_view src) {
    const auto tokens = lex(src);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& kw = tokens[i];
        if (kw.kind != TokenKind::identifier) continue;
        const auto word = kw.text(src);
        if (word != "theorem" && word != "lemma") continue;
        const std::size_t name_idx = next_code(tokens, i);
        if (name_idx == tokens.size() || tokens[name_idx].kind != TokenKind::identifier) continue;

        TheoremHeader header;
        header.keyword = std::string(word);
        header.name = std::string(tokens[name_idx].text(src));
        std::size_t end = src.size();
        int depth = 0;
        for (std::size_t j = name_idx + 1; j < tokens.size(); ++j) {
            const Token& t = tokens[j];
            if (!t.is_code()) continue;
            const auto text = t.text(src);
            if (t.kind == TokenKind::symbol) {
                if (is_open_bracket(text)) {
                    ++depth;
                } else if (is_close_bracket(text)) {
                    depth = std::max(0, depth - 1);
                } else if (depth == 0 && text == ":=") {
                    end = t.begin;
                    break;
                }
            } else if (t.kind == TokenKind::identifier && depth == 0 && (text == "by" || text == "where")) {
                end = t.begin;
                break;
            }
        }
        while (end > kw.begin && (src[end - 1] == ' ' || src[end - 1] == '\t' || src[end - 1] == '\n' ||
                                  src[end - 1] == '\r')) {
            --end;
        }
        header.statement = Span{kw.begin, end};
        return header;
    }
    return std::nullopt;
}

std::string normalized_statement(std::string_view theorem_text) {
    const auto header = find_theorem_header(theorem_text);
    if (!header) throw MalformedTheorem("no theorem or lemma header found");
    const auto statement = theorem_text.substr(header->statement.begin, header->statement.size());

    std::string out;
    bool pending_space = false;
    for (const Token& t : lex(statement)) {
        if (!t.is_code()) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.append(t.text(statement));
    }
    return out;
}

std::optional<Span> find_declaration(std::string_view file, std::string_view name) {
    const auto tokens = lex(file);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& kw = tokens[i];
        if (kw.kind != TokenKind::identifier) continue;
        const auto word = kw.text(file);
        if (word != "theorem" && word != "lemma") continue;
        const std::size_t name_idx = next_code(tokens, i);
        if (name_idx == tokens.size() || tokens[name_idx].text(file) != name) continue;

        // Leading modifiers on the same line belong to the declaration.
        std::size_t begin_idx = i;
        for (std::size_t j = i; j > 0; --j) {
            const Token& prev = tokens[j - 1];
            if (prev.kind == TokenKind::whitespace && prev.text(file).find('\n') == std::string_view::npos) continue;
            if (prev.kind == TokenKind::identifier && prev.line == kw.line && is_modifier(prev.text(file))) {
                begin_idx = j - 1;
                continue;
            }
            break;
        }

        std::size_t end = file.size();
        for (std::size_t j = name_idx + 1; j < tokens.size(); ++j) {
            const Token& t = tokens[j];
            if (t.column != 0 || t.kind == TokenKind::whitespace) continue;
            const auto text = t.text(file);
            const bool boundary = t.kind == TokenKind::line_comment || t.kind == TokenKind::block_comment ||
                                  t.kind == TokenKind::command || text == "@" ||
                                  (t.kind == TokenKind::identifier && is_command_keyword(text));
            if (boundary) {
                end = t.begin;
                break;
            }
        }
        while (end > tokens[begin_idx].begin &&
               (file[end - 1] == ' ' || file[end - 1] == '\t' || file[end - 1] == '\n' || file[end - 1] == '\r')) {
            --end;
        }
        return Span{tokens[begin_idx].begin, end};
    }
    return std::nullopt;
}

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t count = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos; pos = hay.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

}  // namespace proofloop::lean
