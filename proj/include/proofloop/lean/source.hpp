#pragma once

#include "proofloop/core/types.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace proofloop::lean {

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const Span&) const = default;
};

// Position of byte `offset` in `src`: 1-based line, 0-based code-point column.
SourcePos position_of(std::string_view src, std::size_t offset);

struct TheoremHeader {
    std::string keyword;  // theorem | lemma
    std::string name;
    Span statement;       // from the keyword up to (excluding) the `:=`/`by`/`where` starting the proof
};

// First theorem/lemma header in `src`; nullopt if there is none.
std::optional<TheoremHeader> find_theorem_header(std::string_view src);

// The statement with comments removed and whitespace collapsed; throws
// MalformedTheorem when no header is present.
std::string normalized_statement(std::string_view theorem_text);

// Source text of the top-level declaration `name` (theorem/lemma), from its
// keyword (including modifiers and attributes on the same command) to the start
// of the next top-level command, trailing whitespace trimmed.
std::optional<Span> find_declaration(std::string_view file, std::string_view name);

// Number of non-overlapping occurrences of `needle` in `hay`.
std::size_t count_occurrences(std::string_view hay, std::string_view needle);

}  // namespace proofloop::lean
