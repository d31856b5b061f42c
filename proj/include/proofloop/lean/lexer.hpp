#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace proofloop::lean {

enum class TokenKind {
    identifier,  // possibly dotted, may end in ? or ! (e.g. `apply?`, `Nat.add_zero`)
    command,     // `#exit`, `#check`, ...
    number,
    string,
    char_literal,
    line_comment,
    block_comment,  // includes doc comments, nests
    symbol,
    whitespace,
};

struct Token {
    TokenKind kind;
    std::size_t begin;  // byte offsets into the source
    std::size_t end;
    int line;    // 1-based
    int column;  // 0-based, in code points

    std::string_view text(std::string_view src) const { return src.substr(begin, end - begin); }
    bool is_code() const {
        return kind != TokenKind::line_comment && kind != TokenKind::block_comment &&
               kind != TokenKind::whitespace;
    }
};

// Splits Lean 4 source into tokens covering every byte. Never throws: an
// unterminated comment or string extends to the end of input.
std::vector<Token> lex(std::string_view src);

// Lean's identifier character classes, on decoded code points.
bool is_id_first(char32_t c);
bool is_id_rest(char32_t c);

}  // namespace proofloop::lean
