#include "proofloop/lean/lexer.hpp"

#include <string>
#include <utility>

namespace proofloop::lean {

namespace {

// Decodes one UTF-8 sequence at `pos`; malformed bytes decode as themselves.
std::pair<char32_t, std::size_t> decode(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {b0, 1};
    }
    if (pos + len > s.size()) return {b0, 1};
    for (std::size_t i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) return {b0, 1};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len};
}

bool is_letter_like(char32_t c) {
    return (0x3b1 <= c && c <= 0x3c9 && c != 0x3bb) ||                // lower greek, no lambda
           (0x391 <= c && c <= 0x3A9 && c != 0x3A0 && c != 0x3A3) ||  // upper greek, no Pi/Sigma
           (0x3ca <= c && c <= 0x3fb) ||                              // coptic
           (0x1f00 <= c && c <= 0x1ffe) ||                            // polytonic greek
           (0x2100 <= c && c <= 0x214f) ||                            // letterlike block
           (0x1d49c <= c && c <= 0x1d59f);                            // script/fraktur/double-struck
}

bool is_subscript_alnum(char32_t c) {
    return (0x2080 <= c && c <= 0x2089) || (0x2090 <= c && c <= 0x209c) || (0x1d62 <= c && c <= 0x1d6a);
}

bool is_ascii_alpha(char32_t c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (pos_ < src_.size()) {
            const std::size_t start = pos_;
            const TokenKind kind = scan();
            out.push_back(Token{kind, start, pos_, line_, column_});
            advance_position(start, pos_);
        }
        return out;
    }

private:
    char at(std::size_t p) const { return p < src_.size() ? src_[p] : '\0'; }
    bool starts_with(std::string_view lit) const { return src_.substr(pos_, lit.size()) == lit; }

    void advance_position(std::size_t from, std::size_t to) {
        for (std::size_t i = from; i < to; ++i) {
            const auto b = static_cast<unsigned char>(src_[i]);
            if (b == '\n') {
                ++line_;
                column_ = 0;
            } else if ((b & 0xC0) != 0x80) {
                ++column_;
            }
        }
    }

    TokenKind scan() {
        const char c = src_[pos_];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            while (pos_ < src_.size()) {
                const char d = src_[pos_];
                if (d != ' ' && d != '\t' && d != '\r' && d != '\n') break;
                ++pos_;
            }
            return TokenKind::whitespace;
        }
        if (starts_with("--")) {
            while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            return TokenKind::line_comment;
        }
        if (starts_with("/-")) {
            scan_block_comment();
            return TokenKind::block_comment;
        }
        if (c == '"') {
            scan_string();
            return TokenKind::string;
        }
        if (c == 'r' && raw_string_ahead()) {
            scan_raw_string();
            return TokenKind::string;
        }
        if (c == '\'' && scan_char_literal()) return TokenKind::char_literal;
        if (c == '#' && pos_ + 1 < src_.size()) {
            if (is_id_first(decode(src_, pos_ + 1).first)) {
                ++pos_;
                scan_identifier_component();
                return TokenKind::command;
            }
        }
        if (is_digit(static_cast<unsigned char>(c))) {
            scan_number();
            return TokenKind::number;
        }
        const auto [cp, len] = decode(src_, pos_);
        if (is_id_first(cp) || cp == U'«') {
            scan_identifier();
            return TokenKind::identifier;
        }
        if (starts_with(":=")) {
            pos_ += 2;
            return TokenKind::symbol;
        }
        pos_ += len;
        return TokenKind::symbol;
    }

    void scan_block_comment() {
        int depth = 0;
        while (pos_ < src_.size()) {
            if (starts_with("/-")) {
                ++depth;
                pos_ += 2;
            } else if (starts_with("-/")) {
                pos_ += 2;
                if (--depth == 0) return;
            } else {
                ++pos_;
            }
        }
    }

    void scan_string() {
        ++pos_;
        while (pos_ < src_.size()) {
            const char d = src_[pos_];
            if (d == '\\') {
                pos_ += 2;
                continue;
            }
            ++pos_;
            if (d == '"') break;
        }
        if (pos_ > src_.size()) pos_ = src_.size();
    }

    bool raw_string_ahead() const {
        std::size_t p = pos_ + 1;
        while (at(p) == '#') ++p;
        return at(p) == '"';
    }

    void scan_raw_string() {
        ++pos_;
        std::size_t hashes = 0;
        while (at(pos_) == '#') {
            ++hashes;
            ++pos_;
        }
        ++pos_;  // opening quote
        const std::string closing = "\"" + std::string(hashes, '#');
        const auto end = src_.find(closing, pos_);
        pos_ = end == std::string_view::npos ? src_.size() : end + closing.size();
    }

    // 'a', '\n', '\x41', '\u{03B1}'. Returns false (consuming nothing) when the
    // quote is not a character literal, e.g. a prime in `h'`.
    bool scan_char_literal() {
        std::size_t p = pos_ + 1;
        if (p >= src_.size()) return false;
        if (src_[p] == '\\') {
            const auto close = src_.find('\'', p + 2);
            if (close == std::string_view::npos || close - p > 10) return false;
            pos_ = close + 1;
            return true;
        }
        const auto [cp, len] = decode(src_, p);
        if (cp == '\n' || cp == '\'') return false;
        if (at(p + len) != '\'') return false;
        pos_ = p + len + 1;
        return true;
    }

    void scan_number() {
        while (pos_ < src_.size()) {
            const auto d = static_cast<unsigned char>(src_[pos_]);
            if (is_digit(d) || is_ascii_alpha(d) || d == '_') {
                ++pos_;
            } else if (d == '.' && is_digit(static_cast<unsigned char>(at(pos_ + 1)))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    void scan_identifier_component() {
        if (starts_with("«")) {
            const auto close = src_.find("»", pos_);
            pos_ = close == std::string_view::npos ? src_.size() : close + std::string_view("»").size();
            return;
        }
        bool first = true;
        while (pos_ < src_.size()) {
            const auto [cp, len] = decode(src_, pos_);
            if (first ? !is_id_first(cp) : !is_id_rest(cp)) break;
            pos_ += len;
            first = false;
        }
    }

    void scan_identifier() {
        scan_identifier_component();
        while (at(pos_) == '.' && pos_ + 1 < src_.size()) {
            const auto [cp, len] = decode(src_, pos_ + 1);
            if (!is_id_first(cp) && cp != U'«') break;
            ++pos_;
            scan_identifier_component();
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int column_ = 0;
};

}  // namespace

bool is_id_first(char32_t c) { return is_ascii_alpha(c) || c == '_' || is_letter_like(c); }

bool is_id_rest(char32_t c) {
    return is_id_first(c) || is_digit(c) || c == '\'' || c == '!' || c == '?' || is_subscript_alnum(c);
}

std::vector<Token> lex(std::string_view src) { return Lexer(src).run(); }

}  // namespace proofloop::lean
