#include "camp/lexer.hpp"

#include <array>
#include <cctype>

namespace camp::lex {

namespace {

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

constexpr std::array<std::string_view, 22> kTwoCharOps = {
    "::", "->", "==", "!=", "<=", ">=", "&&", "||", "=>", "+=", "-=",
    "*=", "/=", "%=", "|=", "&=", "^=", "++", "--", "<<", ">>", ":="};

class Lexer {
public:
    Lexer(std::string_view src, const LanguageProfile& profile) : src_(src), p_(profile) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (pos_ < src_.size()) {
            unsigned char c = static_cast<unsigned char>(src_[pos_]);
            if (c == '\0') throw LexError(where() + ": NUL byte in source");
            if (c == '\n') {
                advance(1);
                line_start_ = true;
                continue;
            }
            if (std::isspace(c)) {
                advance(1);
                continue;
            }
            const std::size_t begin = pos_;
            const std::uint32_t line = line_, col = col_;
            const bool first = line_start_;
            line_start_ = false;
            TokenKind kind;

            if (!p_.line_comment.empty() && starts_with(p_.line_comment)) {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
                kind = TokenKind::comment;
            } else if (!p_.block_comment_open.empty() && starts_with(p_.block_comment_open)) {
                auto close = src_.find(p_.block_comment_close, pos_ + p_.block_comment_open.size());
                if (close == std::string_view::npos) throw LexError(where() + ": unterminated block comment");
                advance(close + p_.block_comment_close.size() - pos_);
                kind = TokenKind::comment;
            } else if (p_.triple_quoted_docstrings && (starts_with("\"\"\"") || starts_with("'''"))) {
                const std::string_view delim = src_.substr(pos_, 3);
                auto close = src_.find(delim, pos_ + 3);
                if (close == std::string_view::npos) throw LexError(where() + ": unterminated triple-quoted string");
                advance(close + 3 - pos_);
                kind = TokenKind::comment;
            } else if (c == '"' || c == '`' || (c == '\'' && p_.indentation_blocks)) {
                lex_string(static_cast<char>(c), c == '`');
                kind = TokenKind::string;
            } else if (c == '\'') {
                // Char literal, or a lone quote (lifetimes, apostrophes) when unterminated.
                kind = try_char_literal() ? TokenKind::string : TokenKind::punct;
                if (kind == TokenKind::punct) advance(1);
            } else if (p_.hash_directives && c == '#' && first) {
                advance(1);
                kind = TokenKind::directive;
            } else if (ident_start(c)) {
                while (pos_ < src_.size() && ident_char(static_cast<unsigned char>(src_[pos_]))) advance(1);
                std::string_view word = src_.substr(begin, pos_ - begin);
                if (p_.indentation_blocks && pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') &&
                    is_string_prefix(word)) {
                    lex_string(src_[pos_], false);
                    kind = TokenKind::string;
                } else {
                    kind = p_.keywords.contains(word) ? TokenKind::keyword : TokenKind::identifier;
                }
            } else if (std::isdigit(c)) {
                while (pos_ < src_.size() &&
                       (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' || src_[pos_] == '.'))
                    advance(1);
                kind = TokenKind::number;
            } else {
                std::size_t len = 1;
                for (auto op : kTwoCharOps) {
                    if (starts_with(op)) {
                        len = 2;
                        break;
                    }
                }
                advance(len);
                kind = TokenKind::punct;
            }

            Token t;
            t.kind = kind;
            t.text = std::string(src_.substr(begin, pos_ - begin));
            t.begin = begin;
            t.end = pos_;
            t.line = line;
            t.col = col;
            t.end_line = line_;
            t.end_col = col_;
            t.starts_line = first;
            out.push_back(std::move(t));
        }
        return out;
    }

private:
    static bool is_string_prefix(std::string_view w) {
        if (w.size() > 2) return false;
        for (char ch : w) {
            char l = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (l != 'r' && l != 'b' && l != 'f' && l != 'u') return false;
        }
        return true;
    }

    bool starts_with(std::string_view s) const { return src_.substr(pos_, s.size()) == s; }

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 0;
            } else {
                ++col_;
            }
        }
    }

    void lex_string(char quote, bool multiline) {
        const std::string start = where();
        advance(1);
        while (pos_ < src_.size()) {
            char ch = src_[pos_];
            if (ch == '\\') {
                advance(2);
                continue;
            }
            if (ch == quote) {
                advance(1);
                return;
            }
            if (ch == '\n' && !multiline) break;
            advance(1);
        }
        throw LexError(start + ": unterminated string literal");
    }

    bool try_char_literal() {
        std::size_t i = pos_ + 1;
        while (i < src_.size() && src_[i] != '\n') {
            if (src_[i] == '\\') {
                i += 2;
                continue;
            }
            if (src_[i] == '\'') {
                // Only short literals count; `'a' ... '` across a long span is not a char.
                if (i - pos_ > 8) return false;
                advance(i + 1 - pos_);
                return true;
            }
            ++i;
        }
        return false;
    }

    std::string where() const { return std::to_string(line_ + 1) + ":" + std::to_string(col_ + 1); }

    std::string_view src_;
    const LanguageProfile& p_;
    std::size_t pos_ = 0;
    std::uint32_t line_ = 0;
    std::uint32_t col_ = 0;
    bool line_start_ = true;
};

}  // namespace

std::vector<Token> tokenize(std::string_view source, const LanguageProfile& profile) {
    return Lexer(source, profile).run();
}

std::vector<std::string> words(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto c = static_cast<unsigned char>(text[i]);
        if (std::isalpha(c) || c == '_') {
            std::size_t j = i + 1;
            while (j < text.size() && (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

}  // namespace camp::lex
