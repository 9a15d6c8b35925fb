#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace camp::lex {

enum class TokenKind : std::uint8_t { identifier, keyword, number, string, punct, comment, directive };

struct Token {
    TokenKind kind;
    std::string text;
    std::size_t begin = 0;  // byte offsets into the source, [begin, end)
    std::size_t end = 0;
    std::uint32_t line = 0;  // 0-based
    std::uint32_t col = 0;   // 0-based byte column
    std::uint32_t end_line = 0;
    std::uint32_t end_col = 0;  // exclusive
    bool starts_line = false;   // first token on its physical line
};

/// Lexical and declaration-detection rules for one family of languages.
struct LanguageProfile {
    std::string name;
    std::vector<std::string> extensions;  // with leading dot
    bool indentation_blocks = false;      // python-like blocks instead of braces
    std::string line_comment;
    std::string block_comment_open;
    std::string block_comment_close;
    bool triple_quoted_docstrings = false;
    bool hash_directives = false;  // `#include`-style preprocessor lines
    std::set<std::string, std::less<>> keywords;
    std::set<std::string, std::less<>> function_keywords;
    std::set<std::string, std::less<>> type_keywords;
    std::set<std::string, std::less<>> import_keywords;
    std::set<std::string, std::less<>> variable_keywords;
    std::set<std::string, std::less<>> transparent_block_keywords;  // namespace, extern
};

const LanguageProfile& brace_profile();
const LanguageProfile& indent_profile();
/// Throws std::invalid_argument for unknown names.
const LanguageProfile& profile_by_name(std::string_view name);

struct LexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tokenizes `source`. Throws LexError on NUL bytes, unterminated block
/// comments and unterminated string literals.
std::vector<Token> tokenize(std::string_view source, const LanguageProfile& profile);

/// Identifier-like words inside free text (comments, queries).
std::vector<std::string> words(std::string_view text);

}  // namespace camp::lex
