#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "camp/dcsi_index.hpp"
#include "camp/lexer.hpp"

namespace camp::dcsi::detail {

struct ParsedSymbol {
    std::string name;
    SymbolKind kind = SymbolKind::other;
    Span span;
    std::size_t begin_byte = 0;
    std::vector<std::string> comment_words;  // comment symbols only
};

struct UnitRange {
    std::uint32_t start_line = 0;
    std::uint32_t end_line = 0;  // exclusive
    std::size_t begin_byte = 0;
    std::size_t end_byte = 0;
    std::string declaration;
};

struct ParsedFile {
    std::vector<ParsedSymbol> symbols;
    std::vector<UnitRange> units;  // partitions the file's lines
};

/// Lexes and classifies a file. Throws lex::LexError when unparseable.
ParsedFile parse_source(std::string_view text, const lex::LanguageProfile& profile);

bool is_definition(SymbolKind k) noexcept;
bool is_reference(SymbolKind k) noexcept;

}  // namespace camp::dcsi::detail
