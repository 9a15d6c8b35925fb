#include "camp/lexer.hpp"

namespace camp::lex {

const LanguageProfile& brace_profile() {
    static const LanguageProfile p = [] {
        LanguageProfile b;
        b.name = "brace";
        b.extensions = {".c", ".cc", ".cpp", ".cxx", ".h", ".hh", ".hpp", ".java", ".swift",
                        ".js",  ".ts", ".go",  ".rs",  ".kt", ".cs", ".m",   ".mm"};
        b.line_comment = "//";
        b.block_comment_open = "/*";
        b.block_comment_close = "*/";
        b.hash_directives = true;
        b.keywords = {"if",       "else",     "for",     "while",    "do",        "switch",   "case",
                      "default",  "break",    "continue", "return",  "goto",      "try",      "catch",
                      "throw",    "throws",   "new",      "delete",  "this",      "self",     "super",
                      "true",     "false",    "null",     "nullptr", "nil",       "void",     "int",
                      "long",     "short",    "char",     "float",   "double",    "bool",     "boolean",
                      "unsigned", "signed",   "static",   "const",   "constexpr", "inline",   "virtual",
                      "override", "final",    "public",   "private", "protected", "internal", "sizeof",
                      "typename", "template", "operator", "extern",  "volatile",  "mutable",  "explicit",
                      "friend",   "noexcept", "auto",     "var",     "let",       "val",      "func",
                      "function", "fn",       "fun",      "class",   "struct",    "enum",     "union",
                      "interface", "protocol", "trait",   "extension", "typedef", "namespace", "import",
                      "include",  "using",    "use",      "package", "export",    "async",    "await",
                      "in",       "is",       "as",       "guard",   "defer",     "mut",      "pub",
                      "impl",     "where",    "instanceof", "abstract", "implements", "extends", "yield",
                      "string",   "size_t"};
        b.function_keywords = {"func", "function", "fn", "fun"};
        b.type_keywords = {"class", "struct", "enum", "union", "interface", "protocol", "trait"};
        b.import_keywords = {"import", "include", "using", "use", "package"};
        b.variable_keywords = {"var", "let", "val", "auto", "const", "mut"};
        b.transparent_block_keywords = {"namespace", "extern"};
        return b;
    }();
    return p;
}

const LanguageProfile& indent_profile() {
    static const LanguageProfile p = [] {
        LanguageProfile y;
        y.name = "indent";
        y.extensions = {".py"};
        y.indentation_blocks = true;
        y.line_comment = "#";
        y.triple_quoted_docstrings = true;
        y.keywords = {"def",    "class",  "return", "if",     "elif",   "else",  "for",   "while",
                      "try",    "except", "finally", "with",  "as",     "import", "from", "pass",
                      "break",  "continue", "raise", "yield", "lambda", "global", "nonlocal", "assert",
                      "del",    "in",     "is",     "not",    "and",    "or",    "None",  "True",
                      "False",  "async",  "await",  "self"};
        y.function_keywords = {"def"};
        y.type_keywords = {"class"};
        y.import_keywords = {"import", "from"};
        return y;
    }();
    return p;
}

const LanguageProfile& profile_by_name(std::string_view name) {
    if (name == "brace") return brace_profile();
    if (name == "indent") return indent_profile();
    throw std::invalid_argument("unknown language profile: " + std::string(name));
}

}  // namespace camp::lex
