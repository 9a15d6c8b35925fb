#include "file_parser.hpp"

#include <algorithm>
#include <map>
#include <optional>

namespace camp::dcsi::detail {

using lex::LanguageProfile;
using lex::Token;
using lex::TokenKind;

bool is_definition(SymbolKind k) noexcept {
    return k == SymbolKind::function || k == SymbolKind::type || k == SymbolKind::variable;
}

bool is_reference(SymbolKind k) noexcept { return k == SymbolKind::other || k == SymbolKind::import; }

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);

const std::set<std::string, std::less<>> kPrimitiveTypes = {
    "void", "int",    "long", "short", "char", "float", "double", "bool", "boolean", "unsigned",
    "signed", "auto", "string", "size_t", "var", "let",  "val",   "const", "mut"};

const std::set<std::string, std::less<>> kNotBeforeFunctionName = {
    "return", "new", "else", "case", "throw", "await", "yield", "in",    "is",
    "as",     "delete", "sizeof", "if", "while", "for", "switch", "catch", "do"};

const std::set<std::string, std::less<>> kPunctBeforeFunctionName = {"*", "&", "&&", ">", "::", "~",
                                                                     "{", "}", ";",  ")"};

struct Decl {
    std::size_t name_tok = npos;  // index into tokens
    std::size_t start_tok = npos;
    std::size_t end_tok = npos;  // inclusive
    SymbolKind kind = SymbolKind::other;
    bool top_level = false;
};

struct Classified {
    std::vector<SymbolKind> kinds;         // per token, meaningful for identifiers
    std::map<std::size_t, Decl> decls;     // keyed by name token
};

// ---------------------------------------------------------------------------
// Brace languages

class BraceClassifier {
public:
    BraceClassifier(const std::vector<Token>& toks, const LanguageProfile& p) : toks_(toks), p_(p) {
        for (std::size_t i = 0; i < toks_.size(); ++i)
            if (toks_[i].kind != TokenKind::comment) sig_.push_back(i);
        match_.assign(sig_.size(), npos);
        depth_.assign(sig_.size(), 0);
        in_import_.assign(sig_.size(), false);
    }

    Classified run() {
        compute_matches_and_depth();
        mark_imports();
        Classified out;
        out.kinds.assign(toks_.size(), SymbolKind::other);
        for (std::size_t s = 0; s < sig_.size(); ++s) {
            const Token& t = tok(s);
            if (t.kind != TokenKind::identifier) continue;
            SymbolKind kind = classify(s, out);
            out.kinds[sig_[s]] = kind;
        }
        return out;
    }

private:
    const Token& tok(std::size_t s) const { return toks_[sig_[s]]; }
    std::string_view text(std::size_t s) const { return s < sig_.size() ? std::string_view(tok(s).text) : ""; }

    void compute_matches_and_depth() {
        std::vector<std::size_t> stack;
        std::vector<bool> transparent;
        int depth = 0;
        for (std::size_t s = 0; s < sig_.size(); ++s) {
            depth_[s] = depth;
            const Token& t = tok(s);
            if (t.kind != TokenKind::punct || t.text.size() != 1) continue;
            char c = t.text[0];
            if (c == '(' || c == '[' || c == '{') {
                stack.push_back(s);
                bool tr = c == '{' && opens_transparent_block(s);
                transparent.push_back(tr);
                if (c == '{' && !tr) ++depth;
            } else if (c == ')' || c == ']' || c == '}') {
                char open = c == ')' ? '(' : (c == ']' ? '[' : '{');
                // Pop until the matching opener; tolerates unbalanced input.
                for (std::size_t k = stack.size(); k-- > 0;) {
                    if (tok(stack[k]).text[0] == open) {
                        while (stack.size() > k + 1) {
                            if (tok(stack.back()).text[0] == '{' && !transparent.back()) --depth;
                            stack.pop_back();
                            transparent.pop_back();
                        }
                        match_[stack[k]] = s;
                        match_[s] = stack[k];
                        if (open == '{' && !transparent.back()) --depth;
                        stack.pop_back();
                        transparent.pop_back();
                        break;
                    }
                }
            }
        }
    }

    bool opens_transparent_block(std::size_t s) const {
        std::size_t k = s;
        while (k-- > 0) {
            const Token& t = tok(k);
            if (p_.transparent_block_keywords.contains(t.text)) return true;
            if (t.kind == TokenKind::identifier || t.kind == TokenKind::string || t.text == "::" || t.text == ".")
                continue;
            return false;
        }
        return false;
    }

    void mark_imports() {
        for (std::size_t s = 0; s < sig_.size(); ++s) {
            const Token& t = tok(s);
            bool directive = t.kind == TokenKind::directive && s + 1 < sig_.size() &&
                             (text(s + 1) == "include" || text(s + 1) == "import");
            bool statement = t.kind == TokenKind::keyword && p_.import_keywords.contains(t.text) &&
                             (t.starts_line || s == 0 || text(s - 1) == ";" || text(s - 1) == "}");
            if (!directive && !statement) continue;
            std::size_t k = s;
            for (; k < sig_.size(); ++k) {
                if (k > s && tok(k).line != t.line && (directive || !continues_statement(k))) break;
                in_import_[k] = true;
                if (!directive && text(k) == ";") break;
            }
            s = (k < sig_.size() && !in_import_[k]) ? k - 1 : k;
        }
    }

    // A token on a later line still belongs to a `;`-terminated import when the
    // statement has not been closed yet and the language uses semicolons here.
    bool continues_statement(std::size_t k) const {
        return k > 0 && (text(k - 1) == "," || text(k - 1) == "{");
    }

    SymbolKind classify(std::size_t s, Classified& out) {
        if (in_import_[s]) return SymbolKind::import;
        std::string_view prev = s > 0 ? text(s - 1) : std::string_view{};
        std::string_view next = text(s + 1);

        if (s > 0 && p_.type_keywords.contains(prev)) {
            std::size_t body = find_body(s + 1);
            if (body != npos) record_decl(s, body, SymbolKind::type, out);
            return SymbolKind::type;
        }
        if (s > 0 && p_.function_keywords.contains(prev)) {
            std::size_t body = find_body(s + 1);
            if (body != npos) record_decl(s, body, SymbolKind::function, out);
            return SymbolKind::function;
        }
        if (next == "(" && can_precede_function_name(s)) {
            std::size_t body = find_body(s + 1);
            if (body != npos) {
                record_decl(s, body, SymbolKind::function, out);
                return SymbolKind::function;
            }
        }
        if (s > 0 && p_.variable_keywords.contains(prev)) return SymbolKind::variable;
        if (next == ":=") return SymbolKind::variable;
        if (s > 0 && (next == "=" || next == ";" || next == "," || next == ")" || next == ":")) {
            const Token& p = tok(s - 1);
            bool type_like = p.kind == TokenKind::identifier || kPrimitiveTypes.contains(p.text);
            if (!type_like && (p.text == "*" || p.text == "&") && s > 1) {
                const Token& pp = tok(s - 2);
                type_like = pp.kind == TokenKind::identifier || kPrimitiveTypes.contains(pp.text);
            }
            if (type_like) return SymbolKind::variable;
        }
        return SymbolKind::other;
    }

    bool can_precede_function_name(std::size_t s) const {
        if (s == 0) return true;
        const Token& p = tok(s - 1);
        if (p.kind == TokenKind::identifier) return true;
        if (p.kind == TokenKind::keyword) return !kNotBeforeFunctionName.contains(p.text);
        if (p.kind == TokenKind::punct) return kPunctBeforeFunctionName.contains(p.text);
        return false;
    }

    // Scans forward from `s` for the opening brace of a body, skipping balanced
    // parentheses and brackets. Returns npos at `;`, `}` or `=`.
    std::size_t find_body(std::size_t s) const {
        for (std::size_t k = s; k < sig_.size(); ++k) {
            std::string_view t = text(k);
            if (t == "(" || t == "[") {
                if (match_[k] == npos) return npos;
                k = match_[k];
                continue;
            }
            if (t == "{") return match_[k] == npos ? npos : k;
            if (t == ";" || t == "}" || t == "=") return npos;
        }
        return npos;
    }

    void record_decl(std::size_t name_s, std::size_t body_s, SymbolKind kind, Classified& out) {
        Decl d;
        d.name_tok = sig_[name_s];
        d.start_tok = sig_[statement_start(name_s)];
        d.end_tok = sig_[match_[body_s]];
        d.kind = kind;
        d.top_level = depth_[name_s] == 0;
        out.decls[d.name_tok] = d;
    }

    std::size_t statement_start(std::size_t s) const {
        std::size_t start = s;
        while (start > 0) {
            std::size_t k = start - 1;
            const Token& t = tok(k);
            if (t.text == ";" || t.text == "{" || t.text == "}" || in_import_[k]) break;
            if (t.line != tok(start).line && !joins_next_line(k)) break;
            start = k;
        }
        return start;
    }

    // Whether a declaration header may continue from token `k` onto the next line.
    bool joins_next_line(std::size_t k) const {
        const Token& t = tok(k);
        if (t.text == ">" || t.text == "," || t.text == "(") return true;
        // Annotation or template lines: find the first token of k's line.
        std::size_t first = k;
        while (first > 0 && tok(first - 1).line == t.line) --first;
        return text(first) == "@" || text(first) == "template";
    }

    const std::vector<Token>& toks_;
    const LanguageProfile& p_;
    std::vector<std::size_t> sig_;
    std::vector<std::size_t> match_;
    std::vector<int> depth_;
    std::vector<bool> in_import_;
};

// ---------------------------------------------------------------------------
// Indentation languages

class IndentClassifier {
public:
    IndentClassifier(const std::vector<Token>& toks, const LanguageProfile& p) : toks_(toks), p_(p) {
        for (std::size_t i = 0; i < toks_.size(); ++i)
            if (toks_[i].kind != TokenKind::comment) sig_.push_back(i);
        logical_start_.assign(sig_.size(), false);
        int depth = 0;
        for (std::size_t s = 0; s < sig_.size(); ++s) {
            const Token& t = tok(s);
            logical_start_[s] = depth == 0 && t.starts_line;
            if (t.kind == TokenKind::punct && t.text.size() == 1) {
                char c = t.text[0];
                if (c == '(' || c == '[' || c == '{') ++depth;
                if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
            }
        }
        if (!sig_.empty()) logical_start_[0] = true;
    }

    Classified run() {
        Classified out;
        out.kinds.assign(toks_.size(), SymbolKind::other);
        bool import_line = false;
        std::size_t param_close = npos;
        int paren = 0;
        for (std::size_t s = 0; s < sig_.size(); ++s) {
            const Token& t = tok(s);
            if (logical_start_[s]) import_line = t.kind == TokenKind::keyword && p_.import_keywords.contains(t.text);
            if (t.text == "(") ++paren;
            if (t.text == ")") --paren;
            if (s == param_close) param_close = npos;
            if (t.kind != TokenKind::identifier) continue;

            std::string_view prev = s > 0 ? std::string_view(tok(s - 1).text) : std::string_view{};
            std::string_view next = s + 1 < sig_.size() ? std::string_view(tok(s + 1).text) : std::string_view{};
            SymbolKind kind = SymbolKind::other;
            if (import_line) {
                kind = SymbolKind::import;
            } else if (s > 0 && (p_.function_keywords.contains(prev) || p_.type_keywords.contains(prev))) {
                kind = p_.function_keywords.contains(prev) ? SymbolKind::function : SymbolKind::type;
                record_decl(s, kind, out);
                if (kind == SymbolKind::function && next == "(") param_close = find_close(s + 1);
            } else if (param_close != npos && (prev == "(" || prev == "," || prev == "*" || prev == "**")) {
                kind = SymbolKind::variable;
            } else if (logical_start_[s] && (next == "=" || next == ":")) {
                kind = SymbolKind::variable;
            } else if (prev == "for" || prev == "as") {
                kind = SymbolKind::variable;
            }
            out.kinds[sig_[s]] = kind;
        }
        return out;
    }

private:
    const Token& tok(std::size_t s) const { return toks_[sig_[s]]; }

    std::size_t find_close(std::size_t open) const {
        int depth = 0;
        for (std::size_t k = open; k < sig_.size(); ++k) {
            if (tok(k).text == "(") ++depth;
            if (tok(k).text == ")" && --depth == 0) return k;
        }
        return npos;
    }

    std::size_t line_start_of(std::size_t s) const {
        while (s > 0 && !logical_start_[s]) --s;
        return s;
    }

    void record_decl(std::size_t name_s, SymbolKind kind, Classified& out) {
        std::size_t head = line_start_of(name_s);
        const std::uint32_t indent = tok(head).col;
        // Decorators directly above, at the same indentation.
        std::size_t start = head;
        while (start > 0) {
            std::size_t prev_line = line_start_of(start - 1);
            if (tok(prev_line).text == "@" && tok(prev_line).col == indent) {
                start = prev_line;
            } else {
                break;
            }
        }
        std::size_t end = name_s;
        for (std::size_t k = name_s + 1; k < sig_.size(); ++k) {
            if (logical_start_[k] && tok(k).col <= indent) break;
            end = k;
        }
        Decl d;
        d.name_tok = sig_[name_s];
        d.start_tok = sig_[start];
        d.end_tok = sig_[end];
        d.kind = kind;
        d.top_level = indent == 0;
        out.decls[d.name_tok] = d;
    }

    const std::vector<Token>& toks_;
    const LanguageProfile& p_;
    std::vector<std::size_t> sig_;
    std::vector<bool> logical_start_;
};

std::vector<std::size_t> line_starts(std::string_view text) {
    std::vector<std::size_t> starts{0};
    for (std::size_t i = 0; i < text.size(); ++i)
        if (text[i] == '\n' && i + 1 < text.size()) starts.push_back(i + 1);
    return starts;
}

}  // namespace

ParsedFile parse_source(std::string_view text, const LanguageProfile& profile) {
    const auto toks = lex::tokenize(text, profile);
    Classified cls = profile.indentation_blocks ? IndentClassifier(toks, profile).run()
                                                : BraceClassifier(toks, profile).run();

    ParsedFile out;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (t.kind != TokenKind::identifier && t.kind != TokenKind::comment) continue;
        ParsedSymbol sym;
        sym.begin_byte = t.begin;
        sym.span = {t.line, t.col, t.end_line, t.end_col};
        if (t.kind == TokenKind::comment) {
            sym.kind = SymbolKind::comment;
            std::string_view body = t.text;
            while (!body.empty() && (body.back() == ' ' || body.back() == '\t' || body.back() == '\r'))
                body.remove_suffix(1);
            sym.name = std::string(body);
            sym.comment_words = lex::words(body);
        } else {
            sym.kind = cls.kinds[i];
            sym.name = t.text;
            if (auto it = cls.decls.find(i); it != cls.decls.end()) {
                const Token& a = toks[it->second.start_tok];
                const Token& b = toks[it->second.end_tok];
                sym.span = {a.line, a.col, b.end_line, b.end_col};
            }
        }
        out.symbols.push_back(std::move(sym));
    }

    // Unit boundaries: the start line of every top-level declaration after the
    // first, pulled up over a comment block sitting directly above it.
    const auto starts = line_starts(text);
    const auto n_lines = static_cast<std::uint32_t>(starts.size());
    std::map<std::uint32_t, std::uint32_t> comment_block_by_end;  // end_line -> start line
    for (const auto& t : toks)
        if (t.kind == TokenKind::comment && t.starts_line) comment_block_by_end[t.end_line] = t.line;

    std::vector<std::pair<std::uint32_t, std::string>> decl_starts;
    for (const auto& [name_tok, d] : cls.decls)
        if (d.top_level) decl_starts.emplace_back(toks[d.start_tok].line, toks[name_tok].text);
    std::sort(decl_starts.begin(), decl_starts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<std::pair<std::uint32_t, std::string>> bounds;
    for (std::size_t k = 0; k < decl_starts.size(); ++k) {
        std::uint32_t line = decl_starts[k].first;
        if (k > 0) {
            const std::uint32_t floor = bounds.back().first;
            for (auto it = comment_block_by_end.find(line - 1); line > 0 && it != comment_block_by_end.end();
                 it = comment_block_by_end.find(line - 1)) {
                if (it->second <= floor) break;
                line = it->second;
                if (line == 0) break;
            }
            if (line <= bounds.back().first) continue;  // same line as the previous declaration
        } else {
            line = 0;
        }
        bounds.emplace_back(line, decl_starts[k].second);
    }
    if (bounds.empty()) bounds.emplace_back(0, std::string{});

    for (std::size_t k = 0; k < bounds.size(); ++k) {
        UnitRange u;
        u.start_line = bounds[k].first;
        u.end_line = k + 1 < bounds.size() ? bounds[k + 1].first : n_lines;
        u.begin_byte = starts[u.start_line];
        u.end_byte = u.end_line < n_lines ? starts[u.end_line] : text.size();
        u.declaration = bounds[k].second;
        out.units.push_back(std::move(u));
    }
    return out;
}

}  // namespace camp::dcsi::detail
