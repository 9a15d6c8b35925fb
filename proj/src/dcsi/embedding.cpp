#include <cctype>
#include <cmath>

#include "camp/dcsi_index.hpp"
#include "camp/lexer.hpp"
#include "file_parser.hpp"

namespace camp::dcsi {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Features contributed by one symbol: its token, its kind when it declares or
// imports something, and one entry per dependency edge naming the target.
void symbol_features(std::vector<std::string>& out, SymbolKind kind, std::string_view name,
                     const std::vector<std::string>& comment_words, std::size_t dependency_count) {
    if (kind == SymbolKind::comment) {
        for (const auto& w : comment_words) out.push_back("t:" + lower(w));
        return;
    }
    out.push_back("t:" + lower(name));
    if (kind != SymbolKind::other) out.push_back("k:" + std::string(to_string(kind)) + ":" + std::string(name));
    for (std::size_t i = 0; i < dependency_count; ++i) out.push_back("d:" + std::string(name));
}

}  // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<double> raw) {
    if (raw.empty()) throw std::invalid_argument("embedding dimension must be positive");
    double sq = 0.0;
    for (double v : raw) sq += v * v;
    if (sq == 0.0) {
        raw[0] = 1.0;
        return from_unit(std::move(raw));
    }
    const double norm = std::sqrt(sq);
    for (double& v : raw) v /= norm;
    EmbeddingVector e;
    e.values_ = std::move(raw);
    return e;
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("embedding dimension must be positive");
    double sq = 0.0;
    for (double v : values) {
        if (!std::isfinite(v)) throw std::invalid_argument("embedding has non-finite entries");
        sq += v * v;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-9) throw std::invalid_argument("embedding is not unit norm");
    EmbeddingVector e;
    e.values_ = std::move(values);
    return e;
}

double EmbeddingVector::dot(const EmbeddingVector& other) const {
    if (other.size() != size()) throw std::invalid_argument("embedding dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * other.values_[i];
    return s;
}

FeatureSlot feature_slot(std::string_view feature, std::size_t d_emb) noexcept {
    const std::uint64_t h = fnv1a64(feature);
    return {static_cast<std::size_t>(h % d_emb), (h >> 63) ? -1.0 : 1.0};
}

EmbeddingVector hash_features(const std::vector<std::string>& features, std::size_t d_emb) {
    std::vector<double> v(d_emb, 0.0);
    for (const auto& f : features) {
        auto slot = feature_slot(f, d_emb);
        v[slot.bucket] += slot.sign;
    }
    return EmbeddingVector::normalized(std::move(v));
}

std::vector<std::string> unit_features(const IndexSnapshot& /*snapshot*/, const FileIndex& file,
                                       const DocUnit& unit) {
    std::vector<std::string> out;
    for (const auto& id : unit.symbols) {
        const SymbolRecord& r = file.records.at(id.ordinal());
        std::vector<std::string> cw;
        if (r.kind == SymbolKind::comment) cw = lex::words(r.name);
        symbol_features(out, r.kind, r.name, cw, r.dependencies.size());
    }
    return out;
}

std::vector<std::string> fragment_features(const IndexSnapshot& snapshot, std::string_view fragment,
                                           std::string_view profile) {
    std::vector<detail::ParsedSymbol> symbols;
    try {
        symbols = detail::parse_source(fragment, lex::profile_by_name(profile)).symbols;
    } catch (const lex::LexError&) {
        // Free text that does not lex (stray quotes): fall back to plain words.
        for (auto& w : lex::words(fragment)) {
            detail::ParsedSymbol s;
            s.name = std::move(w);
            symbols.push_back(std::move(s));
        }
    }
    std::map<std::string, std::size_t, std::less<>> local_defs;
    for (const auto& s : symbols)
        if (detail::is_definition(s.kind)) ++local_defs[s.name];

    const auto& global = snapshot.global_definitions();
    std::vector<std::string> out;
    for (const auto& s : symbols) {
        std::size_t deps = 0;
        if (detail::is_reference(s.kind)) {
            if (auto it = local_defs.find(s.name); it != local_defs.end()) {
                deps = it->second;
            } else if (auto g = global.find(s.name); g != global.end()) {
                deps = g->second.size();
            }
        }
        symbol_features(out, s.kind, s.name, s.comment_words, deps);
    }
    return out;
}

EmbeddingVector embed(const IndexSnapshot& snapshot, std::string_view fragment, std::string_view profile) {
    auto features = fragment_features(snapshot, fragment, profile);
    if (features.empty()) throw IndexError("empty fragment");
    return hash_features(features, snapshot.config().d_emb);
}

const EmbeddingVector& embed(const IndexSnapshot& snapshot, const DocUnit& unit) {
    const DocUnit* stored = snapshot.find_unit(unit.id);
    if (stored == nullptr) throw IndexError("unknown doc unit: " + unit.id);
    return stored->embedding;
}

}  // namespace camp::dcsi
