#include "camp/context_retriever.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>

#include "camp/lexer.hpp"

namespace camp::context {

namespace {

constexpr std::array<std::string_view, kSourceCount> kSourceNames = {"cursor_position", "repo_path",
                                                                     "build_artifacts", "index_information"};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool readable_file(const std::filesystem::path& p) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec)) return false;
    std::ifstream in(p, std::ios::binary);
    return static_cast<bool>(in);
}

}  // namespace

std::string_view to_string(ContextSource source) noexcept { return kSourceNames[static_cast<std::size_t>(source)]; }

ContextSource context_source_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kSourceCount; ++i)
        if (kSourceNames[i] == s) return static_cast<ContextSource>(i);
    throw std::invalid_argument("unknown context source: " + std::string(s));
}

ContextVector ContextVector::none(std::size_t d_emb) {
    ContextVector v;
    v.aggregate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d_emb));
    return v;
}

bool ContextVector::empty() const noexcept { return active_count() == 0; }

std::size_t ContextVector::active_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const Entry& e) { return e.weight > 0.0; }));
}

std::vector<std::string> repo_path_features(const std::filesystem::path& repo_root) {
    std::vector<std::string> out;
    for (const auto& w : lex::words(repo_root.lexically_normal().generic_string())) out.push_back("p:" + lower(w));
    return out;
}

std::vector<std::string> artifact_features(const std::vector<std::string>& artifact_names) {
    std::vector<std::string> out;
    for (const auto& name : artifact_names)
        for (const auto& w : lex::words(name)) out.push_back("a:" + lower(w));
    return out;
}

std::vector<std::string> top_degree_symbols(const dcsi::IndexSnapshot& snapshot, std::string_view file,
                                            std::size_t limit) {
    const dcsi::FileIndex* f = snapshot.file(file);
    if (f == nullptr) return {};
    const auto in_deg = snapshot.in_degrees();
    struct Ranked {
        std::size_t degree;
        std::size_t ordinal;
        const dcsi::SymbolRecord* record;
    };
    std::vector<Ranked> ranked;
    for (const auto& r : f->records) {
        if (r.kind == dcsi::SymbolKind::comment) continue;
        auto it = in_deg.find(r.id);
        const std::size_t in = it == in_deg.end() ? 0 : it->second;
        ranked.push_back({in + r.dependencies.size(), r.id.ordinal(), &r});
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        return a.degree != b.degree ? a.degree > b.degree : a.ordinal < b.ordinal;
    });
    std::vector<std::string> names;
    for (std::size_t i = 0; i < ranked.size() && i < limit; ++i) names.push_back(ranked[i].record->name);
    return names;
}

std::vector<ContextSignal> collect_signals(const EnvironmentState& env, const dcsi::IndexSnapshot& snapshot,
                                           std::vector<std::string>* diagnostics) {
    auto note = [&](std::string msg) {
        if (diagnostics) diagnostics->push_back(std::move(msg));
    };
    const std::size_t d = snapshot.config().d_emb;
    std::vector<ContextSignal> signals;

    if (env.cursor) {
        const auto& c = *env.cursor;
        if (const dcsi::DocUnit* unit = snapshot.unit_at(c.file, c.line)) {
            signals.push_back({ContextSource::cursor_position,
                               {{"file", c.file}, {"line", c.line}, {"col", c.col}, {"unit", unit->id}},
                               dcsi::embed(snapshot, *unit)});
        } else {
            note("cursor " + c.file + ":" + std::to_string(c.line) + " is not inside an indexed unit");
        }
    }

    signals.push_back({ContextSource::repo_path,
                       {{"path", env.repo_root.generic_string()}},
                       dcsi::hash_features(repo_path_features(env.repo_root), d)});

    if (!env.artifacts.empty()) {
        std::vector<std::string> names;
        for (const auto& a : env.artifacts) {
            if (readable_file(a))
                names.push_back(a.filename().string());
            else
                note("unreadable build artifact: " + a.string());
        }
        if (!names.empty()) {
            nlohmann::json payload = {{"artifacts", names}};
            signals.push_back({ContextSource::build_artifacts, std::move(payload),
                               dcsi::hash_features(artifact_features(names), d)});
        }
    }

    if (env.cursor && snapshot.file(env.cursor->file) != nullptr) {
        auto names = top_degree_symbols(snapshot, env.cursor->file);
        if (!names.empty()) {
            std::vector<std::string> features;
            for (const auto& n : names) features.push_back("t:" + lower(n));
            nlohmann::json payload = {{"file", env.cursor->file}, {"symbols", names}};
            signals.push_back({ContextSource::index_information, std::move(payload),
                               dcsi::hash_features(features, d)});
        }
    }
    return signals;
}

ContextVector aggregate(std::span<const ContextSignal> signals, std::span<const double> weights, std::size_t tau_c) {
    if (tau_c == 0) throw std::invalid_argument("tau_c must be positive");
    if (weights.size() < signals.size()) throw std::invalid_argument("fewer weights than context signals");
    std::vector<double> w(signals.size());
    for (std::size_t i = 0; i < signals.size(); ++i) {
        if (!std::isfinite(weights[i]) || weights[i] < 0.0)
            throw std::invalid_argument("context weights must be finite and nonnegative");
        w[i] = weights[i];
    }
    if (std::accumulate(w.begin(), w.end(), 0.0) <= 0.0) throw ContextError("degenerate context weights");

    std::vector<std::size_t> order(signals.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (w[a] != w[b]) return w[a] > w[b];
        return signals[a].source < signals[b].source;
    });
    std::size_t kept = 0;
    for (std::size_t i : order) {
        if (w[i] <= 0.0) continue;
        if (kept < tau_c)
            ++kept;
        else
            w[i] = 0.0;
    }
    const double total = std::accumulate(w.begin(), w.end(), 0.0);

    ContextVector out;
    out.tau_c = tau_c;
    const std::size_t d = signals.empty() ? 0 : signals.front().feature.size();
    out.aggregate = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < signals.size(); ++i) {
        if (signals[i].feature.size() != d) throw std::invalid_argument("context feature dimension mismatch");
        const double wi = w[i] / total;
        out.entries.push_back({signals[i], wi});
        if (wi > 0.0) out.aggregate += wi * signals[i].feature.as_eigen();
        if (signals[i].source == ContextSource::cursor_position && signals[i].payload.contains("unit"))
            out.cursor_unit = signals[i].payload["unit"].get<std::string>();
    }
    return out;
}

ContextVector aggregate_by_source(std::span<const ContextSignal> signals, const std::array<double, kSourceCount>& eta,
                                  std::size_t tau_c) {
    std::vector<double> w;
    w.reserve(signals.size());
    for (const auto& s : signals) w.push_back(eta[static_cast<std::size_t>(s.source)]);
    return aggregate(signals, w, tau_c);
}

}  // namespace camp::context
