#include "camp/content_retriever.hpp"

#include <algorithm>
#include <cmath>

#include "camp/binary_io.hpp"
#include "camp/hashing.hpp"

namespace camp::retrieval {

namespace {

std::optional<Eigen::VectorXd> try_embed(const dcsi::IndexSnapshot& snapshot, std::string_view text,
                                         std::string_view profile) {
    try {
        return dcsi::embed(snapshot, text, profile).as_eigen();
    } catch (const dcsi::IndexError&) {
        return std::nullopt;
    }
}

std::vector<double> softmax(const std::vector<double>& scores) {
    const double m = *std::max_element(scores.begin(), scores.end());
    std::vector<double> p(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) z += p[i] = std::exp(scores[i] - m);
    for (double& v : p) v /= z;
    return p;
}

std::vector<double> bilinear_scores(const HeuristicMatrix& H, const Eigen::VectorXd& query,
                                    std::span<const dcsi::EmbeddingVector* const> docs) {
    if (static_cast<std::size_t>(query.size()) != H.dim())
        throw RetrievalError("dimension mismatch: query has " + std::to_string(query.size()) +
                             " entries, heuristic matrix is " + std::to_string(H.dim()));
    const Eigen::VectorXd hq = H.values() * query;
    std::vector<double> s;
    s.reserve(docs.size());
    for (const auto* d : docs) {
        if (d->size() != H.dim()) throw RetrievalError("dimension mismatch between document and heuristic matrix");
        s.push_back(d->as_eigen().dot(hq));
    }
    return s;
}

}  // namespace

std::vector<double> score(const HeuristicMatrix& H, const Eigen::VectorXd& query,
                          std::span<const dcsi::EmbeddingVector> docs) {
    if (docs.empty()) throw RetrievalError("no candidate documents");
    std::vector<const dcsi::EmbeddingVector*> ptrs;
    for (const auto& d : docs) ptrs.push_back(&d);
    return softmax(bilinear_scores(H, query, ptrs));
}

std::vector<double> score(const HeuristicMatrix& H, const dcsi::EmbeddingVector& query,
                          std::span<const dcsi::EmbeddingVector> docs) {
    return score(H, Eigen::VectorXd(query.as_eigen()), docs);
}

std::optional<Eigen::VectorXd> compose_query(const dcsi::IndexSnapshot& snapshot,
                                             const context::ContextVector& context, std::string_view input_text,
                                             const std::optional<std::string>& user_query,
                                             const RetrieveOptions& options) {
    const auto d = static_cast<Eigen::Index>(snapshot.config().d_emb);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(d);
    double total = 0.0;
    auto add = [&](double w, const Eigen::VectorXd& v) {
        if (w <= 0.0) return;
        if (v.size() != d) throw RetrievalError("dimension mismatch in query composition");
        q += w * v;
        total += w;
    };
    if (auto e = try_embed(snapshot, input_text, options.input_profile)) add(options.fusion.input, *e);
    if (!context.empty()) add(options.fusion.context, context.aggregate);
    if (user_query)
        if (auto e = try_embed(snapshot, *user_query, "brace")) add(options.fusion.user_query, *e);
    if (total == 0.0) return std::nullopt;
    return q / total;
}

RetrievalResult retrieve(const dcsi::IndexSnapshot& snapshot, const context::ContextVector& context,
                         std::string_view input_text, const std::optional<std::string>& user_query,
                         const HeuristicMatrix& H, const RetrieveOptions& options) {
    if (options.k == 0) throw std::invalid_argument("K must be at least 1");
    std::vector<const dcsi::DocUnit*> candidates;
    for (const auto* u : snapshot.doc_units()) {
        if (options.exclude_cursor_unit && context.cursor_unit && u->id == *context.cursor_unit) continue;
        if (options.restrict_to_file && u->file != *options.restrict_to_file) continue;
        candidates.push_back(u);
    }
    if (candidates.empty()) throw RetrievalError("no candidate documents");

    auto q = compose_query(snapshot, context, input_text, user_query, options);
    if (!q) throw RetrievalError("empty retrieval query");

    std::vector<const dcsi::EmbeddingVector*> embs;
    for (const auto* u : candidates) embs.push_back(&u->embedding);
    const auto scores = bilinear_scores(H, *q, embs);
    const auto probs = softmax(scores);

    std::vector<std::size_t> order(candidates.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return candidates[a]->id < candidates[b]->id;
    });

    RetrievalResult result;
    result.candidate_count = candidates.size();
    for (std::size_t i = 0; i < order.size() && i < options.k; ++i)
        result.items.push_back({candidates[order[i]], probs[order[i]], scores[order[i]]});

    BinaryWriter w;
    w.str(input_text);
    w.u8(user_query.has_value());
    w.str(user_query.value_or(""));
    w.u64(static_cast<std::uint64_t>(context.aggregate.size()));
    for (Eigen::Index i = 0; i < context.aggregate.size(); ++i) w.f64(context.aggregate[i]);
    result.query_digest = to_hex(sha256(w.bytes()));
    result.query = std::move(*q);
    return result;
}

}  // namespace camp::retrieval
