#include <cmath>
#include <thread>

#include "camp/training.hpp"

namespace camp::training {

namespace {

struct ExampleTerms {
    double loss = 0.0;
    Eigen::MatrixXd grad_H;
    Eta grad_eta{};
};

struct ContextPart {
    Eigen::VectorXd aggregate;
    double mass = 0.0;  // sum of eta over present sources
};

ContextPart context_part(const PreparedExample& ex, const Eta& eta, Eigen::Index d) {
    ContextPart c{Eigen::VectorXd::Zero(d), 0.0};
    for (std::size_t s = 0; s < context::kSourceCount; ++s) {
        if (!ex.sources[s]) continue;
        c.aggregate += eta[s] * *ex.sources[s];
        c.mass += eta[s];
    }
    if (c.mass > 0.0) c.aggregate /= c.mass;
    return c;
}

double fusion_total(const PreparedExample& ex, const ContextPart& c, const retrieval::FusionWeights& f) {
    double w = 0.0;
    if (ex.input) w += f.input;
    if (c.mass > 0.0) w += f.context;
    if (ex.user_query) w += f.user_query;
    return w;
}

struct QueryParts {
    Eigen::VectorXd q;
    ContextPart context;
    double total = 0.0;
};

QueryParts build_query(const PreparedExample& ex, const Eta& eta, const retrieval::FusionWeights& fusion) {
    const Eigen::Index d = ex.docs.cols();
    QueryParts parts{Eigen::VectorXd::Zero(d), context_part(ex, eta, d), 0.0};
    parts.total = fusion_total(ex, parts.context, fusion);
    if (parts.total <= 0.0) throw TrainingError("training example has an empty query");
    if (ex.input) parts.q += fusion.input * *ex.input;
    if (parts.context.mass > 0.0) parts.q += fusion.context * parts.context.aggregate;
    if (ex.user_query) parts.q += fusion.user_query * *ex.user_query;
    parts.q /= parts.total;
    return parts;
}

ExampleTerms example_terms(const Eigen::MatrixXd& H, const Eta& eta, const PreparedExample& ex,
                           const retrieval::FusionWeights& fusion, bool grads) {
    const auto [q, c, W] = build_query(ex, eta, fusion);
    const Eigen::VectorXd hq = H * q;
    const Eigen::VectorXd s = ex.docs * hq;
    const double m = s.maxCoeff();
    const Eigen::VectorXd e = (s.array() - m).exp().matrix();
    const double z = e.sum();
    ExampleTerms out;
    out.loss = m + std::log(z) - s[static_cast<Eigen::Index>(ex.positive)];
    if (!grads) return out;

    const Eigen::VectorXd p = e / z;
    const Eigen::VectorXd r = ex.docs.transpose() * p - ex.docs.row(static_cast<Eigen::Index>(ex.positive)).transpose();
    out.grad_H = r * q.transpose();
    if (c.mass > 0.0) {
        const Eigen::VectorXd gq = H.transpose() * r;
        const double scale = fusion.context / (W * c.mass);
        for (std::size_t k = 0; k < context::kSourceCount; ++k)
            if (ex.sources[k]) out.grad_eta[k] = scale * (*ex.sources[k] - c.aggregate).dot(gq);
    }
    return out;
}

std::vector<ExampleTerms> all_terms(const Eigen::MatrixXd& H, const Eta& eta, const Problem& problem, bool grads,
                                    unsigned threads) {
    if (problem.examples.empty()) throw TrainingError("empty training batch");
    if (static_cast<std::size_t>(H.rows()) != problem.dim || H.rows() != H.cols())
        throw TrainingError("heuristic matrix does not match the embedding dimension");
    std::vector<ExampleTerms> terms(problem.examples.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            terms[i] = example_terms(H, eta, problem.examples[i], problem.fusion, grads);
    };
    const std::size_t n = terms.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    if (workers == 1) {
        work(0, n);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (n + workers - 1) / workers;
        for (std::size_t b = 0; b < n; b += chunk) pool.emplace_back(work, b, std::min(n, b + chunk));
    }
    return terms;
}

}  // namespace

Eigen::VectorXd example_query(const PreparedExample& ex, const Eta& eta, const retrieval::FusionWeights& fusion) {
    return build_query(ex, eta, fusion).q;
}

LossAndGrads loss_and_grads(const Eigen::MatrixXd& H, const Eta& eta, const Problem& problem, unsigned threads) {
    const auto terms = all_terms(H, eta, problem, true, threads);
    LossAndGrads out;
    out.grad_H = Eigen::MatrixXd::Zero(H.rows(), H.cols());
    // fixed-order reduction keeps results independent of the thread count
    for (const auto& t : terms) {
        out.loss += t.loss;
        out.grad_H += t.grad_H;
        for (std::size_t k = 0; k < out.grad_eta.size(); ++k) out.grad_eta[k] += t.grad_eta[k];
    }
    const double n = static_cast<double>(terms.size());
    out.loss /= n;
    out.grad_H /= n;
    for (double& g : out.grad_eta) g /= n;
    return out;
}

double data_loss(const Eigen::MatrixXd& H, const Eta& eta, const Problem& problem, unsigned threads) {
    const auto terms = all_terms(H, eta, problem, false, threads);
    double loss = 0.0;
    for (const auto& t : terms) loss += t.loss;
    return loss / static_cast<double>(terms.size());
}

double top1_accuracy(const Eigen::MatrixXd& H, const Eta& eta, const Problem& problem) {
    if (problem.examples.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& ex : problem.examples) {
        const Eigen::VectorXd s = ex.docs * (H * example_query(ex, eta, problem.fusion));
        const auto pos = static_cast<Eigen::Index>(ex.positive);
        bool best = true;
        for (Eigen::Index j = 0; j < s.size() && best; ++j)
            if (j != pos && s[j] >= s[pos]) best = false;
        hits += best;
    }
    return static_cast<double>(hits) / static_cast<double>(problem.examples.size());
}

Problem prepare_problem(const dcsi::IndexSnapshot& snapshot, const std::vector<TrainingExample>& examples,
                        const retrieval::FusionWeights& fusion) {
    Problem problem;
    problem.fusion = fusion;
    problem.dim = snapshot.config().d_emb;
    const auto units = snapshot.doc_units();
    std::vector<std::string> offenders;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& src = examples[i];
        if (snapshot.find_unit(src.positive_doc) == nullptr) {
            offenders.push_back(src.positive_doc);
            continue;
        }
        PreparedExample ex;
        const auto signals = context::collect_signals(src.environment, snapshot);
        std::optional<std::string> cursor_unit;
        for (const auto& s : signals) {
            ex.sources[static_cast<std::size_t>(s.source)] = s.feature.as_eigen();
            if (s.source == context::ContextSource::cursor_position) cursor_unit = s.payload["unit"].get<std::string>();
        }
        if (cursor_unit == src.positive_doc) {
            offenders.push_back(src.positive_doc + " (the cursor's own unit)");
            continue;
        }
        std::string profile = "brace";
        if (src.environment.cursor)
            profile = dcsi::profile_for_path(snapshot.config(), src.environment.cursor->file).value_or("brace");
        try {
            ex.input = dcsi::embed(snapshot, src.input_text, profile).as_eigen();
        } catch (const dcsi::IndexError&) {
        }
        if (src.user_query) {
            try {
                ex.user_query = dcsi::embed(snapshot, *src.user_query).as_eigen();
            } catch (const dcsi::IndexError&) {
            }
        }
        std::vector<const dcsi::DocUnit*> candidates;
        for (const auto* u : units)
            if (!cursor_unit || u->id != *cursor_unit) candidates.push_back(u);
        ex.docs.resize(static_cast<Eigen::Index>(candidates.size()), static_cast<Eigen::Index>(problem.dim));
        for (std::size_t j = 0; j < candidates.size(); ++j) {
            ex.docs.row(static_cast<Eigen::Index>(j)) = candidates[j]->embedding.as_eigen().transpose();
            if (candidates[j]->id == src.positive_doc) ex.positive = j;
        }
        problem.examples.push_back(std::move(ex));
    }
    if (!offenders.empty()) {
        std::string msg = "training examples reference missing doc units:";
        for (const auto& o : offenders) msg += " " + o;
        throw TrainingError(msg);
    }
    return problem;
}

void append_problem(Problem& into, Problem more) {
    if (into.examples.empty() && into.dim == 0) {
        into = std::move(more);
        return;
    }
    if (more.dim != into.dim || !(more.fusion == into.fusion))
        throw TrainingError("cannot merge training problems with different settings");
    for (auto& ex : more.examples) into.examples.push_back(std::move(ex));
}

}  // namespace camp::training
