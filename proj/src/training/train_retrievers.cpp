#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include "camp/training.hpp"

namespace camp::training {

namespace {

Eigen::VectorXd to_vec(const Eta& e) {
    return Eigen::Map<const Eigen::VectorXd>(e.data(), static_cast<Eigen::Index>(e.size()));
}

Eta from_vec(const Eigen::VectorXd& v) {
    Eta e{};
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = v[static_cast<Eigen::Index>(i)];
    return e;
}

std::string state_dump(const TrainerState& s, double loss) {
    std::ostringstream os;
    os << std::setprecision(17) << "non-finite loss or gradient (loss " << loss << ") at iteration " << s.iteration
       << "; step_H=" << s.step_H << " step_eta=" << s.step_eta << " t=" << s.t_curr
       << " |H|_F=" << s.H_curr.norm() << " |H_prev|_F=" << s.H_prev.norm() << " eta=[";
    for (std::size_t i = 0; i < s.eta_curr.size(); ++i) os << (i ? "," : "") << s.eta_curr[i];
    os << "]";
    return os.str();
}

void validate(const TrainConfig& c) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(c.alpha) || !positive(c.beta)) throw std::invalid_argument("alpha and beta must be positive");
    if (!positive(c.initial_step_H) || !positive(c.initial_step_eta))
        throw std::invalid_argument("initial step sizes must be positive");
    if (!(c.nuclear_weight >= 0.0) || !std::isfinite(c.nuclear_weight))
        throw std::invalid_argument("nuclear weight must be finite and >= 0");
    if (!(c.tol >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
}

bool any_context(const Problem& p) {
    for (const auto& ex : p.examples)
        for (const auto& s : ex.sources)
            if (s) return true;
    return false;
}

}  // namespace

TrainResult train_retrievers(const Problem& problem, const TrainConfig& config,
                             std::optional<retrieval::HeuristicMatrix> H0, std::optional<Eta> eta0) {
    validate(config);
    if (problem.examples.size() < 2) throw TrainingError("training needs at least two examples");
    const auto d = static_cast<Eigen::Index>(problem.dim);
    const double lambda = config.nuclear_weight;

    TrainerState st;
    st.H_curr = H0 ? H0->values() : Eigen::MatrixXd(Eigen::MatrixXd::Identity(d, d) * 0.1);
    if (st.H_curr.rows() != d || st.H_curr.cols() != d)
        throw TrainingError("initial heuristic matrix does not match the embedding dimension");
    Eta uniform;
    uniform.fill(1.0 / static_cast<double>(uniform.size()));
    st.eta_curr = eta0 ? project_simplex(*eta0) : uniform;
    st.H_prev = st.H_curr;
    st.eta_prev = st.eta_curr;
    st.step_H = config.initial_step_H;
    st.step_eta = config.initial_step_eta;
    st.alpha = config.alpha;
    st.beta = config.beta;

    auto objective = [&](const Eigen::MatrixXd& H, const Eta& eta) {
        return data_loss(H, eta, problem, config.threads) + lambda * retrieval::nuclear_norm(H);
    };

    TrainResult result;
    result.initial_objective = objective(st.H_curr, st.eta_curr);
    if (!std::isfinite(result.initial_objective)) throw TrainingError(state_dump(st, result.initial_objective));
    const bool learn_eta = config.learn_eta && any_context(problem);
    double previous = result.initial_objective;

    for (std::size_t n = 1; n <= config.max_iters; ++n) {
        st.iteration = n;
        const double coef = (st.t_prev - 1.0) / st.t_curr;

        // heuristic matrix: extrapolate, gradient step, shrink singular values, relax
        const Eigen::MatrixXd H_bar = st.H_curr + coef * (st.H_curr - st.H_prev);
        const auto at_bar = loss_and_grads(H_bar, st.eta_curr, problem, config.threads);
        if (!std::isfinite(at_bar.loss) || !at_bar.grad_H.allFinite()) throw TrainingError(state_dump(st, at_bar.loss));
        double s = st.step_H;
        Eigen::MatrixXd prox;
        for (std::size_t b = 0;; ++b) {
            prox = svt(H_bar - s * at_bar.grad_H, lambda * s);
            const Eigen::MatrixXd diff = prox - H_bar;
            const double bound = at_bar.loss + (at_bar.grad_H.array() * diff.array()).sum() +
                                 diff.squaredNorm() / (2.0 * s);
            if (data_loss(prox, st.eta_curr, problem, config.threads) <= bound + 1e-12 * std::abs(bound) ||
                b == config.max_backtracks)
                break;
            s /= 2.0;
        }
        st.step_H = s;
        const Eigen::MatrixXd H_next = st.H_curr + config.alpha * (prox - st.H_curr);

        // context weights: same pattern with a simplex projection as the prox
        Eta eta_next = st.eta_curr;
        if (learn_eta) {
            const Eigen::VectorXd e_curr = to_vec(st.eta_curr);
            const Eta e_bar = project_simplex(from_vec(e_curr + coef * (e_curr - to_vec(st.eta_prev))));
            const auto at_ebar = loss_and_grads(H_next, e_bar, problem, config.threads);
            const Eigen::VectorXd grad = to_vec(at_ebar.grad_eta);
            if (!std::isfinite(at_ebar.loss) || !grad.allFinite()) throw TrainingError(state_dump(st, at_ebar.loss));
            double se = st.step_eta;
            Eigen::VectorXd g;
            for (std::size_t b = 0;; ++b) {
                g = project_simplex(Eigen::VectorXd(to_vec(e_bar) - se * grad));
                const Eigen::VectorXd diff = g - to_vec(e_bar);
                const double bound = at_ebar.loss + grad.dot(diff) + diff.squaredNorm() / (2.0 * se);
                if (data_loss(H_next, from_vec(g), problem, config.threads) <= bound + 1e-12 * std::abs(bound) ||
                    b == config.max_backtracks)
                    break;
                se /= 2.0;
            }
            st.step_eta = se;
            eta_next = project_simplex(from_vec(e_curr + config.beta * (g - e_curr)));
        }

        st.H_prev = std::move(st.H_curr);
        st.H_curr = H_next;
        st.eta_prev = st.eta_curr;
        st.eta_curr = eta_next;
        st.t_prev = st.t_curr;
        st.t_curr = momentum_next(st.t_curr);

        const double data = data_loss(st.H_curr, st.eta_curr, problem, config.threads);
        const double nuc = retrieval::nuclear_norm(st.H_curr);
        const double obj = data + lambda * nuc;
        if (!std::isfinite(obj)) throw TrainingError(state_dump(st, obj));
        st.loss_history.push_back(obj);
        result.records.push_back({n, obj, data, nuc, st.step_H, st.step_eta});
        if (std::abs(previous - obj) < config.tol) {
            result.converged = true;
            break;
        }
        previous = obj;
    }

    result.H = retrieval::HeuristicMatrix(st.H_curr);
    result.eta = st.eta_curr;
    result.loss_history = st.loss_history;
    result.state = std::move(st);
    return result;
}

TrainResult train_retrievers(const std::vector<TrainingExample>& data, const dcsi::IndexSnapshot& snapshot,
                             const TrainConfig& config, const retrieval::FusionWeights& fusion) {
    return train_retrievers(prepare_problem(snapshot, data, fusion), config);
}

void write_loss_csv(const TrainResult& result, std::ostream& out) {
    out << "iteration,loss,data_loss,nuclear_norm,step_H,step_eta\n";
    out << std::setprecision(17);
    for (const auto& r : result.records)
        out << r.iteration << ',' << r.objective << ',' << r.data_loss << ',' << r.nuclear_norm << ',' << r.step_H
            << ',' << r.step_eta << '\n';
}

PlantedBenchmark make_planted_benchmark(std::uint64_t seed, std::size_t dim, std::size_t docs, std::size_t examples) {
    if (dim < 2 || docs < 2 || examples < 2) throw std::invalid_argument("planted benchmark is too small");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const auto d = static_cast<Eigen::Index>(dim);
    auto unit = [&] {
        Eigen::VectorXd v(d);
        for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
        return Eigen::VectorXd(v.normalized());
    };

    PlantedBenchmark bench;
    Eigen::MatrixXd D(static_cast<Eigen::Index>(docs), d);
    for (Eigen::Index j = 0; j < D.rows(); ++j) D.row(j) = unit().transpose();

    const Eigen::Index rank = std::min<Eigen::Index>(3, d);
    Eigen::MatrixXd U(d, rank), V(d, rank);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index r = 0; r < rank; ++r) {
            U(i, r) = normal(rng);
            V(i, r) = normal(rng);
        }
    Eigen::MatrixXd Ht = U * V.transpose();
    bench.H_true = Ht * (12.0 / Ht.norm());
    bench.eta_true = {0.4, 0.1, 0.2, 0.3};

    Problem& p = bench.problem;
    p.dim = dim;
    const double margin = 0.25;
    for (std::size_t i = 0; i < examples; ++i) {
        for (int attempt = 0;; ++attempt) {
            if (attempt > 10000) throw std::runtime_error("planted benchmark: margin too large for this draw");
            PreparedExample ex;
            ex.input = unit();
            for (auto& s : ex.sources) s = unit();
            ex.docs = D;
            const Eigen::VectorXd scores = D * (bench.H_true * example_query(ex, bench.eta_true, p.fusion));
            Eigen::Index best = 0;
            scores.maxCoeff(&best);
            double second = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < scores.size(); ++j)
                if (j != best) second = std::max(second, scores[j]);
            if (scores[best] - second < margin) continue;
            ex.positive = static_cast<std::size_t>(best);
            p.examples.push_back(std::move(ex));
            break;
        }
    }
    return bench;
}

}  // namespace camp::training
