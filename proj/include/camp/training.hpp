#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camp/content_retriever.hpp"
#include "camp/context_retriever.hpp"
#include "camp/dcsi_index.hpp"
#include "camp/environment.hpp"
#include "camp/prompt_constructor.hpp"

namespace camp::training {

using Eta = std::array<double, context::kSourceCount>;

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingExample {
    std::string input_text;
    EnvironmentState environment;
    std::string positive_doc;  // doc unit id
    std::optional<std::string> user_query;
};

/// An example reduced to vectors: input/query embeddings, per-source context
/// features and the candidate documents (one per row).
struct PreparedExample {
    std::optional<Eigen::VectorXd> input;
    std::optional<Eigen::VectorXd> user_query;
    std::array<std::optional<Eigen::VectorXd>, context::kSourceCount> sources;
    Eigen::MatrixXd docs;
    std::size_t positive = 0;
};

struct Problem {
    std::vector<PreparedExample> examples;
    retrieval::FusionWeights fusion;
    std::size_t dim = 0;
};

/// Embeds examples against a snapshot. Candidates exclude the cursor's unit,
/// as retrieval does. Throws TrainingError naming any unknown positive docs.
Problem prepare_problem(const dcsi::IndexSnapshot& snapshot, const std::vector<TrainingExample>& examples,
                        const retrieval::FusionWeights& fusion = {});
/// Appends `more` to `into` (same dimension and fusion weights).
void append_problem(Problem& into, Problem more);

/// Query embedding of one example under context weights `eta`.
Eigen::VectorXd example_query(const PreparedExample& ex, const Eta& eta, const retrieval::FusionWeights& fusion);

struct LossAndGrads {
    double loss = 0.0;
    Eigen::MatrixXd grad_H;
    Eta grad_eta{};
};

/// Mean negative log-likelihood of the positives and its exact gradients.
LossAndGrads loss_and_grads(const Eigen::MatrixXd& H, const Eta& eta, const Problem& problem, unsigned threads = 1);
double data_loss(const Eigen::MatrixXd& H, const Eta& eta, const Problem& problem, unsigned threads = 1);
/// Fraction of examples whose positive scores strictly highest.
double top1_accuracy(const Eigen::MatrixXd& H, const Eta& eta, const Problem& problem);

/// Singular-value soft thresholding U max(S - tau, 0) V^T.
Eigen::MatrixXd svt(const Eigen::MatrixXd& M, double tau);
/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);
Eta project_simplex(const Eta& v);

/// t_next = (1 + sqrt(1 + 4 t^2)) / 2.
double momentum_next(double t) noexcept;

struct TrainConfig {
    std::size_t max_iters = 200;
    double tol = 1e-7;
    double nuclear_weight = 1e-3;
    double alpha = 1.0;
    double beta = 1.0;
    double initial_step_H = 8.0;
    double initial_step_eta = 1.0;
    std::size_t max_backtracks = 60;
    bool learn_eta = true;
    unsigned threads = 1;
};

struct TrainerState {
    Eigen::MatrixXd H_prev, H_curr;
    Eta eta_prev{}, eta_curr{};
    double t_prev = 1.0, t_curr = 1.0;
    double step_H = 0.0, step_eta = 0.0;
    double alpha = 1.0, beta = 1.0;
    std::size_t iteration = 1;
    std::vector<double> loss_history;
};

struct IterationRecord {
    std::size_t iteration = 0;
    double objective = 0.0;
    double data_loss = 0.0;
    double nuclear_norm = 0.0;
    double step_H = 0.0;
    double step_eta = 0.0;
};

struct TrainResult {
    retrieval::HeuristicMatrix H;
    Eta eta{};
    double initial_objective = 0.0;
    std::vector<double> loss_history;  // objective after each iteration
    std::vector<IterationRecord> records;
    bool converged = false;
    TrainerState state;
};

/// Accelerated proximal gradient on H (nuclear-norm prox) and projected
/// accelerated gradient on eta, alternating within each iteration.
TrainResult train_retrievers(const Problem& problem, const TrainConfig& config,
                             std::optional<retrieval::HeuristicMatrix> H0 = std::nullopt,
                             std::optional<Eta> eta0 = std::nullopt);
TrainResult train_retrievers(const std::vector<TrainingExample>& data, const dcsi::IndexSnapshot& snapshot,
                             const TrainConfig& config, const retrieval::FusionWeights& fusion = {});

void write_loss_csv(const TrainResult& result, std::ostream& out);

/// Synthetic benchmark with a known generating H and eta.
struct PlantedBenchmark {
    Problem problem;
    Eigen::MatrixXd H_true;
    Eta eta_true{};
};
PlantedBenchmark make_planted_benchmark(std::uint64_t seed, std::size_t dim = 8, std::size_t docs = 50,
                                        std::size_t examples = 200);

// ---------------------------------------------------------------------------
// Ordering

struct OrderingError : std::runtime_error {
    explicit OrderingError(const std::string& what, std::vector<std::size_t> cycle_items = {})
        : std::runtime_error(what), cycle(std::move(cycle_items)) {}
    std::vector<std::size_t> cycle;  // item indices, first repeated at the end
};

/// Loss of an arrangement; `order[p]` is the item placed at position p.
using OrderingLoss = std::function<double(const std::vector<std::size_t>& order)>;

struct OrderingResult {
    std::vector<std::size_t> order;
    std::vector<std::pair<std::size_t, std::size_t>> edges;  // (a, b): a precedes b
    std::size_t swap_evaluations = 0;
    std::size_t loss_evaluations = 0;
};

inline constexpr std::size_t kDefaultOrderingCap = 8;
inline constexpr double kDefaultOrderingEpsilon = 1e-3;

/// Pairwise swap tests against the default arrangement (items 0..k-1 in
/// order), then a topological sort that keeps default order among ties.
OrderingResult train_ordering(std::size_t k, const OrderingLoss& eval_loss, double epsilon = kDefaultOrderingEpsilon,
                              std::size_t max_k = kDefaultOrderingCap);

struct PromptOrderingResult {
    std::vector<prompt::ComponentKind> theta;
    OrderingResult detail;
};
PromptOrderingResult train_prompt_ordering(
    const std::vector<prompt::ComponentKind>& default_order,
    const std::function<double(const std::vector<prompt::ComponentKind>&)>& eval_loss,
    double epsilon = kDefaultOrderingEpsilon);

}  // namespace camp::training
