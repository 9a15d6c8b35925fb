#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camp/context_retriever.hpp"
#include "camp/dcsi_index.hpp"

namespace camp::retrieval {

struct RetrievalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Sum of singular values.
double nuclear_norm(const Eigen::MatrixXd& m);

/// Square bilinear ranking matrix with a cached nuclear norm.
class HeuristicMatrix {
public:
    HeuristicMatrix() = default;
    explicit HeuristicMatrix(Eigen::MatrixXd values);

    static HeuristicMatrix identity(std::size_t d, double scale = 1.0);
    static HeuristicMatrix zero(std::size_t d);

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.rows()); }
    double nuclear_norm() const noexcept { return nuclear_norm_; }

    void set(Eigen::MatrixXd values);

private:
    Eigen::MatrixXd values_;
    double nuclear_norm_ = 0.0;
};

/// Softmax over bilinear scores d_j^T H q, max-shifted.
std::vector<double> score(const HeuristicMatrix& H, const Eigen::VectorXd& query,
                          std::span<const dcsi::EmbeddingVector> docs);
std::vector<double> score(const HeuristicMatrix& H, const dcsi::EmbeddingVector& query,
                          std::span<const dcsi::EmbeddingVector> docs);

/// Convex weights for composing the query embedding.
struct FusionWeights {
    double input = 0.5;
    double context = 0.3;
    double user_query = 0.2;

    bool operator==(const FusionWeights&) const = default;
};

struct RetrieveOptions {
    std::size_t k = 5;
    FusionWeights fusion;
    std::string input_profile = "brace";
    bool exclude_cursor_unit = true;
    std::optional<std::string> restrict_to_file;
};

struct RetrievedItem {
    const dcsi::DocUnit* unit = nullptr;
    double probability = 0.0;
    double score = 0.0;
};

struct RetrievalResult {
    std::vector<RetrievedItem> items;
    std::string query_digest;
    std::size_t candidate_count = 0;
    Eigen::VectorXd query;
};

/// Query embedding: fusion-weighted mean of the parts that are present.
/// Returns nullopt when no part is present.
std::optional<Eigen::VectorXd> compose_query(const dcsi::IndexSnapshot& snapshot,
                                             const context::ContextVector& context, std::string_view input_text,
                                             const std::optional<std::string>& user_query,
                                             const RetrieveOptions& options);

RetrievalResult retrieve(const dcsi::IndexSnapshot& snapshot, const context::ContextVector& context,
                         std::string_view input_text, const std::optional<std::string>& user_query,
                         const HeuristicMatrix& H, const RetrieveOptions& options = {});

}  // namespace camp::retrieval
