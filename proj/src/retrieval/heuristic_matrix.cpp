#include <Eigen/SVD>

#include "camp/content_retriever.hpp"

namespace camp::retrieval {

double nuclear_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    if (!m.allFinite()) throw std::invalid_argument("nuclear norm of a non-finite matrix");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().sum();
}

HeuristicMatrix::HeuristicMatrix(Eigen::MatrixXd values) { set(std::move(values)); }

HeuristicMatrix HeuristicMatrix::identity(std::size_t d, double scale) {
    const auto n = static_cast<Eigen::Index>(d);
    return HeuristicMatrix(Eigen::MatrixXd::Identity(n, n) * scale);
}

HeuristicMatrix HeuristicMatrix::zero(std::size_t d) {
    const auto n = static_cast<Eigen::Index>(d);
    return HeuristicMatrix(Eigen::MatrixXd::Zero(n, n));
}

void HeuristicMatrix::set(Eigen::MatrixXd values) {
    if (values.rows() != values.cols()) throw std::invalid_argument("heuristic matrix must be square");
    if (!values.allFinite()) throw std::invalid_argument("heuristic matrix has non-finite entries");
    nuclear_norm_ = retrieval::nuclear_norm(values);
    values_ = std::move(values);
}

}  // namespace camp::retrieval
