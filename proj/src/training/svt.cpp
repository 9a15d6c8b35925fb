#include <Eigen/SVD>
#include <cmath>

#include "camp/training.hpp"

namespace camp::training {

Eigen::MatrixXd svt(const Eigen::MatrixXd& M, double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("svt: threshold must be finite and >= 0");
    if (!M.allFinite()) throw std::domain_error("svt: matrix has non-finite entries");
    if (M.size() == 0) return M;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw std::domain_error("svt: SVD did not converge");
    const Eigen::VectorXd shrunk = (svd.singularValues().array() - tau).max(0.0).matrix();
    return svd.matrixU() * shrunk.asDiagonal() * svd.matrixV().transpose();
}

double momentum_next(double t) noexcept { return (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0; }

}  // namespace camp::training
