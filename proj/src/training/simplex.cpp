#include <algorithm>
#include <functional>

#include "camp/training.hpp"

namespace camp::training {

// Sort-based projection (Held, Wolfe and Crowder; Duchi et al.).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
    const auto n = v.size();
    if (n == 0) throw std::invalid_argument("cannot project an empty vector onto the simplex");
    if (!v.allFinite()) throw std::domain_error("simplex projection of a non-finite vector");
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0, theta = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        cumsum += u[static_cast<std::size_t>(j)];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
    }
    Eigen::VectorXd out = (v.array() - theta).max(0.0).matrix();
    const double s = out.sum();
    if (s > 0.0) out /= s;
    return out;
}

Eta project_simplex(const Eta& v) {
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXd p = project_simplex(x);
    Eta out{};
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[static_cast<Eigen::Index>(i)];
    return out;
}

}  // namespace camp::training
