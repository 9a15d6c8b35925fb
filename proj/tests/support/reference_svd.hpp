#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace camp::testing {

/// Singular values (descending) by one-sided Jacobi rotations in long double.
inline std::vector<long double> reference_singular_values(const Eigen::MatrixXd& m) {
    const bool wide = m.cols() > m.rows();
    const Eigen::Index rows = wide ? m.cols() : m.rows();
    const Eigen::Index cols = wide ? m.rows() : m.cols();
    std::vector<std::vector<long double>> a(static_cast<std::size_t>(cols), std::vector<long double>(static_cast<std::size_t>(rows)));
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            a[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = wide ? m(j, i) : m(i, j);

    for (int sweep = 0; sweep < 100; ++sweep) {
        long double off = 0.0L;
        for (std::size_t p = 0; p + 1 < a.size(); ++p)
            for (std::size_t q = p + 1; q < a.size(); ++q) {
                long double alpha = 0, beta = 0, gamma = 0;
                for (std::size_t i = 0; i < a[p].size(); ++i) {
                    alpha += a[p][i] * a[p][i];
                    beta += a[q][i] * a[q][i];
                    gamma += a[p][i] * a[q][i];
                }
                if (alpha == 0 || beta == 0) continue;
                const long double c0 = std::fabs(gamma) / std::sqrt(alpha * beta);
                off = std::max(off, c0);
                if (c0 < 1e-19L) continue;
                const long double zeta = (beta - alpha) / (2 * gamma);
                const long double t = (zeta >= 0 ? 1 : -1) / (std::fabs(zeta) + std::sqrt(1 + zeta * zeta));
                const long double c = 1 / std::sqrt(1 + t * t);
                const long double s = c * t;
                for (std::size_t i = 0; i < a[p].size(); ++i) {
                    const long double x = a[p][i], y = a[q][i];
                    a[p][i] = c * x - s * y;
                    a[q][i] = s * x + c * y;
                }
            }
        if (off < 1e-19L) break;
    }
    std::vector<long double> sigma;
    for (const auto& col : a) {
        long double n = 0;
        for (long double x : col) n += x * x;
        sigma.push_back(std::sqrt(n));
    }
    std::sort(sigma.rbegin(), sigma.rend());
    return sigma;
}

inline long double reference_nuclear_norm(const Eigen::MatrixXd& m) {
    long double s = 0;
    for (long double v : reference_singular_values(m)) s += v;
    return s;
}

}  // namespace camp::testing
