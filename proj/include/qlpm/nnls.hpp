#ifndef QLPM_NNLS_HPP
#define QLPM_NNLS_HPP

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace qlpm {

/// Lawson-Hanson active-set solver for min ||A x - b|| subject to x >= 0.
/// Returns the nonnegative solution; `a` is m x n with m >= 1, n >= 1.
inline Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                            int max_iter = 0) {
    const int n = static_cast<int>(a.cols());
    if (max_iter <= 0) max_iter = 3 * n + 30;

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(n, false);
    int n_passive = 0;

    auto solve_passive = [&](Eigen::VectorXd& z) {
        Eigen::MatrixXd ap(a.rows(), n_passive);
        std::vector<int> idx;
        idx.reserve(n_passive);
        for (int j = 0; j < n; ++j)
            if (passive[j]) {
                ap.col(static_cast<int>(idx.size())) = a.col(j);
                idx.push_back(j);
            }
        Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
        z.setZero();
        for (size_t i = 0; i < idx.size(); ++i) z[idx[i]] = zp[i];
        return idx;
    };

    const double w_tol = 1e-11 * (a.transpose() * b).cwiseAbs().maxCoeff() +
                         std::numeric_limits<double>::min();

    for (int outer = 0; outer < max_iter; ++outer) {
        Eigen::VectorXd w = a.transpose() * (b - a * x);
        int best = -1;
        double best_w = w_tol;
        for (int j = 0; j < n; ++j)
            if (!passive[j] && w[j] > best_w) {
                best_w = w[j];
                best = j;
            }
        if (best < 0) break;
        passive[best] = true;
        ++n_passive;

        Eigen::VectorXd z(n);
        auto idx = solve_passive(z);
        int inner_guard = 10 * n + 10;
        while (inner_guard-- > 0) {
            double min_z = 0.0;
            for (int j : idx) min_z = std::min(min_z, z[j]);
            if (min_z > 0.0 || idx.empty()) break;
            // step toward z until the first passive variable hits zero
            double alpha = 1.0;
            for (int j : idx)
                if (z[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
            for (int j : idx) x[j] += alpha * (z[j] - x[j]);
            for (int j : idx)
                if (passive[j] && x[j] <= 1e-14 * std::abs(z[j] - x[j]) + 1e-300 &&
                    z[j] <= 0.0) {
                    passive[j] = false;
                    x[j] = 0.0;
                    --n_passive;
                }
            if (n_passive == 0) break;
            idx = solve_passive(z);
        }
        for (int j = 0; j < n; ++j) x[j] = passive[j] ? std::max(z[j], 0.0) : 0.0;
    }
    return x;
}

} // namespace qlpm

#endif
