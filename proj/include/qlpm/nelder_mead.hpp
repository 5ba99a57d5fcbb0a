#ifndef QLPM_NELDER_MEAD_HPP
#define QLPM_NELDER_MEAD_HPP

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace qlpm {

struct NelderMeadResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
};

/// Derivative-free simplex minimizer with the standard reflection /
/// expansion / contraction / shrink moves. Stops when the function spread
/// over the simplex falls below `f_tol` or the evaluation budget runs out;
/// in the latter case the best iterate so far is returned.
inline NelderMeadResult
nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
            const Eigen::VectorXd& x0, double initial_step = 0.1,
            int max_evals = 2000, double f_tol = 1e-12) {
    const int n = static_cast<int>(x0.size());
    NelderMeadResult result;

    std::vector<Eigen::VectorXd> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    int evals = 0;
    auto eval = [&](const Eigen::VectorXd& x) {
        ++evals;
        return f(x);
    };

    for (int i = 0; i < n; ++i) {
        double step = initial_step * std::max(1.0, std::abs(x0[i]));
        pts[i + 1][i] += step;
    }
    for (int i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

    std::vector<int> order(n + 1);
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return vals[a] < vals[b]; });
        const int best = order[0], worst = order[n], second_worst = order[n - 1];

        if (vals[worst] - vals[best] <=
            f_tol * (std::abs(vals[best]) + std::abs(vals[worst]) + 1e-300)) {
            result.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
        for (int i = 0; i <= n; ++i)
            if (i != worst) centroid += pts[i];
        centroid /= n;

        Eigen::VectorXd reflected = centroid + alpha * (centroid - pts[worst]);
        double f_ref = eval(reflected);
        if (f_ref < vals[best]) {
            Eigen::VectorXd expanded = centroid + gamma * (reflected - centroid);
            double f_exp = eval(expanded);
            if (f_exp < f_ref) {
                pts[worst] = expanded;
                vals[worst] = f_exp;
            } else {
                pts[worst] = reflected;
                vals[worst] = f_ref;
            }
        } else if (f_ref < vals[second_worst]) {
            pts[worst] = reflected;
            vals[worst] = f_ref;
        } else {
            const bool outside = f_ref < vals[worst];
            Eigen::VectorXd contracted =
                outside ? Eigen::VectorXd(centroid + rho * (reflected - centroid))
                        : Eigen::VectorXd(centroid - rho * (centroid - pts[worst]));
            double f_con = eval(contracted);
            if (f_con < std::min(f_ref, vals[worst])) {
                pts[worst] = contracted;
                vals[worst] = f_con;
            } else {
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    pts[i] = pts[best] + sigma * (pts[i] - pts[best]);
                    vals[i] = eval(pts[i]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= n; ++i)
        if (vals[i] < vals[best]) best = i;
    result.x = pts[best];
    result.value = vals[best];
    result.evaluations = evals;
    return result;
}

} // namespace qlpm

#endif
