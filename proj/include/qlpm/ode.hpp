#ifndef QLPM_ODE_HPP
#define QLPM_ODE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"

namespace qlpm {

struct OdeOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    /// Stop (and flag) once the state norm exceeds this; infinity disables.
    double divergence_norm = std::numeric_limits<double>::infinity();
};

struct OdeStatus {
    bool diverged = false;
    double t_reached = 0.0;
};

/// Embedded Dormand-Prince 5(4) integrator with PI-free step control.
/// `deriv(t, y, dydt)` fills the derivative; `on_grid(i, y)` is invoked at
/// every requested grid time. The state may be any Eigen complex vector or
/// matrix type.
template <typename State, typename Deriv, typename OnGrid>
OdeStatus integrate_ode(const Deriv& deriv, State y,
                        const Eigen::VectorXd& t_grid, const OdeOptions& opts,
                        const OnGrid& on_grid) {
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600,
                        e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640,
                        e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    OdeStatus status;
    if (t_grid.size() == 0) return status;
    double t = t_grid[0];
    on_grid(0, y);

    State k1 = y, k2 = y, k3 = y, k4 = y, k5 = y, k6 = y, k7 = y, ytmp = y,
          ynew = y;
    deriv(t, y, k1);
    bool fsal_valid = true;

    const double span = t_grid[t_grid.size() - 1] - t_grid[0];
    double dt = std::min(opts.max_step, span > 0 ? 1e-4 * span : 1e-4);

    for (int i = 1; i < t_grid.size(); ++i) {
        const double t_target = t_grid[i];
        while (t < t_target) {
            dt = std::min({dt, t_target - t, opts.max_step});
            if (!(dt > std::abs(t) * 1e-15 + 1e-300))
                throw StepUnderflowError("integrator step size underflow", t);

            if (!fsal_valid) deriv(t, y, k1);
            ytmp = y + dt * (a21 * k1);
            deriv(t + c2 * dt, ytmp, k2);
            ytmp = y + dt * (a31 * k1 + a32 * k2);
            deriv(t + c3 * dt, ytmp, k3);
            ytmp = y + dt * (a41 * k1 + a42 * k2 + a43 * k3);
            deriv(t + c4 * dt, ytmp, k4);
            ytmp = y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            deriv(t + c5 * dt, ytmp, k5);
            ytmp = y + dt * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            deriv(t + dt, ytmp, k6);
            ynew = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            deriv(t + dt, ynew, k7);

            // scaled RMS error of the embedded 4th-order difference
            const auto err_vec =
                (dt * (e1 * k1.array() + e3 * k3.array() + e4 * k4.array() +
                       e5 * k5.array() + e6 * k6.array() + e7 * k7.array()))
                    .abs();
            const auto scale = opts.abs_tol +
                               opts.rel_tol * y.array().abs().max(ynew.array().abs());
            const double err =
                std::sqrt((err_vec / scale).square().sum() /
                          static_cast<double>(y.size()));

            if (err <= 1.0) {
                t += dt;
                y.swap(ynew);
                k1.swap(k7); // first-same-as-last
                fsal_valid = true;
                if (y.norm() > opts.divergence_norm) {
                    status.diverged = true;
                    status.t_reached = t;
                    return status;
                }
            } else {
                fsal_valid = true; // k1 still belongs to y
            }
            const double factor =
                std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
            dt *= factor;
        }
        on_grid(i, y);
    }
    status.t_reached = t;
    return status;
}

} // namespace qlpm

#endif
