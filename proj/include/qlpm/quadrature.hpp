#ifndef QLPM_QUADRATURE_HPP
#define QLPM_QUADRATURE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"

namespace qlpm {

using Complex = std::complex<double>;

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK dqk15
// constants; positive half of the symmetric node set).
inline constexpr double kGk15Nodes[8] = {
    0.9914553711208126392068547, 0.9491079123427585245261897,
    0.8648644233597690727897128, 0.7415311855993944398638648,
    0.5860872354676911302941448, 0.4058451513773971669066064,
    0.2077849550078984676006894, 0.0};
inline constexpr double kGk15Weights[8] = {
    0.0229353220105292249637320, 0.0630920926299785532907007,
    0.1047900103222501838398763, 0.1406532597155259187451896,
    0.1690047266392679028265834, 0.1903505780647854099132564,
    0.2044329400752988924141620, 0.2094821410847278280129992};
inline constexpr double kG7Weights[4] = {
    0.1294849661688696932706114, 0.2797053914892766679014678,
    0.3818300505051189449503698, 0.4179591836734693877551020};

template <typename F>
std::pair<Complex, double> gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Complex fc = f(c);
    Complex kronrod = kGk15Weights[7] * fc;
    Complex gauss = kG7Weights[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = h * kGk15Nodes[i];
        const Complex fsum = f(c - dx) + f(c + dx);
        kronrod += kGk15Weights[i] * fsum;
        if (i % 2 == 1) gauss += kG7Weights[i / 2] * fsum;
    }
    kronrod *= h;
    gauss *= h;
    return {kronrod, std::abs(kronrod - gauss)};
}

template <typename F>
void gk15_adaptive(const F& f, double a, double b, double tol, int depth,
                   Complex& value, double& err_accum) {
    auto [v, e] = gk15(f, a, b);
    if (e <= tol || depth <= 0) {
        value += v;
        err_accum += e;
        return;
    }
    const double m = 0.5 * (a + b);
    gk15_adaptive(f, a, m, 0.5 * tol, depth - 1, value, err_accum);
    gk15_adaptive(f, m, b, 0.5 * tol, depth - 1, value, err_accum);
}

} // namespace detail

/// Adaptive Gauss-Kronrod integration of a complex-valued integrand on [a, b]
/// to absolute tolerance `tol`. Throws QuadratureError if the error estimate
/// of the refined rule still exceeds the tolerance.
template <typename F>
Complex integrate(const F& f, double a, double b, double tol = 1e-10,
                  int max_depth = 28) {
    if (a == b) return Complex(0.0);
    Complex value(0.0);
    double err = 0.0;
    detail::gk15_adaptive(f, a, b, tol, max_depth, value, err);
    if (err > std::max(tol, 1e-13 * std::abs(value)))
        throw QuadratureError("adaptive Gauss-Kronrod did not converge", err, tol);
    return value;
}

/// Integrate f(x) on [a, b] where f carries a phase whose derivative is
/// bounded by `rate`. The interval is split into panels no wider than
/// pi/(4*rate) so each panel sees less than a quarter oscillation, then each
/// panel is handled by the adaptive rule.
template <typename F>
Complex integrate_oscillatory(const F& f, double a, double b, double rate,
                              double tol = 1e-10) {
    if (a == b) return Complex(0.0);
    const double width = b - a;
    int n_panels = 1;
    if (rate > 0.0) {
        const double max_panel = M_PI / (4.0 * rate);
        n_panels = static_cast<int>(std::ceil(width / max_panel));
        n_panels = std::clamp(n_panels, 1, 200000);
    }
    Complex value(0.0);
    double err = 0.0;
    const double panel_tol = tol / static_cast<double>(n_panels);
    for (int p = 0; p < n_panels; ++p) {
        const double lo = a + width * p / n_panels;
        const double hi = a + width * (p + 1) / n_panels;
        detail::gk15_adaptive(f, lo, hi, panel_tol, 22, value, err);
    }
    if (err > std::max(tol, 1e-13 * std::abs(value)))
        throw QuadratureError("oscillatory panel quadrature did not converge",
                              err, tol);
    return value;
}

/// Gauss-Legendre nodes and weights on [-1, 1] via the Golub-Welsch
/// eigenvalue method on the Jacobi matrix.
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
    if (n < 1) throw Error("gauss_legendre: need n >= 1");
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double beta = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = beta;
        jacobi(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    Eigen::VectorXd nodes = es.eigenvalues();
    Eigen::VectorXd weights(n);
    for (int k = 0; k < n; ++k) {
        const double v0 = es.eigenvectors()(0, k);
        weights[k] = 2.0 * v0 * v0;
    }
    return {nodes, weights};
}

/// Gauss-Legendre rule mapped to [a, b].
inline std::pair<Eigen::VectorXd, Eigen::VectorXd>
gauss_legendre(int n, double a, double b) {
    auto [x, w] = gauss_legendre(n);
    Eigen::VectorXd nodes = (0.5 * (b - a) * x.array() + 0.5 * (b + a)).matrix();
    Eigen::VectorXd weights = 0.5 * (b - a) * w;
    return {nodes, weights};
}

} // namespace qlpm

#endif
