#ifndef QLPM_EXPFIT_HPP
#define QLPM_EXPFIT_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"
#include "qlpm/nelder_mead.hpp"
#include "qlpm/nnls.hpp"
#include "qlpm/quadrature.hpp"
#include "qlpm/spectral.hpp"

namespace qlpm {

/// Exponential-sum representation C(t) ~ sum_k W_k e^{-z_k t}.
struct ExponentialFit {
    Eigen::VectorXcd exponents;            // z_k
    std::vector<Eigen::MatrixXcd> weights; // W_k, n_sites x n_sites each
    BathStatistics statistics = BathStatistics::BosonZeroT;

    int n_exp() const { return static_cast<int>(exponents.size()); }
    int n_sites() const {
        return weights.empty() ? 1 : static_cast<int>(weights.front().rows());
    }

    Eigen::MatrixXcd eval(double t) const {
        const int n = n_sites();
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
        for (int k = 0; k < n_exp(); ++k)
            out += weights[k] * std::exp(-exponents[k] * t);
        return out;
    }
};

struct FitReport {
    double fit_error = 0.0;     // E_fit = dt * sqrt(sum of squared residuals)
    double max_abs_error = 0.0; // largest entrywise residual on the grid
    int n_exp = 0;
    int dropped_exponents = 0;      // growing modes removed before the refit
    double condition_number = 0.0;  // of the equilibrated design matrix
    bool ill_conditioned = false;   // condition number above 1e12
    bool converged = true;          // optimizer finished within its budget
};

/// Direct Hamiltonian discretization: frequencies and couplings with
/// BCF(t) = sum_k g_k g_k^dagger e^{-i omega_k t}.
struct DiscreteBath {
    Eigen::VectorXd frequencies;  // omega_k
    Eigen::MatrixXcd couplings;   // n_sites x N, column k = g_k
};

// ---------------------------------------------------------------------------
// ESPRIT
// ---------------------------------------------------------------------------

/// ESPRIT exponent extraction from a uniformly sampled scalar signal.
/// Builds the Hankel matrix H_{ab} = c(t_{a+b}) with floor((N+1)/2) rows,
/// takes the n_exp leading left singular vectors and reads the exponents off
/// the eigenvalues of the shifted-subspace map.
inline Eigen::VectorXcd esprit_exponents_signal(const Eigen::VectorXcd& signal,
                                                double dt, int n_exp) {
    const int n_samples = static_cast<int>(signal.size());
    if (n_exp < 1) throw Error("esprit: need n_exp >= 1");
    if (n_samples < 2 * n_exp + 1)
        throw Error("esprit: need at least 2*n_exp + 1 samples");

    const int n_rows = (n_samples + 1) / 2;
    const int n_cols = n_samples - n_rows + 1;
    Eigen::MatrixXcd hankel(n_rows, n_cols);
    for (int a = 0; a < n_rows; ++a)
        for (int b = 0; b < n_cols; ++b) hankel(a, b) = signal[a + b];

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(hankel, Eigen::ComputeThinU);
    const auto& sigma = svd.singularValues();
    if (sigma[n_exp - 1] < 1e-14 * sigma[0])
        throw RankDeficiencyError(
            "esprit: signal supports fewer than the requested " +
            std::to_string(n_exp) + " modes");

    const auto u1 = svd.matrixU().topRows(n_rows - 1).leftCols(n_exp);
    const auto u2 = svd.matrixU().bottomRows(n_rows - 1).leftCols(n_exp);
    const Eigen::MatrixXcd shift =
        (u1.adjoint() * u1).partialPivLu().solve(u1.adjoint() * u2);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(shift, false);
    Eigen::VectorXcd z(n_exp);
    for (int k = 0; k < n_exp; ++k) {
        const Complex lambda = es.eigenvalues()[k];
        if (std::abs(lambda) < 1e-300)
            throw RankDeficiencyError("esprit: vanishing subspace eigenvalue");
        double arg = std::arg(lambda); // (-pi, pi]
        if (arg == M_PI) arg = -M_PI;  // branch convention Im(log) in [-pi, pi)
        z[k] = Complex(-std::log(std::abs(lambda)) / dt, -arg / dt);
        if (std::abs(z[k].imag()) >= M_PI / dt - 1e-9)
            throw AliasingError("esprit: exponent at the Nyquist rate of the grid");
    }
    return z;
}

/// Spec-level wrapper: multi-site callers reduce to a scalar first.
inline Eigen::VectorXcd esprit_exponents(const BcfSamples& samples, int n_exp) {
    if (samples.n_sites() != 1)
        throw Error("esprit_exponents: scalar samples required; reduce first");
    Eigen::VectorXcd signal(samples.n_samples());
    for (int a = 0; a < samples.n_samples(); ++a)
        signal[a] = samples.values[a](0, 0);
    return esprit_exponents_signal(signal, samples.dt(), n_exp);
}

// ---------------------------------------------------------------------------
// Least-squares weights
// ---------------------------------------------------------------------------

struct LsqInfo {
    double condition_number = 0.0;
    bool ill_conditioned = false;
};

/// Entrywise linear least squares for the weights at fixed exponents,
/// solved through the normal equations after scaling every design column to
/// unit norm.
inline std::vector<Eigen::MatrixXcd>
lsq_weights(const BcfSamples& samples, const Eigen::VectorXcd& exponents,
            LsqInfo* info = nullptr) {
    const int n_samples = samples.n_samples();
    const int n_sites = samples.n_sites();
    const int k_modes = static_cast<int>(exponents.size());
    for (int i = 0; i < k_modes; ++i)
        for (int j = i + 1; j < k_modes; ++j)
            if (std::abs(exponents[i] - exponents[j]) <= 1e-12)
                throw Error("lsq_weights: coincident exponents");

    Eigen::MatrixXcd design(n_samples, k_modes);
    for (int a = 0; a < n_samples; ++a)
        for (int k = 0; k < k_modes; ++k)
            design(a, k) = std::exp(-exponents[k] * samples.times[a]);

    Eigen::VectorXd scale(k_modes);
    for (int k = 0; k < k_modes; ++k) {
        scale[k] = design.col(k).norm();
        if (scale[k] == 0.0) scale[k] = 1.0;
        design.col(k) /= scale[k];
    }

    const Eigen::MatrixXcd gram = design.adjoint() * design;
    if (info) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
        const double lo = std::max(es.eigenvalues().minCoeff(), 0.0);
        const double hi = es.eigenvalues().maxCoeff();
        info->condition_number = lo > 0.0 ? std::sqrt(hi / lo)
                                          : std::numeric_limits<double>::infinity();
        info->ill_conditioned = !(info->condition_number < 1e12);
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(gram);

    std::vector<Eigen::MatrixXcd> w(k_modes,
                                    Eigen::MatrixXcd::Zero(n_sites, n_sites));
    Eigen::VectorXcd rhs(n_samples);
    for (int r = 0; r < n_sites; ++r)
        for (int c = 0; c < n_sites; ++c) {
            for (int a = 0; a < n_samples; ++a) rhs[a] = samples.values[a](r, c);
            Eigen::VectorXcd y = lu.solve(design.adjoint() * rhs);
            for (int k = 0; k < k_modes; ++k) w[k](r, c) = y[k] / scale[k];
        }
    return w;
}

// ---------------------------------------------------------------------------
// Error functional
// ---------------------------------------------------------------------------

/// E_fit = dt * sqrt(sum_{jj'} sum_a |C_{jj'}(t_a) - fit|^2) plus the largest
/// entrywise deviation over the grid.
inline FitReport fit_error(const ExponentialFit& fit, const BcfSamples& samples) {
    FitReport report;
    report.n_exp = fit.n_exp();
    double sq = 0.0, worst = 0.0;
    for (int a = 0; a < samples.n_samples(); ++a) {
        const Eigen::MatrixXcd r = samples.values[a] - fit.eval(samples.times[a]);
        sq += r.squaredNorm();
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    report.fit_error = samples.dt() * std::sqrt(sq);
    report.max_abs_error = worst;
    return report;
}

namespace detail {

inline void sort_modes(Eigen::VectorXcd& z, std::vector<Eigen::MatrixXcd>& w) {
    const int k = static_cast<int>(z.size());
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return w[a].cwiseAbs().maxCoeff() > w[b].cwiseAbs().maxCoeff();
    });
    Eigen::VectorXcd zs(k);
    std::vector<Eigen::MatrixXcd> ws(k);
    for (int i = 0; i < k; ++i) {
        zs[i] = z[order[i]];
        ws[i] = w[order[i]];
    }
    z.swap(zs);
    w.swap(ws);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Complex-weight fit (ESPRIT + least squares)
// ---------------------------------------------------------------------------

inline std::pair<ExponentialFit, FitReport>
fit_complex(const BcfSamples& samples, int n_exp) {
    Eigen::VectorXcd signal = samples.n_sites() > 1 ? samples.entry_sum()
                                                    : [&] {
                                                          Eigen::VectorXcd s(samples.n_samples());
                                                          for (int a = 0; a < samples.n_samples(); ++a)
                                                              s[a] = samples.values[a](0, 0);
                                                          return s;
                                                      }();
    Eigen::VectorXcd z = esprit_exponents_signal(signal, samples.dt(), n_exp);

    // Growing exponentials are rejected outright; the weights are refit on
    // the surviving modes.
    std::vector<Complex> kept;
    for (int k = 0; k < z.size(); ++k)
        if (z[k].real() >= -1e-10) kept.push_back(z[k]);
    const int dropped = n_exp - static_cast<int>(kept.size());
    Eigen::VectorXcd zk = Eigen::Map<Eigen::VectorXcd>(kept.data(), kept.size());

    LsqInfo info;
    ExponentialFit fit;
    fit.statistics = samples.statistics;
    fit.exponents = zk;
    fit.weights = lsq_weights(samples, zk, &info);
    detail::sort_modes(fit.exponents, fit.weights);

    FitReport report = fit_error(fit, samples);
    report.dropped_exponents = dropped;
    report.condition_number = info.condition_number;
    report.ill_conditioned = info.ill_conditioned;
    return {fit, report};
}

// ---------------------------------------------------------------------------
// Positive-weight fit (Lorentzian pseudomode ansatz)
// ---------------------------------------------------------------------------

struct PositiveFitOptions {
    /// Window of the spectral support used for the Gauss-Legendre placement
    /// of the initial mode energies. Defaults to [0, pi/(2 dt)].
    std::optional<std::pair<double, double>> support;
    int max_evaluations = 2000;
};

namespace detail {

// Real-stacked design for nonnegative scalar weights.
inline Eigen::MatrixXd stacked_design(const Eigen::VectorXcd& z,
                                      const Eigen::VectorXd& times) {
    const int n = static_cast<int>(times.size());
    const int k_modes = static_cast<int>(z.size());
    Eigen::MatrixXd a(2 * n, k_modes);
    for (int k = 0; k < k_modes; ++k)
        for (int i = 0; i < n; ++i) {
            const Complex e = std::exp(-z[k] * times[i]);
            a(i, k) = e.real();
            a(n + i, k) = e.imag();
        }
    return a;
}

// Inner solve for the scalar case: nonnegative least squares.
inline Eigen::VectorXd positive_scalar_weights(const Eigen::VectorXcd& z,
                                               const Eigen::VectorXd& times,
                                               const Eigen::VectorXcd& signal) {
    const int n = static_cast<int>(times.size());
    Eigen::VectorXd b(2 * n);
    for (int i = 0; i < n; ++i) {
        b[i] = signal[i].real();
        b[n + i] = signal[i].imag();
    }
    return nnls(stacked_design(z, times), b);
}

// Inner solve for the matrix case: accelerated projected gradient descent on
// the convex problem min sum_a ||C(t_a) - sum_k W_k e^{-z_k t_a}||_F^2 over
// Hermitian PSD W_k. The PSD projection clips negative eigenvalues.
inline std::vector<Eigen::MatrixXcd>
positive_matrix_weights(const Eigen::VectorXcd& z, const BcfSamples& samples,
                        int iterations = 300) {
    const int k_modes = static_cast<int>(z.size());
    const int n = samples.n_sites();
    const int n_samples = samples.n_samples();

    Eigen::MatrixXcd design(n_samples, k_modes);
    for (int a = 0; a < n_samples; ++a)
        for (int k = 0; k < k_modes; ++k)
            design(a, k) = std::exp(-z[k] * samples.times[a]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> gram(design.adjoint() * design);
    const double lipschitz = 2.0 * gram.eigenvalues().maxCoeff();
    const double step = 1.0 / std::max(lipschitz, 1e-300);

    auto project_psd = [](const Eigen::MatrixXcd& m) {
        const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        return Eigen::MatrixXcd(es.eigenvectors() * ev.asDiagonal() *
                                es.eigenvectors().adjoint());
    };

    std::vector<Eigen::MatrixXcd> w(k_modes, Eigen::MatrixXcd::Zero(n, n));
    std::vector<Eigen::MatrixXcd> momentum = w, prev = w;
    double t_accel = 1.0;
    for (int it = 0; it < iterations; ++it) {
        // residuals at the momentum point
        std::vector<Eigen::MatrixXcd> resid(n_samples);
        for (int a = 0; a < n_samples; ++a) {
            Eigen::MatrixXcd r = samples.values[a];
            for (int k = 0; k < k_modes; ++k) r -= momentum[k] * design(a, k);
            resid[a] = r;
        }
        prev = w;
        double change = 0.0;
        for (int k = 0; k < k_modes; ++k) {
            Eigen::MatrixXcd grad = Eigen::MatrixXcd::Zero(n, n);
            for (int a = 0; a < n_samples; ++a)
                grad -= 2.0 * std::conj(design(a, k)) * resid[a];
            w[k] = project_psd(momentum[k] - step * grad);
            change = std::max(change, (w[k] - prev[k]).norm());
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_accel * t_accel));
        for (int k = 0; k < k_modes; ++k)
            momentum[k] = w[k] + ((t_accel - 1.0) / t_next) * (w[k] - prev[k]);
        t_accel = t_next;
        if (change < 1e-12) break;
    }
    return w;
}

} // namespace detail

/// Positive-weight exponential fit: derivative-free minimization over the
/// exponents with an exact inner solve for the weights (nonnegative least
/// squares in the scalar case, PSD-projected least squares for matrices).
/// Initial energies follow Gauss-Legendre nodes on the spectral support and
/// initial decay rates 0.1 * width / n_exp.
inline std::pair<ExponentialFit, FitReport>
fit_positive(const BcfSamples& samples, int n_exp,
             const PositiveFitOptions& options = {}) {
    const int n_sites = samples.n_sites();
    const double dt = samples.dt();

    ExponentialFit fit;
    fit.statistics = samples.statistics;
    if (n_exp == 0) {
        fit.exponents = Eigen::VectorXcd();
        FitReport report = fit_error(fit, samples);
        return {fit, report};
    }

    Eigen::VectorXcd signal(samples.n_samples());
    for (int a = 0; a < samples.n_samples(); ++a)
        signal[a] = n_sites > 1 ? samples.values[a].sum() : samples.values[a](0, 0);

    const auto [lo, hi] =
        options.support.value_or(std::make_pair(0.0, 0.5 * M_PI / dt));
    auto [nodes, gl_weights] = gauss_legendre(n_exp, lo, hi);
    (void)gl_weights;
    const double re0 = 0.1 * (hi - lo) / n_exp;

    Eigen::VectorXd x0(2 * n_exp);
    for (int k = 0; k < n_exp; ++k) {
        x0[k] = re0;
        x0[n_exp + k] = nodes[k];
    }

    auto unpack = [n_exp](const Eigen::VectorXd& x) {
        Eigen::VectorXcd z(n_exp);
        for (int k = 0; k < n_exp; ++k)
            z[k] = Complex(std::abs(x[k]), x[n_exp + k]);
        return z;
    };

    auto objective = [&](const Eigen::VectorXd& x) {
        const Eigen::VectorXcd z = unpack(x);
        if (n_sites == 1) {
            Eigen::VectorXd w =
                detail::positive_scalar_weights(z, samples.times, signal);
            double sq = 0.0;
            for (int a = 0; a < samples.n_samples(); ++a) {
                Complex r = signal[a];
                for (int k = 0; k < n_exp; ++k)
                    r -= w[k] * std::exp(-z[k] * samples.times[a]);
                sq += std::norm(r);
            }
            return dt * std::sqrt(sq);
        }
        auto w = detail::positive_matrix_weights(z, samples, 120);
        ExponentialFit trial{z, w, samples.statistics};
        return fit_error(trial, samples).fit_error;
    };

    NelderMeadResult nm =
        nelder_mead(objective, x0, 0.15, options.max_evaluations);

    fit.exponents = unpack(nm.x);
    if (n_sites == 1) {
        Eigen::VectorXd w =
            detail::positive_scalar_weights(fit.exponents, samples.times, signal);
        fit.weights.assign(n_exp, Eigen::MatrixXcd::Zero(1, 1));
        for (int k = 0; k < n_exp; ++k) fit.weights[k](0, 0) = w[k];
    } else {
        fit.weights = detail::positive_matrix_weights(fit.exponents, samples, 600);
    }
    detail::sort_modes(fit.exponents, fit.weights);

    FitReport report = fit_error(fit, samples);
    report.converged = nm.converged;
    return {fit, report};
}

// ---------------------------------------------------------------------------
// Direct Hamiltonian discretization
// ---------------------------------------------------------------------------

/// Gauss-Legendre bath discretization: node frequencies with couplings
/// g_{jk} = g_j(omega_k) sqrt(weight_k) using the rank factorization of J.
inline DiscreteBath
discretize_hamiltonian(const SpectralDensity& j, int n_modes,
                       std::optional<std::pair<double, double>> window = {}) {
    if (n_modes < 1) throw Error("discretize_hamiltonian: need n_modes >= 1");
    const auto [lo, hi] = window.value_or(j.discretization_support());
    auto [nodes, weights] = gauss_legendre(n_modes, lo, hi);
    DiscreteBath bath;
    bath.frequencies = nodes;
    bath.couplings.resize(j.n_sites(), n_modes);
    for (int k = 0; k < n_modes; ++k)
        bath.couplings.col(k) = j.coupling_vector(nodes[k]) * std::sqrt(weights[k]);
    return bath;
}

/// View a discrete bath as an exponential sum so it can be scored with
/// fit_error: z_k = +/- i omega_k and W_k = g_k g_k^dagger.
inline ExponentialFit discrete_bath_fit(const DiscreteBath& bath,
                                        BathStatistics statistics) {
    ExponentialFit fit;
    fit.statistics = statistics;
    const int n = static_cast<int>(bath.frequencies.size());
    fit.exponents.resize(n);
    fit.weights.reserve(n);
    const double sign = statistics == BathStatistics::FermionLesser ? -1.0 : 1.0;
    for (int k = 0; k < n; ++k) {
        fit.exponents[k] = Complex(0.0, sign * bath.frequencies[k]);
        fit.weights.push_back(bath.couplings.col(k) *
                              bath.couplings.col(k).adjoint());
    }
    return fit;
}

} // namespace qlpm

#endif
