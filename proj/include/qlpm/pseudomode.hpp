#ifndef QLPM_PSEUDOMODE_HPP
#define QLPM_PSEUDOMODE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"
#include "qlpm/expfit.hpp"

namespace qlpm {

/// Per-mode gauge parameters kappa_k (all 1 selects the minimal-|M| gauge).
struct GaugeChoice {
    Eigen::VectorXcd kappa;

    static GaugeChoice identity(int n_modes) {
        GaugeChoice g;
        g.kappa = Eigen::VectorXcd::Ones(n_modes);
        return g;
    }
    static GaugeChoice uniform(int n_modes, Complex kappa) {
        GaugeChoice g;
        g.kappa = Eigen::VectorXcd::Constant(n_modes, kappa);
        return g;
    }
};

/// Split a scalar weight w into coupling amplitudes under the gauge kappa:
///   V - iM = kappa sqrt(w),   V + iM = conj(sqrt(w)) / conj(kappa),
/// which keeps (V - iM)(V* - iM*) = w exact for every kappa (including w on
/// the negative real axis, where conj(sqrt(w)) and sqrt(conj(w)) differ).
inline std::pair<Complex, Complex> gauge_single(Complex w, Complex kappa) {
    if (kappa == Complex(0.0)) throw Error("gauge_single: kappa must be nonzero");
    if (w == Complex(0.0)) return {Complex(0.0), Complex(0.0)};
    const Complex root = std::sqrt(w);
    const Complex a = kappa * root;              // V - iM
    const Complex b = std::conj(root) / std::conj(kappa); // V + iM
    return {0.5 * (a + b), Complex(0.0, 0.5) * (a - b)};
}

/// Minimal-|M| gauge (kappa = 1): V = Re sqrt(w), M = -Im sqrt(w), both real.
inline std::pair<double, double> gauge_min_m(Complex w) {
    const Complex root = std::sqrt(w);
    return {root.real(), -root.imag()};
}

/// Quasi-Lindblad pseudomode model: diagonal Z and coupling matrices V, M.
struct PseudomodeModel {
    Eigen::VectorXcd z;     // z_k, Re z_k = gamma_k >= 0
    Eigen::MatrixXcd v;     // n_sites x n_modes
    Eigen::MatrixXcd m;     // n_sites x n_modes
    BathStatistics statistics = BathStatistics::BosonZeroT;
    Eigen::VectorXcd kappa; // gauge record, one entry per mode

    int n_modes() const { return static_cast<int>(z.size()); }
    int n_sites() const { return static_cast<int>(v.rows()); }

    Eigen::MatrixXcd v_minus_im() const { return v - Complex(0, 1) * m; }
    Eigen::MatrixXcd v_plus_im() const { return v + Complex(0, 1) * m; }
};

/// Closed-form model correlation function.
/// boson / fermion-greater: (V-iM) diag(e^{-z t}) (V+iM)^dagger
/// fermion-lesser:          (V-iM)^* diag(e^{-z t}) (V+iM)^T
inline Eigen::MatrixXcd model_bcf(const PseudomodeModel& model, double t) {
    if (t < 0.0) throw Error("model_bcf: t must be >= 0");
    Eigen::VectorXcd phases(model.n_modes());
    for (int k = 0; k < model.n_modes(); ++k)
        phases[k] = std::exp(-model.z[k] * t);
    const Eigen::MatrixXcd a = model.v_minus_im();
    const Eigen::MatrixXcd b = model.v_plus_im();
    if (model.statistics == BathStatistics::FermionLesser)
        return a.conjugate() * phases.asDiagonal() * b.transpose();
    return a * phases.asDiagonal() * b.adjoint();
}

/// Build the pseudomode model from an exponential fit. Scalar weights go
/// through the kappa gauge; matrix weights are split by SVD into one
/// sub-mode per retained singular value, all sharing the exponent z_k.
inline PseudomodeModel from_fit(const ExponentialFit& fit,
                                const GaugeChoice& gauge) {
    const int n_sites = fit.n_sites();
    const int k_modes = fit.n_exp();
    const bool lesser = fit.statistics == BathStatistics::FermionLesser;

    for (int k = 0; k < k_modes; ++k)
        if (fit.exponents[k].real() < -1e-10)
            throw Error("from_fit: growing exponential in the fit");

    // deterministic mode order: descending dominant singular value
    std::vector<int> order(k_modes);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> strength(k_modes);
    for (int k = 0; k < k_modes; ++k)
        strength[k] = n_sites == 1
                          ? std::abs(fit.weights[k](0, 0))
                          : fit.weights[k].jacobiSvd().singularValues()[0];
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return strength[a] > strength[b]; });

    PseudomodeModel model;
    model.statistics = fit.statistics;

    if (n_sites == 1) {
        Eigen::VectorXcd kappa = gauge.kappa.size() == k_modes
                                     ? gauge.kappa
                                     : Eigen::VectorXcd::Ones(k_modes);
        model.z.resize(k_modes);
        model.v.resize(1, k_modes);
        model.m.resize(1, k_modes);
        model.kappa.resize(k_modes);
        for (int i = 0; i < k_modes; ++i) {
            const int k = order[i];
            Complex w = fit.weights[k](0, 0);
            if (lesser) w = std::conj(w);
            auto [v, m] = gauge_single(w, kappa[k]);
            model.z[i] = fit.exponents[k];
            model.v(0, i) = v;
            model.m(0, i) = m;
            model.kappa[i] = kappa[k];
        }
        return model;
    }

    std::vector<Complex> z_out;
    std::vector<Eigen::VectorXcd> a_cols, b_cols;
    for (int i = 0; i < k_modes; ++i) {
        const int k = order[i];
        Eigen::MatrixXcd w = fit.weights[k];
        if (lesser) w = w.conjugate();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
            w, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const auto& sigma = svd.singularValues();
        for (int s = 0; s < sigma.size(); ++s) {
            if (sigma[s] < 1e-12 * sigma[0]) break;
            Eigen::VectorXcd u = svd.matrixU().col(s);
            Eigen::VectorXcd ut = svd.matrixV().col(s);
            // fix the SVD phase: largest entry of u real positive
            int imax = 0;
            for (int r = 1; r < u.size(); ++r)
                if (std::abs(u[r]) > std::abs(u[imax])) imax = r;
            const Complex phase =
                std::abs(u[imax]) > 0.0 ? u[imax] / std::abs(u[imax]) : Complex(1.0);
            u /= phase;
            ut /= phase;
            z_out.push_back(fit.exponents[k]);
            a_cols.push_back(u * std::sqrt(sigma[s]));
            b_cols.push_back(ut * std::sqrt(sigma[s]));
        }
    }

    const int n_total = static_cast<int>(z_out.size());
    model.z.resize(n_total);
    model.v.resize(n_sites, n_total);
    model.m.resize(n_sites, n_total);
    model.kappa = Eigen::VectorXcd::Ones(n_total);
    for (int n = 0; n < n_total; ++n) {
        model.z[n] = z_out[n];
        model.v.col(n) = 0.5 * (a_cols[n] + b_cols[n]);
        model.m.col(n) = Complex(0.0, 0.5) * (a_cols[n] - b_cols[n]);
    }
    return model;
}

struct GammaTilde {
    Eigen::MatrixXcd matrix; // (n_sites + n_modes)^2 block form
    bool is_cp = false;      // PSD up to -1e-12, holds iff M = 0
};

/// Dissipator coefficient block matrix [[0, M], [M^dagger, Gamma]].
inline GammaTilde lindbladian_gamma_tilde(const PseudomodeModel& model) {
    const int ns = model.n_sites();
    const int nk = model.n_modes();
    GammaTilde out;
    out.matrix = Eigen::MatrixXcd::Zero(ns + nk, ns + nk);
    out.matrix.block(0, ns, ns, nk) = model.m;
    out.matrix.block(ns, 0, nk, ns) = model.m.adjoint();
    for (int k = 0; k < nk; ++k)
        out.matrix(ns + k, ns + k) = model.z[k].real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(out.matrix);
    out.is_cp = es.eigenvalues().minCoeff() >= -1e-12;
    return out;
}

} // namespace qlpm

#endif
