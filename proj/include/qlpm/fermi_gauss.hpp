#ifndef QLPM_FERMI_GAUSS_HPP
#define QLPM_FERMI_GAUSS_HPP

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"
#include "qlpm/expfit.hpp"
#include "qlpm/lapack.hpp"
#include "qlpm/ode.hpp"
#include "qlpm/pseudomode.hpp"
#include "qlpm/trajectory.hpp"

namespace qlpm {

/// Noninteracting impurity plus one greater and one lesser pseudomode bath.
struct FermiSetup {
    Eigen::MatrixXcd h_s;          // one-body impurity Hamiltonian block
    PseudomodeModel model_greater; // bath A1, z = gamma + iE
    PseudomodeModel model_lesser;  // bath A2, z = gamma - iE
    Eigen::MatrixXcd p0_impurity;  // initial impurity 1-RDM

    int d_s() const { return static_cast<int>(h_s.rows()); }
    int n1() const { return model_greater.n_modes(); }
    int n2() const { return model_lesser.n_modes(); }

    void validate() const {
        if ((h_s - h_s.adjoint()).norm() > 1e-12 * std::max(1.0, h_s.norm()))
            throw Error("FermiSetup: h_s must be Hermitian");
        if (model_greater.statistics != BathStatistics::FermionGreater ||
            model_lesser.statistics != BathStatistics::FermionLesser)
            throw Error("FermiSetup: bath statistics tags are wrong");
        if (model_greater.n_sites() != d_s() || model_lesser.n_sites() != d_s())
            throw Error("FermiSetup: bath site count must match the impurity");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p0_impurity);
        if (es.eigenvalues().minCoeff() < -1e-10 ||
            es.eigenvalues().maxCoeff() > 1.0 + 1e-10)
            throw Error("FermiSetup: impurity 1-RDM eigenvalues must lie in [0, 1]");
    }
};

/// Matrices of the differential Lyapunov equation dP/dt = X P + P X^dag + Y.
struct LyapunovSystem {
    Eigen::MatrixXcd x;
    Eigen::MatrixXcd y;
    int d_s = 0;
    int n1 = 0;
    int n2 = 0;

    int size() const { return d_s + n1 + n2; }
};

/// Block assembly of X and Y from the pseudomode parameters.
inline LyapunovSystem build_xy(const FermiSetup& setup) {
    setup.validate();
    LyapunovSystem sys;
    sys.d_s = setup.d_s();
    sys.n1 = setup.n1();
    sys.n2 = setup.n2();
    const int n = sys.size();
    const Complex mi(0.0, -1.0);

    const auto& g = setup.model_greater;
    const auto& le = setup.model_lesser;

    sys.x = Eigen::MatrixXcd::Zero(n, n);
    sys.x.topLeftCorner(sys.d_s, sys.d_s) = mi * setup.h_s;
    sys.x.block(0, sys.d_s, sys.d_s, sys.n1) = mi * g.v - g.m;
    sys.x.block(0, sys.d_s + sys.n1, sys.d_s, sys.n2) = mi * le.v - le.m;
    sys.x.block(sys.d_s, 0, sys.n1, sys.d_s) = mi * g.v.adjoint() - g.m.adjoint();
    sys.x.block(sys.d_s + sys.n1, 0, sys.n2, sys.d_s) =
        mi * le.v.adjoint() - le.m.adjoint();
    for (int k = 0; k < sys.n1; ++k)
        sys.x(sys.d_s + k, sys.d_s + k) = -g.z[k];
    for (int k = 0; k < sys.n2; ++k)
        sys.x(sys.d_s + sys.n1 + k, sys.d_s + sys.n1 + k) = -le.z[k];

    sys.y = Eigen::MatrixXcd::Zero(n, n);
    sys.y.block(0, sys.d_s + sys.n1, sys.d_s, sys.n2) = 2.0 * le.m;
    sys.y.block(sys.d_s + sys.n1, 0, sys.n2, sys.d_s) = 2.0 * le.m.adjoint();
    for (int k = 0; k < sys.n2; ++k)
        sys.y(sys.d_s + sys.n1 + k, sys.d_s + sys.n1 + k) = 2.0 * le.z[k].real();
    return sys;
}

/// Initial 1-RDM: impurity block as given, greater bath empty, lesser bath
/// filled, no cross coherence.
inline Eigen::MatrixXcd lyapunov_initial(const LyapunovSystem& sys,
                                         const Eigen::MatrixXcd& p0_impurity) {
    Eigen::MatrixXcd p0 = Eigen::MatrixXcd::Zero(sys.size(), sys.size());
    p0.topLeftCorner(sys.d_s, sys.d_s) = p0_impurity;
    p0.block(sys.d_s + sys.n1, sys.d_s + sys.n1, sys.n2, sys.n2) =
        Eigen::MatrixXcd::Identity(sys.n2, sys.n2);
    return p0;
}

struct LyapunovOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    double divergence_norm = 1e9;
    bool store_full = false;
};

/// Integrate the matrix ODE and report impurity occupations n_j(t) = P_jj(t).
inline Trajectory propagate_lyapunov(const LyapunovSystem& sys,
                                     const Eigen::MatrixXcd& p0,
                                     const Eigen::VectorXd& t_grid,
                                     const LyapunovOptions& options = {}) {
    const int n = sys.size();
    if (p0.rows() != n || p0.cols() != n)
        throw Error("propagate_lyapunov: initial matrix dimension mismatch");
    if ((p0 - p0.adjoint()).norm() > 1e-10)
        throw Error("propagate_lyapunov: initial matrix must be Hermitian");

    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> reduced, full;
    std::vector<std::vector<Complex>> occ(sys.d_s);

    auto deriv = [&](double, const Eigen::MatrixXcd& p, Eigen::MatrixXcd& dp) {
        dp.noalias() = sys.x * p;
        dp.noalias() += p * sys.x.adjoint();
        dp += sys.y;
    };
    auto on_grid = [&](int i, const Eigen::MatrixXcd& p) {
        times.push_back(t_grid[i]);
        reduced.push_back(p.topLeftCorner(sys.d_s, sys.d_s));
        if (options.store_full) full.push_back(p);
        for (int j = 0; j < sys.d_s; ++j) occ[j].push_back(p(j, j));
    };

    OdeOptions ode;
    ode.rel_tol = options.rel_tol;
    ode.abs_tol = options.abs_tol;
    ode.divergence_norm = options.divergence_norm;
    OdeStatus status =
        integrate_ode(deriv, Eigen::MatrixXcd(p0), t_grid, ode, on_grid);

    Trajectory out;
    const int nt = static_cast<int>(times.size());
    out.times = Eigen::Map<Eigen::VectorXd>(times.data(), nt);
    out.reduced_state = std::move(reduced);
    out.full_state = std::move(full);
    for (int j = 0; j < sys.d_s; ++j) {
        out.observable_names.push_back("n_" + std::to_string(j));
        out.observable_values.push_back(
            Eigen::Map<Eigen::VectorXcd>(occ[j].data(), nt));
    }
    out.trace_drift = Eigen::VectorXd::Zero(nt);
    out.diverged = status.diverged;
    out.divergence_time = status.t_reached;
    return out;
}

/// Exact unitary reference: Gauss-Legendre discretization of the two
/// occupation windows, eigendecomposition of the one-body Hamiltonian, and
/// the closed-form evolution P(t) = e^{-iHt} P(0) e^{iHt}.
inline Trajectory exact_reference(const SpectralDensity& j,
                                  const Eigen::MatrixXcd& h_s,
                                  const Eigen::MatrixXcd& p0_impurity,
                                  int n_modes, const Eigen::VectorXd& t_grid) {
    if (j.circle_support() != SemicircleSupport::Symmetric ||
        j.kind() == SpectralDensity::Kind::Subohmic)
        throw Error("exact_reference: support must straddle omega = 0");
    const int d_s = static_cast<int>(h_s.rows());
    const int half = n_modes / 2;
    if (half < 1) throw Error("exact_reference: need at least 2 modes");
    const double w = j.width();
    auto filled = discretize_hamiltonian(j, half, std::make_pair(-w, 0.0));
    auto empty = discretize_hamiltonian(j, half, std::make_pair(0.0, w));

    const int n = d_s + 2 * half;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    h.topLeftCorner(d_s, d_s) = h_s;
    for (int k = 0; k < half; ++k) {
        h(d_s + k, d_s + k) = filled.frequencies[k];
        h(d_s + half + k, d_s + half + k) = empty.frequencies[k];
        for (int r = 0; r < d_s; ++r) {
            h(r, d_s + k) = filled.couplings(r, k);
            h(d_s + k, r) = std::conj(filled.couplings(r, k));
            h(r, d_s + half + k) = empty.couplings(r, k);
            h(d_s + half + k, r) = std::conj(empty.couplings(r, k));
        }
    }

    Eigen::MatrixXcd p0 = Eigen::MatrixXcd::Zero(n, n);
    p0.topLeftCorner(d_s, d_s) = p0_impurity;
    p0.block(d_s, d_s, half, half) = Eigen::MatrixXcd::Identity(half, half);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::MatrixXcd w0 = es.eigenvectors().adjoint() * p0 * es.eigenvectors();
    const Eigen::MatrixXcd u_imp = es.eigenvectors().topRows(d_s);

    Trajectory out;
    out.times = t_grid;
    const int nt = static_cast<int>(t_grid.size());
    out.reduced_state.reserve(nt);
    std::vector<std::vector<Complex>> occ(d_s);
    for (int i = 0; i < nt; ++i) {
        Eigen::VectorXcd phase(n);
        for (int q = 0; q < n; ++q)
            phase[q] = std::exp(Complex(0.0, -es.eigenvalues()[q] * t_grid[i]));
        const Eigen::MatrixXcd p_imp = u_imp * phase.asDiagonal() * w0 *
                                       phase.conjugate().asDiagonal() *
                                       u_imp.adjoint();
        out.reduced_state.push_back(p_imp);
        for (int r = 0; r < d_s; ++r) occ[r].push_back(p_imp(r, r));
    }
    for (int r = 0; r < d_s; ++r) {
        out.observable_names.push_back("n_" + std::to_string(r));
        out.observable_values.push_back(
            Eigen::Map<Eigen::VectorXcd>(occ[r].data(), nt));
    }
    out.trace_drift = Eigen::VectorXd::Zero(nt);
    return out;
}

struct StabilityResult {
    double max_re = 0.0;
    bool stable = false;
};

/// Asymptotic stability of the Lyapunov flow: all eigenvalues of X strictly
/// in the left half plane.
inline StabilityResult x_stability(const LyapunovSystem& sys) {
    StabilityResult out;
    out.max_re = dense_eigenvalues(sys.x).real().maxCoeff();
    out.stable = out.max_re < 0.0;
    return out;
}

/// Fixed point of the Lyapunov flow: solve X P + P X^dag + Y = 0 through the
/// vectorized linear system (I kron X + X^* kron I) vec(P) = -vec(Y).
inline Eigen::MatrixXcd lyapunov_fixed_point(const LyapunovSystem& sys) {
    const int n = sys.size();
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n * n, n * n);
    const Eigen::MatrixXcd eye = Eigen::MatrixXcd::Identity(n, n);
    a += Eigen::kroneckerProduct(eye, sys.x);
    a += Eigen::kroneckerProduct(sys.x.conjugate(), eye);
    Eigen::VectorXcd rhs =
        -Eigen::Map<const Eigen::VectorXcd>(sys.y.data(), n * n);
    Eigen::VectorXcd sol = a.partialPivLu().solve(rhs);
    return Eigen::Map<Eigen::MatrixXcd>(sol.data(), n, n);
}

struct SweepPoint {
    double scale = 0.0;
    double max_re = 0.0;
    bool stable = false;
};

/// Scale the Hamiltonian couplings V of both baths and track the spectral
/// abscissa of X.
inline std::vector<SweepPoint> stability_sweep(const FermiSetup& setup,
                                               const Eigen::VectorXd& scales) {
    std::vector<SweepPoint> table;
    table.reserve(scales.size());
    for (int i = 0; i < scales.size(); ++i) {
        FermiSetup scaled = setup;
        scaled.model_greater.v *= scales[i];
        scaled.model_lesser.v *= scales[i];
        auto sys = build_xy(scaled);
        auto st = x_stability(sys);
        table.push_back({scales[i], st.max_re, st.stable});
    }
    return table;
}

} // namespace qlpm

#endif
