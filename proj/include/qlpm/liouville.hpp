#ifndef QLPM_LIOUVILLE_HPP
#define QLPM_LIOUVILLE_HPP

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "qlpm/errors.hpp"
#include "qlpm/fock.hpp"
#include "qlpm/lapack.hpp"
#include "qlpm/ode.hpp"
#include "qlpm/pseudomode.hpp"
#include "qlpm/trajectory.hpp"

namespace qlpm {

/// Per-mode bosonic occupation cutoff n <= n_max.
struct FockTruncation {
    int n_max = 1;
};

/// Vectorized quasi-Lindblad generator in the column-stacking convention
/// vec(A rho B) = (B^T kron A) vec(rho). The system factor comes first in
/// the tensor product, then the pseudomodes in model order.
struct Liouvillian {
    int hilbert_dim = 0; // D
    int dim = 0;         // D^2
    int d_system = 0;
    std::vector<int> mode_dims;
    SparseCxd action;               // D^2 x D^2
    Eigen::MatrixXcd h_aux;         // auxiliary Hamiltonian record
    Eigen::MatrixXcd gamma_tilde;   // dissipator coefficient block matrix
    std::vector<SparseCxd> f_ops;   // F_p: coupling operators then lowerings
};

struct BuildOptions {
    long long max_dim_sq = 1LL << 18; // cap on D^2
};

namespace detail {

inline void add_dissipator_term(SparseCxd& l, Complex coeff, const SparseCxd& fp,
                                const SparseCxd& fq, const SparseCxd& eye) {
    if (coeff == Complex(0.0)) return;
    const SparseCxd fpdag_fq = (SparseCxd(fp.adjoint()) * fq).pruned();
    l += 2.0 * coeff *
         (Eigen::kroneckerProduct(fp.conjugate().eval(), fq).eval() -
          0.5 * Eigen::kroneckerProduct(eye, fpdag_fq).eval() -
          0.5 * Eigen::kroneckerProduct(fpdag_fq.transpose().eval(), eye).eval())
             .eval();
}

inline SparseCxd hamiltonian_commutator(const SparseCxd& h, const SparseCxd& eye) {
    const Complex mi(0.0, -1.0);
    return (mi * Eigen::kroneckerProduct(eye, h).eval() +
            Complex(0.0, 1.0) * Eigen::kroneckerProduct(h.transpose().eval(), eye).eval())
        .eval();
}

} // namespace detail

/// Assemble the truncated-Fock generator for a bosonic pseudomode model:
///   H_aux = H_S + sum_k E_k d_k^dag d_k + sum_j S_j (V_jk d_k + V_jk^* d_k^dag)
///   D     = 2 sum_pq GammaTilde_pq (F_q . F_p^dag - 1/2 {F_p^dag F_q, .})
/// with F_j = S_j on the coupling indices and F_k = d_k on the mode indices.
inline Liouvillian build_liouvillian(const Eigen::MatrixXcd& h_s,
                                     const std::vector<Eigen::MatrixXcd>& s_ops,
                                     const PseudomodeModel& model,
                                     FockTruncation trunc,
                                     const BuildOptions& options = {}) {
    if (model.statistics != BathStatistics::BosonZeroT)
        throw Error("build_liouvillian: bosonic model required");
    if (static_cast<int>(s_ops.size()) != model.n_sites())
        throw Error("build_liouvillian: one coupling operator per site required");
    if (trunc.n_max < 1) throw Error("build_liouvillian: n_max >= 1 required");
    if ((h_s - h_s.adjoint()).norm() > 1e-12 * std::max(1.0, h_s.norm()))
        throw Error("build_liouvillian: system Hamiltonian must be Hermitian");
    for (const auto& s : s_ops)
        if ((s - s.adjoint()).norm() > 1e-12 * std::max(1.0, s.norm()))
            throw Error("build_liouvillian: coupling operators must be Hermitian");

    TensorSpace space;
    space.d_system = static_cast<int>(h_s.rows());
    space.mode_dims.assign(model.n_modes(), trunc.n_max + 1);
    const long long d = space.dim();
    if (d * d > options.max_dim_sq)
        throw DimensionError("build_liouvillian: D^2 = " + std::to_string(d * d) +
                             " exceeds the cap " +
                             std::to_string(options.max_dim_sq));

    Liouvillian l;
    l.hilbert_dim = static_cast<int>(d);
    l.dim = static_cast<int>(d * d);
    l.d_system = space.d_system;
    l.mode_dims = space.mode_dims;

    const int n_sites = model.n_sites();
    const int n_modes = model.n_modes();
    const SparseCxd eye = sparse_identity(static_cast<int>(d));

    // auxiliary Hamiltonian
    SparseCxd h = space.system_operator(h_s);
    std::vector<SparseCxd> lowering(n_modes);
    for (int k = 0; k < n_modes; ++k) {
        lowering[k] = space.mode_lowering(k);
        const double energy = model.z[k].imag();
        if (energy != 0.0)
            h += energy * (SparseCxd(lowering[k].adjoint()) * lowering[k]).pruned();
    }
    std::vector<SparseCxd> s_full(n_sites);
    for (int j = 0; j < n_sites; ++j) s_full[j] = space.system_operator(s_ops[j]);
    for (int j = 0; j < n_sites; ++j)
        for (int k = 0; k < n_modes; ++k) {
            const Complex v = model.v(j, k);
            if (v == Complex(0.0)) continue;
            h += (s_full[j] *
                  (v * lowering[k] + std::conj(v) * SparseCxd(lowering[k].adjoint())))
                     .pruned();
        }

    l.action = detail::hamiltonian_commutator(h, eye);
    l.h_aux = Eigen::MatrixXcd(h);

    // dissipator: iterate the nonzero blocks of GammaTilde
    l.gamma_tilde = lindbladian_gamma_tilde(model).matrix;
    l.f_ops.reserve(n_sites + n_modes);
    for (int j = 0; j < n_sites; ++j) l.f_ops.push_back(s_full[j]);
    for (int k = 0; k < n_modes; ++k) l.f_ops.push_back(lowering[k]);

    for (int j = 0; j < n_sites; ++j)
        for (int k = 0; k < n_modes; ++k) {
            const Complex m_jk = model.m(j, k);
            detail::add_dissipator_term(l.action, m_jk, l.f_ops[j],
                                        l.f_ops[n_sites + k], eye);
            detail::add_dissipator_term(l.action, std::conj(m_jk),
                                        l.f_ops[n_sites + k], l.f_ops[j], eye);
        }
    for (int k = 0; k < n_modes; ++k)
        detail::add_dissipator_term(l.action, model.z[k].real(),
                                    l.f_ops[n_sites + k], l.f_ops[n_sites + k],
                                    eye);
    l.action.makeCompressed();
    return l;
}

/// rho_S(0) tensored with the pseudomode vacuum.
inline Eigen::MatrixXcd initial_state(const Liouvillian& l,
                                      const Eigen::MatrixXcd& rho_s) {
    if (rho_s.rows() != l.d_system)
        throw Error("initial_state: system dimension mismatch");
    const int d_bath = l.hilbert_dim / l.d_system;
    Eigen::MatrixXcd vac = Eigen::MatrixXcd::Zero(d_bath, d_bath);
    vac(0, 0) = 1.0;
    return Eigen::kroneckerProduct(rho_s, vac);
}

struct PropagateOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double divergence_norm = 1e8;
    /// Named system observables evaluated on the reduced state.
    std::vector<std::pair<std::string, Eigen::MatrixXcd>> observables;
    bool store_reduced_state = true;
};

/// Integrate d/dt vec(rho) = L vec(rho) with the adaptive embedded
/// Runge-Kutta pair and report reduced states, observables and trace drift
/// on the requested grid. Diverging runs are truncated and flagged.
inline Trajectory propagate(const Liouvillian& l, const Eigen::MatrixXcd& rho0,
                            const Eigen::VectorXd& t_grid,
                            const PropagateOptions& options = {}) {
    const int d = l.hilbert_dim;
    if (rho0.rows() != d || rho0.cols() != d)
        throw Error("propagate: initial state dimension mismatch");
    if ((rho0 - rho0.adjoint()).norm() > 1e-10)
        throw Error("propagate: initial state must be Hermitian");
    if (std::abs(rho0.trace() - Complex(1.0)) > 1e-10)
        throw Error("propagate: initial state must have unit trace");

    Eigen::VectorXcd y = Eigen::Map<const Eigen::VectorXcd>(rho0.data(), l.dim);

    std::vector<double> times;
    std::vector<Eigen::MatrixXcd> reduced;
    std::vector<std::vector<Complex>> obs(options.observables.size());
    std::vector<double> drift;

    auto deriv = [&](double, const Eigen::VectorXcd& state,
                     Eigen::VectorXcd& dstate) { dstate.noalias() = l.action * state; };
    auto on_grid = [&](int i, const Eigen::VectorXcd& state) {
        times.push_back(t_grid[i]);
        const Eigen::Map<const Eigen::MatrixXcd> rho(state.data(), d, d);
        const Eigen::MatrixXcd rho_s = partial_trace_bath(rho, l.d_system);
        if (options.store_reduced_state) reduced.push_back(rho_s);
        for (size_t o = 0; o < options.observables.size(); ++o)
            obs[o].push_back((options.observables[o].second * rho_s).trace());
        drift.push_back(std::abs(rho.trace() - Complex(1.0)));
    };

    OdeOptions ode;
    ode.rel_tol = options.rel_tol;
    ode.abs_tol = options.abs_tol;
    ode.divergence_norm = options.divergence_norm;
    OdeStatus status = integrate_ode(deriv, std::move(y), t_grid, ode, on_grid);

    Trajectory out;
    const int n = static_cast<int>(times.size());
    out.times = Eigen::Map<Eigen::VectorXd>(times.data(), n);
    out.reduced_state = std::move(reduced);
    out.trace_drift = Eigen::Map<Eigen::VectorXd>(drift.data(), n);
    for (size_t o = 0; o < options.observables.size(); ++o) {
        out.observable_names.push_back(options.observables[o].first);
        out.observable_values.push_back(
            Eigen::Map<Eigen::VectorXcd>(obs[o].data(), n));
    }
    out.diverged = status.diverged;
    out.divergence_time = status.t_reached;
    return out;
}

/// Analytic pure-dephasing reference for H_S = omega0 sigma_z / 2 coupled to
/// the bath through sigma_z starting from |+><+|:
///   <sigma_x(t)> = cos(omega0 t) exp(-Gamma(t)),
///   Gamma(t) = 4 int J(omega) (1 - cos omega t) / omega^2 d omega.
inline double dephasing_reference(const SpectralDensity& j, double omega0,
                                  double t, double tol = 1e-9) {
    if (t < 0.0) throw Error("dephasing_reference: t must be >= 0");
    if (j.n_sites() != 1) throw Error("dephasing_reference: single-site density");
    if (t == 0.0) return 1.0;
    auto kernel = [&](double omega) {
        const double x = omega * t;
        if (std::abs(x) < 1e-5) {
            return j.scalar(omega) * 0.5 * t * t * (1.0 - x * x / 12.0);
        }
        const double s = std::sin(0.5 * x);
        return j.scalar(omega) * 2.0 * s * s / (omega * omega);
    };
    Complex gamma_dep;
    if (j.kind() == SpectralDensity::Kind::Subohmic) {
        const auto [lo, hi] = j.support();
        gamma_dep = integrate_oscillatory([&](double w) { return Complex(kernel(w)); },
                                          lo, hi, t, tol);
    } else {
        const double w = j.width();
        const double theta_lo =
            j.circle_support() == SemicircleSupport::Symmetric ? -0.5 * M_PI : 0.0;
        gamma_dep = integrate_oscillatory(
            [&](double theta) {
                const double omega = w * std::sin(theta);
                return Complex(kernel(omega) * w * std::cos(theta));
            },
            theta_lo, 0.5 * M_PI, w * t, tol);
    }
    return std::cos(omega0 * t) * std::exp(-4.0 * gamma_dep.real());
}

struct SpectrumResult {
    Eigen::VectorXcd eigenvalues;
    double max_re = 0.0;
};

/// Dense eigenvalue set of the generator (default cap D^2 <= 8100, D <= 90).
inline SpectrumResult spectrum(const Liouvillian& l, long long dense_cap = 8100) {
    if (l.dim > dense_cap)
        throw DimensionError("spectrum: D^2 = " + std::to_string(l.dim) +
                             " exceeds the dense cap " + std::to_string(dense_cap));
    SpectrumResult out;
    out.eigenvalues = dense_eigenvalues(Eigen::MatrixXcd(l.action));
    out.max_re = out.eigenvalues.real().maxCoeff();
    return out;
}

// ---------------------------------------------------------------------------
// Single-mode spin-boson instability benchmark (C(t) = w e^{-zt})
// ---------------------------------------------------------------------------

struct InstabilityOptions {
    double t_max = 10.0;
    int n_times = 201;
    bool with_trajectory = true;
    bool with_spectrum = true;
    double rel_tol = 1e-9;
    double divergence_norm = 1e8;
};

struct InstabilityResult {
    PseudomodeModel model;
    Trajectory trajectory;
    Eigen::VectorXcd eigenvalues;
    double max_re_lambda = 0.0;
};

inline PseudomodeModel single_mode_benchmark_model(Complex kappa,
                                                   Complex w = Complex(50.0, -2.5),
                                                   Complex z = Complex(1.0, 0.0)) {
    ExponentialFit fit;
    fit.statistics = BathStatistics::BosonZeroT;
    fit.exponents = Eigen::VectorXcd::Constant(1, z);
    fit.weights = {Eigen::MatrixXcd::Constant(1, 1, w)};
    return from_fit(fit, GaugeChoice::uniform(1, kappa));
}

/// The stability test case: H_S = Delta sigma_x / 2 with Delta = 4,
/// S = sigma_z, single pseudomode with w = 50 - 2.5i, z = 1, starting from
/// the excited state. Returns P1(t) and the spectral abscissa.
inline InstabilityResult instability_benchmark(Complex kappa, int n_max,
                                               const InstabilityOptions& options = {}) {
    if (n_max < 10) throw Error("instability_benchmark: n_max >= 10 required");
    InstabilityResult out;
    out.model = single_mode_benchmark_model(kappa);

    Eigen::MatrixXcd sigma_x(2, 2), sigma_z(2, 2), p1(2, 2), rho0(2, 2);
    sigma_x << 0, 1, 1, 0;
    sigma_z << 1, 0, 0, -1;
    p1 << 0, 0, 0, 1;
    rho0 << 0, 0, 0, 1; // |1><1|

    const Eigen::MatrixXcd h_s = 2.0 * sigma_x; // Delta = 4
    Liouvillian l = build_liouvillian(h_s, {sigma_z}, out.model,
                                      FockTruncation{n_max});
    if (options.with_spectrum) {
        SpectrumResult s = spectrum(l);
        out.eigenvalues = s.eigenvalues;
        out.max_re_lambda = s.max_re;
    }
    if (options.with_trajectory) {
        PropagateOptions popt;
        popt.rel_tol = options.rel_tol;
        popt.divergence_norm = options.divergence_norm;
        popt.observables = {{"P1", p1}};
        popt.store_reduced_state = true;
        out.trajectory = propagate(
            l, initial_state(l, rho0),
            Eigen::VectorXd::LinSpaced(options.n_times, 0.0, options.t_max), popt);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Effective bath-only Liouvillian for commuting system Hamiltonians
// ---------------------------------------------------------------------------

/// L_{s,s'} for mode k of a scalar-coupling model, acting on the bath factor
/// alone once the system density operator is |s><s'| in the coupling
/// eigenbasis:
///   L_{s,s'} . = L_A . - i s A . + i s' . A
///              + ((2s'-s) M d - s M^* d^dag) . + . (-s' M d + (2s-s') M^* d^dag)
/// with A = V d + V^* d^dag and L_A the bath-only generator of the mode.
inline Eigen::MatrixXcd effective_liouvillian(const PseudomodeModel& model,
                                              double s, double s_prime, int k,
                                              int n_max) {
    if (model.n_sites() != 1)
        throw Error("effective_liouvillian: scalar-coupling model required");
    if (k < 0 || k >= model.n_modes())
        throw Error("effective_liouvillian: mode index out of range");
    const int m = n_max + 1;
    const SparseCxd low = boson_lowering(m);
    const SparseCxd eye = sparse_identity(m);
    const SparseCxd num = (SparseCxd(low.adjoint()) * low).pruned();

    const double gamma = model.z[k].real();
    const double energy = model.z[k].imag();
    const Complex v = model.v(0, k);
    const Complex mm = model.m(0, k);

    const SparseCxd a_op =
        (v * low + std::conj(v) * SparseCxd(low.adjoint())).pruned();

    SparseCxd l = detail::hamiltonian_commutator((energy * num).pruned(), eye);
    detail::add_dissipator_term(l, gamma, low, low, eye);

    const Complex mi(0.0, -1.0);
    l += (mi * s) * Eigen::kroneckerProduct(eye, a_op).eval();
    l += Complex(0.0, s_prime) *
         Eigen::kroneckerProduct(a_op.transpose().eval(), eye).eval();

    const SparseCxd left =
        ((2.0 * s_prime - s) * mm * low - s * std::conj(mm) * SparseCxd(low.adjoint()))
            .pruned();
    const SparseCxd right =
        (-s_prime * mm * low + (2.0 * s - s_prime) * std::conj(mm) * SparseCxd(low.adjoint()))
            .pruned();
    l += Eigen::kroneckerProduct(eye, left).eval();
    l += Eigen::kroneckerProduct(right.transpose().eval(), eye).eval();
    return Eigen::MatrixXcd(l);
}

// ---------------------------------------------------------------------------
// Bloch-equation toy model
// ---------------------------------------------------------------------------

struct BlochResult {
    Eigen::Matrix3d matrix;
    bool stable = false;
};

/// Coefficient matrix of the Bloch vector for the single-spin quasi-Lindblad
/// toy model with H = nu sigma_y, gain gamma_z on sigma_z and loss gamma_x on
/// sigma_x; stable when every eigenvalue real part is <= 1e-12.
inline BlochResult bloch_stability(double gamma_x, double gamma_z, double nu) {
    if (!(gamma_x > 0.0) || !(gamma_z > 0.0))
        throw Error("bloch_stability: gamma_x, gamma_z > 0 required");
    BlochResult out;
    out.matrix << gamma_z, 0.0, nu, 0.0, -gamma_x + gamma_z, 0.0, -nu, 0.0,
        -gamma_x;
    out.matrix *= 2.0;
    Eigen::EigenSolver<Eigen::Matrix3d> es(out.matrix, false);
    out.stable = es.eigenvalues().real().maxCoeff() <= 1e-12;
    return out;
}

} // namespace qlpm

#endif
