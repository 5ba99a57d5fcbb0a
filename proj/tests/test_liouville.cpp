#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "qlpm/liouville.hpp"

using namespace qlpm;
using Catch::Matchers::WithinAbs;

namespace {

Eigen::MatrixXcd pauli_x() {
    Eigen::MatrixXcd m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}
Eigen::MatrixXcd pauli_z() {
    Eigen::MatrixXcd m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

PseudomodeModel manual_model(Complex z, Complex v, Complex m) {
    PseudomodeModel model;
    model.z = Eigen::VectorXcd::Constant(1, z);
    model.v = Eigen::MatrixXcd::Constant(1, 1, v);
    model.m = Eigen::MatrixXcd::Constant(1, 1, m);
    model.kappa = Eigen::VectorXcd::Ones(1);
    return model;
}

// Independent superoperator oracle: apply the master-equation action to every
// basis matrix E_ij and stack the resulting columns.
Eigen::MatrixXcd column_oracle(const Liouvillian& l) {
    const int d = l.hilbert_dim;
    const Eigen::MatrixXcd h = l.h_aux;
    std::vector<Eigen::MatrixXcd> f;
    for (const auto& op : l.f_ops) f.push_back(Eigen::MatrixXcd(op));
    const auto& gt = l.gamma_tilde;
    const int np = static_cast<int>(f.size());

    Eigen::MatrixXcd out(d * d, d * d);
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) {
            e(i, j) = 1.0;
            Eigen::MatrixXcd y = Complex(0, -1) * (h * e - e * h);
            for (int p = 0; p < np; ++p)
                for (int q = 0; q < np; ++q) {
                    if (gt(p, q) == Complex(0.0)) continue;
                    const Eigen::MatrixXcd fpd = f[p].adjoint();
                    y += 2.0 * gt(p, q) *
                         (f[q] * e * fpd - 0.5 * (fpd * f[q] * e + e * fpd * f[q]));
                }
            out.col(j * d + i) = Eigen::Map<Eigen::VectorXcd>(y.data(), d * d);
            e(i, j) = 0.0;
        }
    return out;
}

} // namespace

TEST_CASE("generator matches the applied master equation", "[liouville]") {
    auto model = manual_model({0.7, 0.3}, {1.0, 0.5}, {0.2, -0.1});
    Eigen::MatrixXcd h_s(2, 2);
    h_s << 0.4, Complex(0.1, -0.3), Complex(0.1, 0.3), -0.2;
    auto l = build_liouvillian(h_s, {pauli_z()}, model, FockTruncation{3});
    REQUIRE(l.hilbert_dim == 8);
    const Eigen::MatrixXcd dense(l.action);
    const Eigen::MatrixXcd oracle = column_oracle(l);
    REQUIRE((dense - oracle).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("gamma_tilde record has the block form", "[liouville]") {
    auto model = manual_model({0.7, 0.0}, {1.0, 0.0}, {0.25, 0.0});
    auto l = build_liouvillian(Eigen::MatrixXcd::Zero(2, 2), {pauli_z()}, model,
                               FockTruncation{2});
    REQUIRE(l.gamma_tilde.rows() == 2);
    REQUIRE(std::abs(l.gamma_tilde(0, 0)) == 0.0);
    REQUIRE(std::abs(l.gamma_tilde(0, 1) - Complex(0.25, 0.0)) < 1e-15);
    REQUIRE(std::abs(l.gamma_tilde(1, 1) - Complex(0.7, 0.0)) < 1e-15);
}

TEST_CASE("trace is annihilated by the generator", "[liouville][property]") {
    auto model = manual_model({1.0, -0.4}, {0.8, 1.1}, {0.3, 0.2});
    auto l = build_liouvillian(0.7 * pauli_x(), {pauli_z()}, model,
                               FockTruncation{4});
    const int d = l.hilbert_dim;
    Eigen::VectorXcd vec_id = Eigen::VectorXcd::Zero(l.dim);
    for (int i = 0; i < d; ++i) vec_id[i * d + i] = 1.0;
    const double violation = (vec_id.adjoint() * Eigen::MatrixXcd(l.action)).norm();
    REQUIRE(violation <= 1e-10 * Eigen::MatrixXcd(l.action).norm());
}

TEST_CASE("decoupled purely-imaginary modes give an imaginary spectrum",
          "[liouville]") {
    auto model = manual_model({0.0, 1.3}, {0.0, 0.0}, {0.0, 0.0});
    auto l = build_liouvillian(0.5 * pauli_z(), {pauli_z()}, model,
                               FockTruncation{3});
    auto s = spectrum(l);
    REQUIRE(s.eigenvalues.real().cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("discrete-Hamiltonian model yields a unitary generator", "[liouville]") {
    // gamma = 0, M = 0, z = i omega, V = g: commutator only
    auto model = manual_model({0.0, 2.2}, {0.6, 0.0}, {0.0, 0.0});
    auto l = build_liouvillian(0.3 * pauli_x(), {pauli_z()}, model,
                               FockTruncation{3});
    const int d = l.hilbert_dim;
    const SparseCxd eye = sparse_identity(d);
    const Eigen::MatrixXcd expected(detail::hamiltonian_commutator(
        l.h_aux.sparseView().eval(), eye));
    REQUIRE((Eigen::MatrixXcd(l.action) - expected).cwiseAbs().maxCoeff() <
            1e-14);
}

TEST_CASE("zero generator keeps the state fixed", "[propagate]") {
    Liouvillian l;
    l.hilbert_dim = 4;
    l.dim = 16;
    l.d_system = 2;
    l.action = SparseCxd(16, 16);
    Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(4, 4);
    rho0(0, 0) = 0.25;
    rho0(1, 1) = 0.75;
    auto traj = propagate(l, rho0, Eigen::VectorXd::LinSpaced(5, 0.0, 2.0));
    for (const auto& rs : traj.reduced_state) {
        REQUIRE_THAT(rs(0, 0).real(), WithinAbs(1.0, 1e-12)); // bath trace folds in
    }
    REQUIRE(traj.trace_drift.maxCoeff() < 1e-12);
}

TEST_CASE("free two-level precession", "[propagate]") {
    const double omega0 = 4.0;
    auto model = manual_model({0.0, 1.0}, {0.0, 0.0}, {0.0, 0.0});
    auto l = build_liouvillian(0.5 * omega0 * pauli_z(), {pauli_z()}, model,
                               FockTruncation{1});
    Eigen::MatrixXcd plus(2, 2);
    plus << 0.5, 0.5, 0.5, 0.5;
    PropagateOptions opt;
    opt.observables = {{"sx", pauli_x()}};
    auto traj = propagate(l, initial_state(l, plus),
                          Eigen::VectorXd::LinSpaced(41, 0.0, 4.0), opt);
    const auto& sx = traj.observable("sx");
    for (int i = 0; i < traj.n_times(); ++i) {
        REQUIRE_THAT(sx[i].real(), WithinAbs(std::cos(omega0 * traj.times[i]), 1e-8));
        REQUIRE(std::abs(sx[i].imag()) < 1e-10);
    }
    // Hermiticity along the run
    for (const auto& rs : traj.reduced_state)
        REQUIRE((rs - rs.adjoint()).norm() < 1e-9);
}

TEST_CASE("conventional Lindblad spectrum is stable with a stationary state",
          "[spectrum]") {
    auto model = manual_model({0.8, 1.5}, {0.9, 0.0}, {0.0, 0.0});
    auto l = build_liouvillian(0.5 * pauli_z(), {pauli_z()}, model,
                               FockTruncation{5});
    auto s = spectrum(l);
    REQUIRE(s.max_re <= 1e-10);
    REQUIRE(s.max_re >= -1e-10); // stationary state at zero
}

TEST_CASE("pure Hamiltonian spectrum has no real part", "[spectrum]") {
    auto model = manual_model({0.0, 0.9}, {0.4, 0.0}, {0.0, 0.0});
    auto l = build_liouvillian(1.3 * pauli_x(), {pauli_z()}, model,
                               FockTruncation{4});
    REQUIRE(spectrum(l).max_re <= 1e-10);
}

TEST_CASE("dephasing reference basics", "[dephasing]") {
    auto j = SpectralDensity::subohmic(1.0, 0.5, 1.0);
    REQUIRE(dephasing_reference(j, 4.0, 0.0) == 1.0);
    // omega0 = 0: pure envelope, monotone over the early window
    double prev = 1.0;
    for (double t : {0.1, 0.3, 0.6, 1.0, 1.5, 2.0}) {
        const double e = dephasing_reference(j, 0.0, t);
        REQUIRE(e < prev + 1e-12);
        prev = e;
    }
}

TEST_CASE("dephasing reference agrees with a dense discretization",
          "[dephasing]") {
    auto j = SpectralDensity::subohmic(1.0, 0.5, 1.0);
    auto bath = discretize_hamiltonian(j, 64);
    for (double t : {0.25, 0.7, 1.3, 2.0}) {
        double gamma_dep = 0.0;
        for (int k = 0; k < 64; ++k) {
            const double w = bath.frequencies[k];
            gamma_dep += 4.0 * std::norm(bath.couplings(0, k)) *
                         (1.0 - std::cos(w * t)) / (w * w);
        }
        const double discrete = std::cos(4.0 * t) * std::exp(-gamma_dep);
        REQUIRE_THAT(dephasing_reference(j, 4.0, t), WithinAbs(discrete, 1e-3));
    }
}

TEST_CASE("propagated discrete bath matches its analytic dephasing",
          "[propagate][dephasing]") {
    auto j = SpectralDensity::subohmic(1.0, 0.5, 1.0);
    auto bath = discretize_hamiltonian(j, 2);
    auto fit = discrete_bath_fit(bath, BathStatistics::BosonZeroT);
    auto model = from_fit(fit, GaugeChoice::identity(2));
    auto l = build_liouvillian(2.0 * pauli_z(), {pauli_z()}, model,
                               FockTruncation{8});
    Eigen::MatrixXcd plus(2, 2);
    plus << 0.5, 0.5, 0.5, 0.5;
    PropagateOptions opt;
    opt.observables = {{"sx", pauli_x()}};
    auto traj = propagate(l, initial_state(l, plus),
                          Eigen::VectorXd::LinSpaced(9, 0.0, 2.0), opt);
    for (int i = 0; i < traj.n_times(); ++i) {
        const double t = traj.times[i];
        double gamma_dep = 0.0;
        for (int k = 0; k < 2; ++k) {
            const double w = bath.frequencies[k];
            gamma_dep += 4.0 * std::norm(bath.couplings(0, k)) *
                         (1.0 - std::cos(w * t)) / (w * w);
        }
        const double expected = std::cos(4.0 * t) * std::exp(-gamma_dep);
        REQUIRE_THAT(traj.observable("sx")[i].real(), WithinAbs(expected, 1e-6));
    }
    REQUIRE(traj.trace_drift.maxCoeff() <= 1e-8);
}

TEST_CASE("effective Liouvillian spectra live inside the full H_S = 0 spectrum",
          "[effective]") {
    auto model = single_mode_benchmark_model(Complex(0.8, 0.0));
    const int n_max = 6;
    auto l = build_liouvillian(Eigen::MatrixXcd::Zero(2, 2), {pauli_z()}, model,
                               FockTruncation{n_max});
    auto full = spectrum(l, 1 << 14);
    for (double s : {1.0, -1.0})
        for (double sp : {1.0, -1.0}) {
            auto eff = effective_liouvillian(model, s, sp, 0, n_max);
            Eigen::VectorXcd ev = dense_eigenvalues(eff);
            for (int i = 0; i < ev.size(); ++i) {
                double best = 1e300;
                for (int q = 0; q < full.eigenvalues.size(); ++q)
                    best = std::min(best, std::abs(full.eigenvalues[q] - ev[i]));
                REQUIRE(best < 1e-7);
            }
        }
}

TEST_CASE("effective Liouvillian is stable in the Lorentzian diagonal case",
          "[effective]") {
    // s = s', M = 0, V real: damped displaced oscillator
    auto model = manual_model({0.6, 0.0}, {1.1, 0.0}, {0.0, 0.0});
    auto eff = effective_liouvillian(model, 1.0, 1.0, 0, 12);
    Eigen::VectorXcd ev = dense_eigenvalues(eff);
    REQUIRE(ev.real().maxCoeff() <= 1e-9);
}

TEST_CASE("bloch toy model spot cases", "[bloch]") {
    {
        auto r = bloch_stability(1.0, 0.5, 1.0);
        REQUIRE(r.stable);
        Eigen::EigenSolver<Eigen::Matrix3d> es(r.matrix);
        Eigen::VectorXd re = es.eigenvalues().real();
        std::sort(re.data(), re.data() + 3);
        REQUIRE_THAT(re[2], WithinAbs(-0.5, 1e-10));
        double best = 1e300;
        for (int i = 0; i < 3; ++i)
            best = std::min(best,
                            std::abs(es.eigenvalues()[i] - Complex(-0.5, 1.3229)));
        REQUIRE(best < 1e-3);
        bool has_minus_one = false;
        for (int i = 0; i < 3; ++i)
            if (std::abs(es.eigenvalues()[i] - Complex(-1.0, 0.0)) < 1e-10)
                has_minus_one = true;
        REQUIRE(has_minus_one);
    }
    REQUIRE_FALSE(bloch_stability(1.0, 0.5, 0.5).stable); // nu^2 < gamma_x gamma_z
    REQUIRE_FALSE(bloch_stability(1.0, 0.5, 1e-12).stable);
    REQUIRE_THROWS_AS(bloch_stability(-1.0, 0.5, 1.0), Error);
}

TEST_CASE("bloch stability equals the analytic condition", "[bloch][property]") {
    for (double gx = 0.2; gx <= 1.4; gx += 0.3)
        for (double gz = 0.2; gz <= 1.4; gz += 0.3)
            for (double nu = 0.1; nu <= 1.5; nu += 0.35) {
                const bool analytic = gx > gz && nu * nu > gx * gz;
                // skip boundary-degenerate points
                if (std::abs(gx - gz) < 1e-10 ||
                    std::abs(nu * nu - gx * gz) < 1e-10)
                    continue;
                REQUIRE(bloch_stability(gx, gz, nu).stable == analytic);
            }
}

TEST_CASE("dimension caps are enforced", "[liouville]") {
    auto model = manual_model({1.0, 0.0}, {1.0, 0.0}, {0.0, 0.0});
    BuildOptions tight;
    tight.max_dim_sq = 10;
    REQUIRE_THROWS_AS(build_liouvillian(pauli_z(), {pauli_z()}, model,
                                        FockTruncation{4}, tight),
                      DimensionError);
    auto l = build_liouvillian(pauli_z(), {pauli_z()}, model, FockTruncation{6});
    REQUIRE_THROWS_AS(spectrum(l, 16), DimensionError);
}
