#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <random>

#include "qlpm/fermi_gauss.hpp"

using namespace qlpm;
using Catch::Matchers::WithinAbs;

namespace {

PseudomodeModel manual_bath(BathStatistics stat, std::vector<Complex> z,
                            std::vector<Complex> v, std::vector<Complex> m,
                            int d_s = 1) {
    PseudomodeModel model;
    const int n = static_cast<int>(z.size());
    model.statistics = stat;
    model.z = Eigen::Map<Eigen::VectorXcd>(z.data(), n);
    model.v = Eigen::MatrixXcd::Zero(d_s, n);
    model.m = Eigen::MatrixXcd::Zero(d_s, n);
    for (int k = 0; k < n; ++k) {
        model.v(0, k) = v[k];
        model.m(0, k) = m[k];
    }
    model.kappa = Eigen::VectorXcd::Ones(n);
    return model;
}

FermiSetup single_site_setup(double eps, PseudomodeModel g, PseudomodeModel l,
                             double p0 = 0.0) {
    FermiSetup setup;
    setup.h_s = Eigen::MatrixXcd::Constant(1, 1, eps);
    setup.model_greater = std::move(g);
    setup.model_lesser = std::move(l);
    setup.p0_impurity = Eigen::MatrixXcd::Constant(1, 1, p0);
    return setup;
}

} // namespace

TEST_CASE("build_xy decoupled block structure", "[lyapunov]") {
    auto g = manual_bath(BathStatistics::FermionGreater, {{0.5, 1.0}}, {0.0}, {0.0});
    auto l = manual_bath(BathStatistics::FermionLesser, {{0.7, -2.0}}, {0.0}, {0.0});
    auto sys = build_xy(single_site_setup(-1.5, g, l));
    REQUIRE(sys.size() == 3);
    Eigen::MatrixXcd expected = Eigen::MatrixXcd::Zero(3, 3);
    expected(0, 0) = Complex(0.0, 1.5);
    expected(1, 1) = Complex(-0.5, -1.0);
    expected(2, 2) = Complex(-0.7, 2.0);
    REQUIRE((sys.x - expected).norm() < 1e-14);
    REQUIRE(std::abs(sys.y(2, 2) - Complex(1.4, 0.0)) < 1e-14);
    REQUIRE(sys.y.norm() == sys.y.block(2, 2, 1, 1).norm()); // only 2 Gamma_2
}

TEST_CASE("build_xy single greater mode matches the 2x2 form", "[lyapunov]") {
    auto g = manual_bath(BathStatistics::FermionGreater, {{1.0, 2.0}},
                         {{0.8, -0.1}}, {{0.2, 0.3}});
    PseudomodeModel l;
    l.statistics = BathStatistics::FermionLesser;
    l.z = Eigen::VectorXcd();
    l.v = Eigen::MatrixXcd::Zero(1, 0);
    l.m = Eigen::MatrixXcd::Zero(1, 0);
    auto sys = build_xy(single_site_setup(0.4, g, l));
    REQUIRE(sys.size() == 2);
    const Complex mi(0.0, -1.0);
    REQUIRE(std::abs(sys.x(0, 0) - mi * 0.4) < 1e-14);
    REQUIRE(std::abs(sys.x(0, 1) - (mi * Complex(0.8, -0.1) - Complex(0.2, 0.3))) <
            1e-14);
    REQUIRE(std::abs(sys.x(1, 0) - (mi * std::conj(Complex(0.8, -0.1)) -
                                    std::conj(Complex(0.2, 0.3)))) < 1e-14);
    REQUIRE(std::abs(sys.x(1, 1) + Complex(1.0, 2.0)) < 1e-14);
}

TEST_CASE("Y is Hermitian for any lesser M", "[lyapunov][property]") {
    std::mt19937 rng(88);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        auto g = manual_bath(BathStatistics::FermionGreater, {{1.0, 0.4}},
                             {{u(rng), u(rng)}}, {{u(rng), u(rng)}});
        auto l = manual_bath(BathStatistics::FermionLesser,
                             {{0.6, -0.3}, {1.2, 0.9}},
                             {{u(rng), u(rng)}, {u(rng), u(rng)}},
                             {{u(rng), u(rng)}, {u(rng), u(rng)}});
        auto sys = build_xy(single_site_setup(u(rng), g, l));
        REQUIRE((sys.y - sys.y.adjoint()).norm() < 1e-14);
    }
}

TEST_CASE("unitary one-body flow preserves the trace", "[lyapunov]") {
    auto g = manual_bath(BathStatistics::FermionGreater, {{0.0, 1.0}},
                         {{0.5, 0.2}}, {0.0});
    auto l = manual_bath(BathStatistics::FermionLesser, {{0.0, -0.8}},
                         {{0.3, -0.4}}, {0.0});
    auto setup = single_site_setup(0.7, g, l, 0.5);
    auto sys = build_xy(setup);
    REQUIRE(sys.y.norm() == 0.0);
    auto p0 = lyapunov_initial(sys, setup.p0_impurity);
    LyapunovOptions opt;
    opt.store_full = true;
    auto traj = propagate_lyapunov(sys, p0, Eigen::VectorXd::LinSpaced(9, 0, 6.0),
                                   opt);
    for (const auto& p : traj.full_state) {
        REQUIRE_THAT(p.trace().real(), WithinAbs(1.5, 1e-10));
        REQUIRE((p - p.adjoint()).norm() < 1e-10);
    }
}

TEST_CASE("isolated damped mode decays at 2 gamma", "[lyapunov]") {
    const double gamma = 0.8;
    auto g = manual_bath(BathStatistics::FermionGreater, {{gamma, 1.3}}, {0.0},
                         {0.0});
    PseudomodeModel l;
    l.statistics = BathStatistics::FermionLesser;
    l.z = Eigen::VectorXcd();
    l.v = Eigen::MatrixXcd::Zero(1, 0);
    l.m = Eigen::MatrixXcd::Zero(1, 0);
    auto sys = build_xy(single_site_setup(0.0, g, l));
    Eigen::MatrixXcd p0 = Eigen::MatrixXcd::Zero(2, 2);
    p0(1, 1) = 1.0; // occupy the greater mode by hand
    auto traj = propagate_lyapunov(sys, p0, Eigen::VectorXd::LinSpaced(9, 0, 3.0),
                                   LyapunovOptions{1e-11, 1e-14, 1e9, true});
    for (int i = 0; i < traj.n_times(); ++i) {
        const double expected = std::exp(-2.0 * gamma * traj.times[i]);
        REQUIRE_THAT(traj.full_state[i](1, 1).real(), WithinAbs(expected, 1e-9));
    }
}

TEST_CASE("exact reference starts at the impurity seed and settles",
          "[exact_reference]") {
    auto j = SpectralDensity::semicircular(1.0, 10.0, SemicircleSupport::Symmetric);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Constant(1, 1, -4.0);
    Eigen::MatrixXcd p0 = Eigen::MatrixXcd::Zero(1, 1);
    auto grid = Eigen::VectorXd::LinSpaced(31, 0.0, 15.0);
    auto traj = exact_reference(j, h, p0, 80, grid);
    REQUIRE_THAT(traj.observable("n_0")[0].real(), WithinAbs(0.0, 1e-13));

    // settles for t > 10 / Gamma and is insensitive to the discretization
    auto denser = exact_reference(j, h, p0, 160, grid);
    for (int i = 0; i < grid.size(); ++i) {
        if (grid[i] < 10.0) continue;
        REQUIRE(std::abs(traj.observable("n_0")[i] -
                         denser.observable("n_0")[i]) < 1e-4);
    }
    const auto& n0 = traj.observable("n_0");
    REQUIRE(std::abs(n0[30] - n0[28]).real() < 2e-2);
}

TEST_CASE("pseudomode quench approaches the exact reference", "[quench]") {
    auto j = SpectralDensity::semicircular(1.0, 10.0, SemicircleSupport::Symmetric);
    auto greater = sample_bcf(j, 20.0, 400, BathStatistics::FermionGreater);
    auto lesser = sample_bcf(j, 20.0, 400, BathStatistics::FermionLesser);
    auto [gfit, grep] = fit_complex(greater, 4);
    auto [lfit, lrep] = fit_complex(lesser, 4);
    auto setup = single_site_setup(
        -4.0, from_fit(gfit, GaugeChoice::identity(gfit.n_exp())),
        from_fit(lfit, GaugeChoice::identity(lfit.n_exp())));
    auto sys = build_xy(setup);
    auto grid = Eigen::VectorXd::LinSpaced(41, 0.0, 12.0);
    auto traj = propagate_lyapunov(sys, lyapunov_initial(sys, setup.p0_impurity),
                                   grid);
    auto exact = exact_reference(j, setup.h_s, setup.p0_impurity, 160, grid);
    double worst = 0.0;
    for (int i = 0; i < grid.size(); ++i)
        worst = std::max(worst, std::abs(traj.observable("n_0")[i] -
                                         exact.observable("n_0")[i]));
    REQUIRE(worst <= 1e-2);
}

TEST_CASE("x_stability marginal, stabilized and gauge-independent cases",
          "[stability]") {
    // decoupled: impurity eigenvalue sits on the axis, strict test fails
    auto g0 = manual_bath(BathStatistics::FermionGreater, {{0.9, 0.2}}, {0.0}, {0.0});
    auto l0 = manual_bath(BathStatistics::FermionLesser, {{1.1, -0.5}}, {0.0}, {0.0});
    auto sys0 = build_xy(single_site_setup(0.3, g0, l0));
    auto st0 = x_stability(sys0);
    REQUIRE_THAT(st0.max_re, WithinAbs(0.0, 1e-12));
    REQUIRE_FALSE(st0.stable);

    // Prop 3 instance: small M, strong V stabilizes
    auto weak = manual_bath(BathStatistics::FermionGreater, {{1.0, 1.0}},
                            {{0.6, 0.1}}, {{0.1, 0.05}});
    auto weak_l = manual_bath(BathStatistics::FermionLesser, {{1.2, -0.7}},
                              {{0.4, -0.2}}, {{0.08, 0.02}});
    auto strong = single_site_setup(0.5, weak, weak_l);
    strong.model_greater.v *= 10.0;
    strong.model_lesser.v *= 10.0;
    REQUIRE(x_stability(build_xy(strong)).stable);

    // gauge independence of the X spectrum for the same scalar weights
    ExponentialFit fit;
    fit.statistics = BathStatistics::FermionGreater;
    fit.exponents = Eigen::VectorXcd::Constant(1, Complex(1.0, 1.5));
    fit.weights = {Eigen::MatrixXcd::Constant(1, 1, Complex(2.0, -0.8))};
    auto m1 = from_fit(fit, GaugeChoice::identity(1));
    auto m2 = from_fit(fit, GaugeChoice::uniform(1, Complex(2.0, 0.0)));
    auto lfitm = fit;
    lfitm.statistics = BathStatistics::FermionLesser;
    lfitm.exponents = Eigen::VectorXcd::Constant(1, Complex(0.8, -0.9));
    auto lm1 = from_fit(lfitm, GaugeChoice::identity(1));
    auto lm2 = from_fit(lfitm, GaugeChoice::uniform(1, Complex(0.5, 0.5)));
    auto sa = build_xy(single_site_setup(0.4, m1, lm1));
    auto sb = build_xy(single_site_setup(0.4, m2, lm2));
    Eigen::VectorXcd ea = dense_eigenvalues(sa.x);
    Eigen::VectorXcd eb = dense_eigenvalues(sb.x);
    for (int i = 0; i < ea.size(); ++i) {
        double best = 1e300;
        for (int q = 0; q < eb.size(); ++q)
            best = std::min(best, std::abs(ea[i] - eb[q]));
        REQUIRE(best < 1e-10);
    }
}

TEST_CASE("Lyapunov flow converges to or flees the fixed point",
          "[stability][property]") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked_stable = 0, checked_unstable = 0;
    for (int trial = 0; trial < 40 && (checked_stable < 5 || checked_unstable < 5);
         ++trial) {
        auto g = manual_bath(BathStatistics::FermionGreater,
                             {{0.4 + 0.5 * std::abs(u(rng)), u(rng)}},
                             {{u(rng), u(rng)}}, {{0.6 * u(rng), 0.6 * u(rng)}});
        auto l = manual_bath(BathStatistics::FermionLesser,
                             {{0.4 + 0.5 * std::abs(u(rng)), -std::abs(u(rng))}},
                             {{u(rng), u(rng)}}, {{0.6 * u(rng), 0.6 * u(rng)}});
        auto setup = single_site_setup(u(rng), g, l, 0.5 * (u(rng) + 1.0) * 0.5);
        auto sys = build_xy(setup);
        auto st = x_stability(sys);
        if (st.max_re < -0.05 && checked_stable < 5) {
            ++checked_stable;
            auto fixed = lyapunov_fixed_point(sys);
            REQUIRE((sys.x * fixed + fixed * sys.x.adjoint() + sys.y).norm() <
                    1e-10);
            const double t_end = 50.0 / std::abs(st.max_re);
            auto traj = propagate_lyapunov(
                sys, lyapunov_initial(sys, setup.p0_impurity),
                Eigen::VectorXd::LinSpaced(3, 0.0, t_end),
                LyapunovOptions{1e-10, 1e-13, 1e9, true});
            REQUIRE((traj.full_state.back() - fixed).norm() < 1e-8);
        } else if (st.max_re > 0.05 && checked_unstable < 5) {
            ++checked_unstable;
            const double t_end = 20.0 / st.max_re;
            auto traj = propagate_lyapunov(
                sys, lyapunov_initial(sys, setup.p0_impurity),
                Eigen::VectorXd::LinSpaced(5, 0.0, t_end),
                LyapunovOptions{1e-10, 1e-13, 1e12, true});
            REQUIRE(traj.full_state.back().norm() > 1e3);
        }
    }
    REQUIRE(checked_stable == 5);
    REQUIRE(checked_unstable == 5);
}

TEST_CASE("Lorentzian dynamics keeps occupations physical", "[stability]") {
    auto j = SpectralDensity::semicircular(1.0, 10.0, SemicircleSupport::Symmetric);
    auto greater = sample_bcf(j, 20.0, 300, BathStatistics::FermionGreater);
    auto lesser = sample_bcf(j, 20.0, 300, BathStatistics::FermionLesser);
    PositiveFitOptions opt;
    opt.support = std::make_pair(0.0, 10.0);
    opt.max_evaluations = 400;
    auto [gfit, gr] = fit_positive(greater, 2, opt);
    auto [lfit, lr] = fit_positive(lesser, 2, opt);
    auto setup = single_site_setup(
        -4.0, from_fit(gfit, GaugeChoice::identity(2)),
        from_fit(lfit, GaugeChoice::identity(2)));
    REQUIRE(setup.model_greater.m.norm() < 1e-10); // positive weights: M = 0
    auto sys = build_xy(setup);
    LyapunovOptions lopt;
    lopt.store_full = true;
    auto traj = propagate_lyapunov(sys, lyapunov_initial(sys, setup.p0_impurity),
                                   Eigen::VectorXd::LinSpaced(21, 0.0, 10.0), lopt);
    for (const auto& p : traj.full_state) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(p);
        REQUIRE(es.eigenvalues().minCoeff() >= -1e-8);
        REQUIRE(es.eigenvalues().maxCoeff() <= 1.0 + 1e-8);
    }
}

TEST_CASE("eventual stability under coupling growth", "[stability][property]") {
    std::mt19937 rng(55);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double gmin = 0.5 + 0.4 * std::abs(u(rng));
        // template obeying ||M|| < min(gamma) / 2
        const double m_cap = 0.4 * gmin;
        auto g = manual_bath(BathStatistics::FermionGreater, {{gmin, u(rng)}},
                             {{u(rng) + 1.5, u(rng)}},
                             {{m_cap * u(rng) * 0.7, m_cap * u(rng) * 0.7}});
        auto l = manual_bath(BathStatistics::FermionLesser,
                             {{gmin + 0.3, -std::abs(u(rng))}},
                             {{u(rng) + 1.0, u(rng)}},
                             {{m_cap * u(rng) * 0.7, m_cap * u(rng) * 0.7}});
        auto setup = single_site_setup(u(rng), g, l);
        Eigen::VectorXd scales(6);
        scales << 0.0, 1.0, 4.0, 16.0, 64.0, 256.0;
        auto table = stability_sweep(setup, scales);
        REQUIRE(table.back().stable); // large ||V|| stabilizes
    }
}
