#ifndef QLPM_SPECTRAL_HPP
#define QLPM_SPECTRAL_HPP

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"
#include "qlpm/quadrature.hpp"

namespace qlpm {

enum class BathStatistics { BosonZeroT, FermionGreater, FermionLesser };

inline std::string to_string(BathStatistics s) {
    switch (s) {
    case BathStatistics::BosonZeroT: return "boson-zeroT";
    case BathStatistics::FermionGreater: return "fermion-greater";
    case BathStatistics::FermionLesser: return "fermion-lesser";
    }
    return "unknown";
}

inline BathStatistics bath_statistics_from_string(const std::string& s) {
    if (s == "boson-zeroT") return BathStatistics::BosonZeroT;
    if (s == "fermion-greater") return BathStatistics::FermionGreater;
    if (s == "fermion-lesser") return BathStatistics::FermionLesser;
    throw Error("unknown bath statistics tag: " + s);
}

enum class FermionWindow { Greater, Lesser };

/// Which interval a semicircular density lives on.
enum class SemicircleSupport { ZeroToW, Symmetric };

/// Parametric spectral density J_{jj'}(omega): scalar subohmic, scalar
/// semicircular, or the rank-1 two-site extension of the semicircle.
class SpectralDensity {
public:
    enum class Kind { Subohmic, Semicircular, TwoSite };

    static SpectralDensity subohmic(double alpha, double s, double omega_c) {
        if (!(alpha > 0.0) || !(s > 0.0 && s < 1.0) || !(omega_c > 0.0))
            throw Error("subohmic density requires alpha > 0, 0 < s < 1, omega_c > 0");
        SpectralDensity j;
        j.kind_ = Kind::Subohmic;
        j.alpha_ = alpha;
        j.s_ = s;
        j.omega_c_ = omega_c;
        return j;
    }

    static SpectralDensity semicircular(double gamma, double width,
                                        SemicircleSupport support = SemicircleSupport::ZeroToW) {
        if (!(gamma > 0.0) || !(width > 0.0))
            throw Error("semicircular density requires gamma > 0, width > 0");
        SpectralDensity j;
        j.kind_ = Kind::Semicircular;
        j.gamma_ = gamma;
        j.width_ = width;
        j.circle_support_ = support;
        return j;
    }

    static SpectralDensity two_site(double gamma, double width,
                                    SemicircleSupport support = SemicircleSupport::ZeroToW) {
        SpectralDensity j = semicircular(gamma, width, support);
        j.kind_ = Kind::TwoSite;
        j.n_sites_ = 2;
        return j;
    }

    Kind kind() const { return kind_; }
    int n_sites() const { return n_sites_; }

    double alpha() const { return alpha_; }
    double s_exponent() const { return s_; }
    double omega_c() const { return omega_c_; }
    double gamma() const { return gamma_; }
    double width() const { return width_; }
    SemicircleSupport circle_support() const { return circle_support_; }

    /// Scalar part J(omega); zero outside the support.
    double scalar(double omega) const {
        switch (kind_) {
        case Kind::Subohmic:
            if (omega <= 0.0) return 0.0;
            return 0.5 * alpha_ * std::pow(omega_c_, 1.0 - s_) *
                   std::pow(omega, s_) * std::exp(-omega / omega_c_);
        case Kind::Semicircular:
        case Kind::TwoSite: {
            const auto [lo, hi] = support();
            if (omega < lo || omega > hi) return 0.0;
            const double x = omega / width_;
            return gamma_ / M_PI * std::sqrt(std::max(0.0, 1.0 - x * x));
        }
        }
        return 0.0;
    }

    /// Inter-site phase r(omega) = exp(-i omega / 2W) of the two-site density.
    Complex site_phase(double omega) const {
        return std::exp(Complex(0.0, -omega / (2.0 * width_)));
    }

    /// Full matrix J_{jj'}(omega); Hermitian PSD, zero outside the support.
    Eigen::MatrixXcd evaluate(double omega) const {
        const double j = scalar(omega);
        if (n_sites_ == 1) {
            Eigen::MatrixXcd out(1, 1);
            out(0, 0) = j;
            return out;
        }
        const Complex r = site_phase(omega);
        Eigen::MatrixXcd out(2, 2);
        out << j, j * r, j * std::conj(r), j;
        return out;
    }

    /// Rank factorization g(omega) with J_{jj'} = g_j g_{j'}^*.
    Eigen::VectorXcd coupling_vector(double omega) const {
        const double root = std::sqrt(scalar(omega));
        Eigen::VectorXcd g(n_sites_);
        if (n_sites_ == 1) {
            g(0) = root;
        } else {
            g(0) = root;
            g(1) = root * std::conj(site_phase(omega));
        }
        return g;
    }

    /// Integration support. The subohmic tail is truncated where the
    /// exponential bound drops below 1e-14.
    std::pair<double, double> support() const {
        switch (kind_) {
        case Kind::Subohmic:
            return {0.0, omega_c_ * (40.0 + s_ * std::log(1e14))};
        case Kind::Semicircular:
        case Kind::TwoSite:
            if (circle_support_ == SemicircleSupport::ZeroToW) return {0.0, width_};
            return {-width_, width_};
        }
        return {0.0, 0.0};
    }

    /// Window used for Gauss-Legendre discretization and fit initialization:
    /// the exact support for the semicircle, and the interval holding 99.9%
    /// of the integrated density for the subohmic tail.
    std::pair<double, double> discretization_support() const {
        if (kind_ != Kind::Subohmic) return support();
        const auto [lo, hi] = support();
        auto mass = [&](double x) {
            return integrate([&](double w) { return Complex(scalar(w)); }, lo, x,
                             1e-12).real();
        };
        const double total = mass(hi);
        double a = lo, b = hi;
        for (int it = 0; it < 80 && (b - a) > 1e-12 * hi; ++it) {
            const double m = 0.5 * (a + b);
            (mass(m) < 0.999 * total ? a : b) = m;
        }
        return {lo, 0.5 * (a + b)};
    }

private:
    Kind kind_ = Kind::Subohmic;
    int n_sites_ = 1;
    double alpha_ = 0.0, s_ = 0.0, omega_c_ = 0.0;
    double gamma_ = 0.0, width_ = 0.0;
    SemicircleSupport circle_support_ = SemicircleSupport::ZeroToW;
};

/// Complex matrix-valued correlation samples on a uniform time grid.
struct BcfSamples {
    Eigen::VectorXd times;
    std::vector<Eigen::MatrixXcd> values;
    BathStatistics statistics = BathStatistics::BosonZeroT;

    int n_samples() const { return static_cast<int>(times.size()); }
    int n_sites() const {
        return values.empty() ? 0 : static_cast<int>(values.front().rows());
    }
    double dt() const {
        if (n_samples() < 2) throw Error("BcfSamples: need at least 2 samples");
        return times[1] - times[0];
    }

    /// Entry-sum reduction sum_{jj'} C_{jj'}(t_a) used for scalar exponent
    /// estimation in the multi-site case.
    Eigen::VectorXcd entry_sum() const {
        Eigen::VectorXcd out(n_samples());
        for (int a = 0; a < n_samples(); ++a) out[a] = values[a].sum();
        return out;
    }

    void validate() const {
        if (n_samples() < 2) throw Error("BcfSamples: need at least 2 samples");
        if (static_cast<int>(values.size()) != n_samples())
            throw Error("BcfSamples: times/values size mismatch");
        const double step = dt();
        for (int a = 1; a < n_samples(); ++a) {
            const double d = times[a] - times[a - 1];
            if (!(d > 0.0) || std::abs(d - step) > 1e-12 * std::max(1.0, std::abs(step)))
                throw Error("BcfSamples: grid not uniform and increasing");
        }
    }
};

namespace detail {

// theta-substituted semicircle integral over [theta_lo, theta_hi]:
//   int J(W sin t) extra(W sin t) e^{i sign W t_phys sin t} W cos t dt
// The substitution removes the sqrt endpoint singularity at |omega| = W.
template <typename Extra>
Complex semicircle_integral(const SpectralDensity& j, double theta_lo,
                            double theta_hi, double t, double phase_sign,
                            const Extra& extra, double tol) {
    const double wdt = j.width();
    const double rate = wdt * t + 0.75; // site phase adds < 1/2; margin
    auto f = [&](double theta) {
        const double omega = wdt * std::sin(theta);
        const double jac = wdt * std::cos(theta);
        return j.scalar(omega) * extra(omega) * jac *
               std::exp(Complex(0.0, phase_sign * omega * t));
    };
    return integrate_oscillatory(f, theta_lo, theta_hi, rate, tol);
}

template <typename Extra>
Complex subohmic_integral(const SpectralDensity& j, double t, double phase_sign,
                          const Extra& extra, double tol) {
    const auto [lo, hi] = j.support();
    auto f = [&](double omega) {
        return j.scalar(omega) * extra(omega) *
               std::exp(Complex(0.0, phase_sign * omega * t));
    };
    return integrate_oscillatory(f, lo, hi, t, tol);
}

// One matrix entry of int_{window} J_{jj'}(omega) e^{i phase_sign omega t}.
inline Complex bcf_entry(const SpectralDensity& j, int row, int col, double t,
                         double phase_sign, double theta_lo, double theta_hi,
                         double tol) {
    auto extra = [&](double omega) -> Complex {
        if (j.n_sites() == 1 || row == col) return Complex(1.0);
        return (row == 0) ? j.site_phase(omega) : std::conj(j.site_phase(omega));
    };
    if (j.kind() == SpectralDensity::Kind::Subohmic)
        return subohmic_integral(j, t, phase_sign, extra, tol);
    return semicircle_integral(j, theta_lo, theta_hi, t, phase_sign, extra, tol);
}

inline Eigen::MatrixXcd bcf_matrix(const SpectralDensity& j, double t,
                                   double phase_sign, double theta_lo,
                                   double theta_hi, double tol) {
    const int n = j.n_sites();
    Eigen::MatrixXcd out(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (r == c && r > 0) {
                out(r, c) = out(0, 0); // equal diagonal entries by construction
                continue;
            }
            out(r, c) = bcf_entry(j, r, c, t, phase_sign, theta_lo, theta_hi, tol);
        }
    return out;
}

} // namespace detail

/// Zero-temperature bosonic bath correlation function
/// C_{jj'}(t) = int J_{jj'}(omega) e^{-i omega t} d omega over the support.
inline Eigen::MatrixXcd bcf_boson_zeroT(const SpectralDensity& j, double t,
                                        double tol = 1e-10) {
    if (t < 0.0) throw Error("bcf_boson_zeroT: t must be >= 0");
    double theta_lo = 0.0, theta_hi = 0.5 * M_PI;
    if (j.kind() != SpectralDensity::Kind::Subohmic &&
        j.circle_support() == SemicircleSupport::Symmetric)
        theta_lo = -0.5 * M_PI;
    return detail::bcf_matrix(j, t, -1.0, theta_lo, theta_hi, tol);
}

/// Fermionic greater/lesser correlation functions at zero temperature with a
/// step-function occupation: the greater part integrates the empty window
/// omega > 0 with phase e^{-i omega t}, the lesser the filled window
/// omega < 0 with phase e^{+i omega t}.
inline Eigen::MatrixXcd bcf_fermion(const SpectralDensity& j, double t,
                                    FermionWindow which, double tol = 1e-10) {
    if (t < 0.0) throw Error("bcf_fermion: t must be >= 0");
    if (j.kind() == SpectralDensity::Kind::Subohmic ||
        j.circle_support() != SemicircleSupport::Symmetric)
        throw Error("bcf_fermion: support must straddle omega = 0");
    if (which == FermionWindow::Greater)
        return detail::bcf_matrix(j, t, -1.0, 0.0, 0.5 * M_PI, tol);
    return detail::bcf_matrix(j, t, +1.0, -0.5 * M_PI, 0.0, tol);
}

/// Sample the requested correlation function on a uniform grid
/// {0, dt, ..., t_max} with dt = t_max / (n_samples - 1).
inline BcfSamples sample_bcf(const SpectralDensity& j, double t_max,
                             int n_samples, BathStatistics statistics,
                             double tol = 1e-10) {
    if (n_samples < 2) throw Error("sample_bcf: need n_samples >= 2");
    if (!(t_max > 0.0)) throw Error("sample_bcf: need t_max > 0");
    BcfSamples out;
    out.statistics = statistics;
    out.times = Eigen::VectorXd::LinSpaced(n_samples, 0.0, t_max);
    out.values.reserve(n_samples);
    for (int a = 0; a < n_samples; ++a) {
        const double t = out.times[a];
        switch (statistics) {
        case BathStatistics::BosonZeroT:
            out.values.push_back(bcf_boson_zeroT(j, t, tol));
            break;
        case BathStatistics::FermionGreater:
            out.values.push_back(bcf_fermion(j, t, FermionWindow::Greater, tol));
            break;
        case BathStatistics::FermionLesser:
            out.values.push_back(bcf_fermion(j, t, FermionWindow::Lesser, tol));
            break;
        }
    }
    return out;
}

} // namespace qlpm

#endif
