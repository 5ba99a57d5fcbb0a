#ifndef QLPM_LAPACK_HPP
#define QLPM_LAPACK_HPP

#include <complex>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/Dense>

#include "qlpm/errors.hpp"

namespace qlpm {

/// Full eigenvalue set of a dense complex nonsymmetric matrix. Large
/// problems go through LAPACK's blocked zgeev; tiny ones stay in Eigen.
inline Eigen::VectorXcd dense_eigenvalues(Eigen::MatrixXcd a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw Error("dense_eigenvalues: matrix must be square");
    if (n == 0) return {};
    if (n <= 32) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a, false);
        return es.eigenvalues();
    }
    Eigen::VectorXcd evals(n);
    const lapack_int info = LAPACKE_zgeev(
        LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, evals.data(), nullptr, 1,
        nullptr, 1);
    if (info != 0)
        throw Error("zgeev failed with info = " + std::to_string(info));
    return evals;
}

} // namespace qlpm

#endif
