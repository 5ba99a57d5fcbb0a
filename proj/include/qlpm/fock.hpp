#ifndef QLPM_FOCK_HPP
#define QLPM_FOCK_HPP

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

#include "qlpm/errors.hpp"
#include "qlpm/quadrature.hpp"

namespace qlpm {

using SparseCxd = Eigen::SparseMatrix<Complex>;

inline SparseCxd sparse_identity(int n) {
    SparseCxd id(n, n);
    id.setIdentity();
    return id;
}

/// Bosonic lowering operator on a truncated Fock space of dimension `dim`
/// (occupations 0 .. dim-1).
inline SparseCxd boson_lowering(int dim) {
    SparseCxd a(dim, dim);
    a.reserve(Eigen::VectorXi::Constant(dim, 1));
    for (int n = 1; n < dim; ++n) a.insert(n - 1, n) = std::sqrt(double(n));
    a.makeCompressed();
    return a;
}

/// Tensor space: system factor first, then one truncated bosonic factor per
/// pseudomode.
struct TensorSpace {
    int d_system = 1;
    std::vector<int> mode_dims;

    int bath_dim() const {
        int d = 1;
        for (int m : mode_dims) d *= m;
        return d;
    }
    int dim() const { return d_system * bath_dim(); }

    SparseCxd system_operator(const Eigen::MatrixXcd& op) const {
        return Eigen::kroneckerProduct(op.sparseView(), sparse_identity(bath_dim()))
            .eval();
    }

    SparseCxd mode_lowering(int k) const {
        SparseCxd op = sparse_identity(d_system);
        for (int j = 0; j < static_cast<int>(mode_dims.size()); ++j) {
            const SparseCxd factor = j == k ? boson_lowering(mode_dims[j])
                                            : sparse_identity(mode_dims[j]);
            op = Eigen::kroneckerProduct(op, factor).eval();
        }
        return op;
    }
};

/// Partial trace over the bath factor: rho_S(i, j) = sum_b rho(ib, jb).
inline Eigen::MatrixXcd partial_trace_bath(const Eigen::MatrixXcd& rho,
                                           int d_system) {
    const int d = static_cast<int>(rho.rows());
    if (d % d_system != 0) throw Error("partial_trace_bath: dimension mismatch");
    const int d_bath = d / d_system;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d_system, d_system);
    for (int i = 0; i < d_system; ++i)
        for (int j = 0; j < d_system; ++j)
            for (int b = 0; b < d_bath; ++b)
                out(i, j) += rho(i * d_bath + b, j * d_bath + b);
    return out;
}

} // namespace qlpm

#endif
