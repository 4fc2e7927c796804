#pragma once

#include <fleetgp/types.hpp>

#include <Eigen/Cholesky>

#include <array>
#include <cmath>

namespace fleetgp::gp {

/// Diagonal jitter levels tried, in order, when a covariance factorization fails.
inline constexpr std::array<double, 4> kJitterLadder{0.0, 1e-10, 1e-8, 1e-6};

/// Cholesky factor of a symmetric positive-definite matrix together with the
/// jitter that had to be added to its diagonal.
struct Cholesky {
    Eigen::LLT<Matrix> llt;
    double jitter = 0.0;

    Eigen::Index size() const { return llt.matrixLLT().rows(); }

    template <typename Rhs>
    typename Rhs::PlainObject solve(const Eigen::MatrixBase<Rhs>& B) const
    {
        return llt.solve(B);
    }

    /// L^{-1} B
    template <typename Rhs>
    typename Rhs::PlainObject half_solve(const Eigen::MatrixBase<Rhs>& B) const
    {
        return llt.matrixL().solve(B);
    }

    double log_det() const { return 2.0 * llt.matrixLLT().diagonal().array().log().sum(); }
};

namespace cholesky_detail {

inline bool factor_ok(const Eigen::LLT<Matrix>& llt)
{
    if (llt.info() != Eigen::Success)
        return false;
    const auto diag = llt.matrixLLT().diagonal();
    return diag.allFinite() && (diag.array() > 0.0).all();
}

} // namespace cholesky_detail

/// Factorizes C, escalating diagonal jitter along kJitterLadder on failure.
/// Throws NumericalError listing every attempted level if all fail.
inline Cholesky robust_cholesky(const Matrix& C, const char* what = "covariance matrix is not positive definite")
{
    detail::require(C.rows() == C.cols(), "robust_cholesky: matrix must be square");
    std::vector<double> tried;
    for (double jitter : kJitterLadder) {
        tried.push_back(jitter);
        Cholesky chol;
        chol.jitter = jitter;
        if (jitter == 0.0)
            chol.llt.compute(C);
        else
            chol.llt.compute(C + jitter * Matrix::Identity(C.rows(), C.cols()));
        if (cholesky_detail::factor_ok(chol.llt))
            return chol;
    }
    throw NumericalError(what, std::move(tried));
}

} // namespace fleetgp::gp
