#pragma once

#include <fleetgp/types.hpp>

#include <cmath>

namespace fleetgp::gp {

/// Lengthscales l_d of the squared exponential kernel, one per input dimension.
struct SeKernelParams {
    Vector lengthscales;

    SeKernelParams() = default;
    explicit SeKernelParams(Vector l) : lengthscales(std::move(l)) {}

    static SeKernelParams isotropic(Eigen::Index dim, double l) { return SeKernelParams(Vector::Constant(dim, l)); }

    Eigen::Index dim() const { return lengthscales.size(); }

    void validate() const
    {
        detail::require(lengthscales.size() > 0, "SE kernel needs at least one lengthscale");
        for (Eigen::Index d = 0; d < lengthscales.size(); ++d)
            detail::require(std::isfinite(lengthscales[d]) && lengthscales[d] > 0.0, "SE lengthscales must be positive");
    }
};

/// k(x, x') = exp(-sum_d (x_d - x'_d)^2 / (2 l_d^2))
inline double se_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2, const SeKernelParams& params)
{
    detail::require(x.size() == x2.size() && x.size() == params.dim(), "se_kernel: dimension mismatch");
    double acc = 0.0;
    for (Eigen::Index d = 0; d < x.size(); ++d) {
        double z = (x[d] - x2[d]) / params.lengthscales[d];
        acc += z * z;
    }
    return std::exp(-0.5 * acc);
}

namespace kernel_detail {

// Pairwise squared distances between the rows of A and B, accumulated per
// dimension (no |a|^2 + |b|^2 - 2ab cancellation).
inline Matrix squared_distances(const Matrix& A, const Matrix& B)
{
    Matrix d = Matrix::Zero(A.rows(), B.rows());
    for (Eigen::Index k = 0; k < A.cols(); ++k)
        d.array() += (A.col(k).replicate(1, B.rows()) - B.col(k).transpose().replicate(A.rows(), 1)).array().square();
    return d;
}

} // namespace kernel_detail

/// Gram matrix of the SE kernel between the rows of X and X2.
inline Matrix gram_matrix(const Matrix& X, const Matrix& X2, const SeKernelParams& params)
{
    fleetgp::detail::require(X.cols() == params.dim() && X2.cols() == params.dim(), "gram_matrix: dimension mismatch");
    if (X.rows() == 0 || X2.rows() == 0)
        return Matrix(X.rows(), X2.rows());
    const Vector inv_l = params.lengthscales.cwiseInverse();
    const Matrix A = X * inv_l.asDiagonal();
    const Matrix B = X2 * inv_l.asDiagonal();
    Matrix K = (-0.5 * kernel_detail::squared_distances(A, B)).array().exp().matrix();
    return K;
}

/// SE kernel with an amplitude. Single-member transition models keep
/// signal_variance = 1; the value function GP fits it.
struct SeKernel {
    SeKernelParams params;
    double signal_variance = 1.0;

    SeKernel() = default;
    explicit SeKernel(SeKernelParams p, double sf2 = 1.0) : params(std::move(p)), signal_variance(sf2) {}

    Eigen::Index dim() const { return params.dim(); }

    double operator()(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2) const
    {
        return signal_variance * se_kernel(x, x2, params);
    }

    Matrix gram(const Matrix& X, const Matrix& X2) const { return signal_variance * gram_matrix(X, X2, params); }

    double prior_variance() const { return signal_variance; }
};

} // namespace fleetgp::gp
