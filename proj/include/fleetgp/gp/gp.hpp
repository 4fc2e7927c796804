#pragma once

#include <fleetgp/gp/cholesky.hpp>
#include <fleetgp/gp/se_kernel.hpp>

#include <cmath>
#include <numbers>

namespace fleetgp::gp {

/// Noise used for deterministic transition data.
inline constexpr double kDeterministicNoise = 1e-8;

/// Training set (X_tr, y_tr) with observational noise variance.
struct GpDataset {
    Matrix inputs;  // N x D
    Vector targets; // N
    double noise_variance = kDeterministicNoise;

    GpDataset() = default;
    GpDataset(Matrix X, Vector y, double noise = kDeterministicNoise)
        : inputs(std::move(X)), targets(std::move(y)), noise_variance(noise)
    {
        validate();
    }

    Eigen::Index size() const { return targets.size(); }
    Eigen::Index dim() const { return inputs.cols(); }
    bool empty() const { return targets.size() == 0; }

    void validate() const
    {
        detail::require(inputs.rows() == targets.size(), "GpDataset: inputs and targets differ in length");
        detail::require(noise_variance >= 0.0 && std::isfinite(noise_variance), "GpDataset: noise variance must be >= 0");
    }
};

struct PosteriorStats {
    Vector mean;
    Matrix covariance;
};

/// Posterior of a zero-mean GP at `queries` given `data`:
///   mean = K_qt C^-1 y,  cov = K_qq - K_qt C^-1 K_tq,  C = K_tt + s2 I.
/// Uses a Cholesky solve; an empty dataset returns the prior.
template <typename Kernel>
PosteriorStats gp_posterior(const Matrix& queries, const GpDataset& data, const Kernel& kernel)
{
    data.validate();
    detail::require(queries.rows() > 0, "gp_posterior: no query points");
    detail::require(queries.cols() == kernel.dim(), "gp_posterior: query dimension mismatch");
    PosteriorStats post;
    Matrix Kqq = kernel.gram(queries, queries);
    if (data.empty()) {
        post.mean = Vector::Zero(queries.rows());
        post.covariance = std::move(Kqq);
        return post;
    }
    detail::require(data.dim() == kernel.dim(), "gp_posterior: data dimension mismatch");
    Matrix C = kernel.gram(data.inputs, data.inputs);
    C.diagonal().array() += data.noise_variance;
    const Cholesky chol = robust_cholesky(C);
    const Matrix Kqt = kernel.gram(queries, data.inputs);
    post.mean = Kqt * chol.solve(data.targets);
    const Matrix V = chol.half_solve(Kqt.transpose());
    post.covariance = Kqq - V.transpose() * V;
    post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
    return post;
}

/// log N(y; 0, C)
template <typename Kernel>
double log_marginal_likelihood(const GpDataset& data, const Kernel& kernel)
{
    data.validate();
    detail::require(!data.empty(), "log_marginal_likelihood: empty dataset");
    detail::require(data.dim() == kernel.dim(), "log_marginal_likelihood: dimension mismatch");
    Matrix C = kernel.gram(data.inputs, data.inputs);
    C.diagonal().array() += data.noise_variance;
    const Cholesky chol = robust_cholesky(C);
    const Vector alpha = chol.solve(data.targets);
    const double n = static_cast<double>(data.size());
    return -0.5 * data.targets.dot(alpha) - 0.5 * chol.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct LmlGradient {
    double value = 0.0;
    Vector gradient; // w.r.t. log-parameters
};

/// Log marginal likelihood of an SE-kernel GP and its gradient w.r.t. the log
/// lengthscales, followed (if `with_signal_variance`) by the log signal variance.
inline LmlGradient lml_with_gradient(const GpDataset& data, const SeKernel& kernel, bool with_signal_variance)
{
    data.validate();
    detail::require(!data.empty(), "lml_with_gradient: empty dataset");
    const Eigen::Index D = kernel.dim();
    detail::require(data.dim() == D, "lml_with_gradient: dimension mismatch");
    const Eigen::Index n = data.size();

    const Matrix K = kernel.gram(data.inputs, data.inputs);
    Matrix C = K;
    C.diagonal().array() += data.noise_variance;
    const Cholesky chol = robust_cholesky(C);
    const Vector alpha = chol.solve(data.targets);

    LmlGradient out;
    out.value = -0.5 * data.targets.dot(alpha) - 0.5 * chol.log_det()
                - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    // A = alpha alpha^T - C^-1 ; dL/dtheta = 1/2 sum(A .* dK/dtheta)
    Matrix A = alpha * alpha.transpose() - chol.solve(Matrix::Identity(n, n));
    const Matrix AK = A.cwiseProduct(K);
    out.gradient.resize(D + (with_signal_variance ? 1 : 0));
    for (Eigen::Index d = 0; d < D; ++d) {
        const double l = kernel.params.lengthscales[d];
        const Vector col = data.inputs.col(d);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r = col[i] - col[j];
                acc += AK(i, j) * r * r;
            }
        out.gradient[d] = 0.5 * acc / (l * l);
    }
    if (with_signal_variance)
        out.gradient[D] = 0.5 * AK.sum();
    return out;
}

/// A GP conditioned on a dataset, factorized once for repeated prediction.
class GpModel {
public:
    GpModel() = default;

    GpModel(GpDataset data, SeKernel kernel) : data_(std::move(data)), kernel_(std::move(kernel))
    {
        data_.validate();
        if (data_.empty())
            return;
        detail::require(data_.dim() == kernel_.dim(), "GpModel: dimension mismatch");
        Matrix C = kernel_.gram(data_.inputs, data_.inputs);
        C.diagonal().array() += data_.noise_variance;
        chol_ = robust_cholesky(C);
        alpha_ = chol_.solve(data_.targets);
    }

    const GpDataset& data() const { return data_; }
    const SeKernel& kernel() const { return kernel_; }
    const Cholesky& cholesky() const { return chol_; }
    const Vector& alpha() const { return alpha_; }
    Eigen::Index dim() const { return kernel_.dim(); }

    /// Posterior mean and marginal variance at each query row.
    void predict(const Matrix& queries, Vector& mean, Vector& variance) const
    {
        const Eigen::Index q = queries.rows();
        if (data_.empty()) {
            mean = Vector::Zero(q);
            variance = Vector::Constant(q, kernel_.prior_variance());
            return;
        }
        const Matrix Kqt = kernel_.gram(queries, data_.inputs);
        mean = Kqt * alpha_;
        const Matrix V = chol_.half_solve(Kqt.transpose());
        variance = (kernel_.prior_variance() - V.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
    }

    PosteriorStats posterior(const Matrix& queries) const { return gp_posterior(queries, data_, kernel_); }

private:
    GpDataset data_;
    SeKernel kernel_;
    Cholesky chol_;
    Vector alpha_;
};

} // namespace fleetgp::gp
