#pragma once

#include <fleetgp/gp/hyperopt.hpp>
#include <fleetgp/gprl/transition_model.hpp>

namespace fleetgp::gprl {

/// Observational noise of the value GP.
inline constexpr double kValueNoise = 0.1;

/// Prior mean of the value GP: zero, or the mean of the support values.
enum class ValuePrior { zero, support_mean };

/// GP over support states with support values: the learned value function.
class ValueModel {
public:
    ValueModel() = default;

    ValueModel(Matrix support, Vector values, gp::SeKernel kernel, double noise = kValueNoise, ValuePrior prior = ValuePrior::zero)
        : support_(std::move(support)), values_(std::move(values)), kernel_(std::move(kernel)), noise_(noise), prior_(prior)
    {
        detail::require(support_.rows() == values_.size(), "ValueModel: support/value count mismatch");
        detail::require(support_.rows() > 0, "ValueModel: empty support set");
        detail::require(support_.cols() == kernel_.dim(), "ValueModel: kernel dimension mismatch");
        detail::require(noise_ >= 0.0, "ValueModel: negative noise");
        Matrix C = kernel_.gram(support_, support_);
        C.diagonal().array() += noise_;
        chol_ = gp::robust_cholesky(C, "value GP covariance is not positive definite");
        prior_mean_ = prior_ == ValuePrior::support_mean ? values_.mean() : 0.0;
        alpha_ = chol_.solve((values_.array() - prior_mean_).matrix());
    }

    /// Evidence-maximizing fit; `init` seeds restart 0.
    static ValueModel fit(Matrix support, Vector values, const gp::SeKernel& init, gp::HyperoptOptions opt,
                          double noise = kValueNoise, ValuePrior prior = ValuePrior::zero)
    {
        const double m = prior == ValuePrior::support_mean ? values.mean() : 0.0;
        const gp::GpDataset data(support, (values.array() - m).matrix(), noise);
        const auto result = gp::optimize_hyperparameters_full(data, init, opt);
        return ValueModel(std::move(support), std::move(values), result.kernel, noise, prior);
    }

    const Matrix& support() const { return support_; }
    const Vector& values() const { return values_; }
    const gp::SeKernel& kernel() const { return kernel_; }
    double noise() const { return noise_; }
    ValuePrior prior() const { return prior_; }
    double prior_mean() const { return prior_mean_; }
    const Vector& weights() const { return alpha_; }
    Eigen::Index size() const { return support_.rows(); }
    Eigen::Index dim() const { return support_.cols(); }

    void predict(const Matrix& queries, Vector& mean, Vector& variance) const
    {
        const Matrix Kq = kernel_.gram(queries, support_);
        mean = (Kq * alpha_).array() + prior_mean_;
        const Matrix V = chol_.half_solve(Kq.transpose());
        variance = (kernel_.prior_variance() - V.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
    }

    /// Row q, column j: E[k_V(s', s_j)] for s' ~ N(mean_q, diag(variance_q)).
    Matrix expected_rows(const Matrix& mean, const Matrix& variance) const
    {
        detail::require(mean.cols() == dim() && variance.cols() == dim() && mean.rows() == variance.rows(),
                        "ValueModel: state dimension mismatch");
        const Eigen::Index Q = mean.rows(), N = size();
        Matrix expo = Matrix::Zero(Q, N);
        Vector log_scale = Vector::Constant(Q, std::log(kernel_.signal_variance));
        for (Eigen::Index d = 0; d < dim(); ++d) {
            const double l2 = kernel_.params.lengthscales[d] * kernel_.params.lengthscales[d];
            const Vector denom = (variance.col(d).array() + l2).matrix();
            log_scale.array() -= 0.5 * (denom.array() / l2).log();
            for (Eigen::Index j = 0; j < N; ++j)
                expo.col(j).array() -= 0.5 * (mean.col(d).array() - support_(j, d)).square() / denom.array();
        }
        expo.colwise() += log_scale;
        return expo.array().exp().matrix();
    }

    /// E[V(s')] for each row: m + expected_rows * C^-1 (v - m).
    Vector expected_values(const Matrix& mean, const Matrix& variance) const
    {
        return (expected_rows(mean, variance) * alpha_).array() + prior_mean_;
    }

    /// Linear map P with E[V(s')] = P v. With W = expected_rows * C^-1 this is
    /// W for a zero prior and W + (1 - W 1) 1^T / N for the support-mean prior.
    Matrix transition_matrix(const Matrix& mean, const Matrix& variance) const
    {
        Matrix P = chol_.solve(expected_rows(mean, variance).transpose()).transpose();
        if (prior_ == ValuePrior::support_mean) {
            const Vector rest = (1.0 - P.rowwise().sum().array()).matrix() / static_cast<double>(size());
            P.colwise() += rest;
        }
        return P;
    }

private:
    Matrix support_;
    Vector values_;
    gp::SeKernel kernel_;
    double noise_ = kValueNoise;
    ValuePrior prior_ = ValuePrior::zero;
    double prior_mean_ = 0.0;
    gp::Cholesky chol_;
    Vector alpha_;
};

struct ExpectedValueRow {
    Vector row;   // E[k_V(s', s_j)] over support points
    double value; // E[V(s')] = prior mean + row . C^-1 (v - prior mean)
};

inline ExpectedValueRow expected_value_row(const GaussianState& g, const ValueModel& v)
{
    g.validate();
    const Matrix rows = v.expected_rows(g.mean.transpose(), g.variance.transpose());
    return {rows.row(0).transpose(), rows.row(0).dot(v.weights()) + v.prior_mean()};
}

} // namespace fleetgp::gprl
