#pragma once

#include <fleetgp/gprl/transition_model.hpp>

#include <cmath>
#include <numbers>

namespace fleetgp::gprl {

/// Bell-shaped reward centred on `goal` with width `sigma`. Only the state
/// dimensions listed in `dims` enter the reward (all of them when empty).
struct RewardSpec {
    Vector goal;
    double sigma = 1.0;
    std::vector<int> dims;
    double weight = 1.0;

    std::vector<int> active_dims() const
    {
        if (!dims.empty())
            return dims;
        std::vector<int> all(static_cast<std::size_t>(goal.size()));
        for (std::size_t d = 0; d < all.size(); ++d)
            all[d] = static_cast<int>(d);
        return all;
    }

    void validate() const
    {
        detail::require(sigma > 0.0 && std::isfinite(sigma), "RewardSpec: sigma must be positive");
        detail::require(weight > 0.0, "RewardSpec: weight must be positive");
        detail::require(goal.size() > 0, "RewardSpec: empty goal");
        for (int d : dims)
            detail::require(d >= 0 && d < goal.size(), "RewardSpec: reward dimension out of range");
    }

    /// Peak value (2 pi sigma^2)^(-D/2), D the number of active dimensions.
    double max_reward() const
    {
        const double D = static_cast<double>(active_dims().size());
        return weight * std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.5 * D);
    }
};

/// Expected reward for a batch of Gaussian next states (rows of `mean` and
/// `variance`): N(goal; mu, Sigma + sigma^2 I) restricted to the active dims.
inline Vector expected_reward_batch(const Matrix& mean, const Matrix& variance, const RewardSpec& r)
{
    r.validate();
    detail::require(mean.cols() == r.goal.size() && variance.cols() == r.goal.size() && mean.rows() == variance.rows(),
                    "expected_reward: state dimension mismatch");
    const double s2 = r.sigma * r.sigma;
    Vector log_value = Vector::Zero(mean.rows());
    for (int d : r.active_dims()) {
        const auto C = (variance.col(d).array() + s2);
        const auto diff = (mean.col(d).array() - r.goal[d]);
        log_value.array() += -0.5 * (diff.square() / C) - 0.5 * (2.0 * std::numbers::pi * C).log();
    }
    return r.weight * log_value.array().exp().matrix();
}

inline double expected_reward(const GaussianState& g, const RewardSpec& r)
{
    g.validate();
    return expected_reward_batch(g.mean.transpose(), g.variance.transpose(), r)[0];
}

/// Reward at deterministic states (rows of `states`).
inline Vector reward_at(const Matrix& states, const RewardSpec& r)
{
    return expected_reward_batch(states, Matrix::Zero(states.rows(), states.cols()), r);
}

} // namespace fleetgp::gprl
