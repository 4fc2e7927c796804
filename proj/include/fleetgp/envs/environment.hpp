#pragma once

#include <fleetgp/gprl/policy.hpp>

#include <optional>
#include <random>
#include <string>

namespace fleetgp::envs {

using gprl::Box;

/// Transition samples in raw environment units, one per row.
struct TransitionBatch {
    Matrix states;
    Matrix actions;
    Matrix next_states;

    Eigen::Index size() const { return states.rows(); }

    /// [state, action] rows.
    Matrix inputs() const
    {
        Matrix X(size(), states.cols() + actions.cols());
        X << states, actions;
        return X;
    }
};

/// Affine map of a box onto [-1, 1]^D.
inline Vector to_unit(const Vector& x, const Box& b) { return (2.0 * (x - b.lower).array() / b.width().array() - 1.0).matrix(); }
inline Vector from_unit(const Vector& u, const Box& b) { return (b.lower.array() + 0.5 * (u.array() + 1.0) * b.width().array()).matrix(); }

inline Matrix to_unit_rows(const Matrix& X, const Box& b)
{
    Matrix U(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        U.row(i) = to_unit(X.row(i).transpose(), b).transpose();
    return U;
}

/// A deterministic fleet member. Steps work in raw units; GP-facing helpers
/// work in coordinates normalized to [-1, 1].
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string name() const = 0;
    virtual Box state_box() const = 0;
    virtual Box action_box() const = 0;
    /// Finite action set (rows, raw units); empty for continuous actions.
    virtual std::optional<Matrix> discrete_actions() const { return std::nullopt; }
    virtual Vector start() const = 0;
    virtual Vector goal() const = 0;
    virtual double reward_sigma() const = 0;
    /// State dimensions entering the reward; empty means all.
    virtual std::vector<int> reward_dims() const { return {}; }
    virtual Vector step(const Vector& state, const Vector& action) const = 0;

    /// Uniform draw from the state box.
    virtual Vector sample_state(std::mt19937_64& rng) const
    {
        const Box b = state_box();
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vector s(b.dim());
        for (Eigen::Index d = 0; d < b.dim(); ++d)
            s[d] = b.lower[d] + u(rng) * (b.upper[d] - b.lower[d]);
        return s;
    }

    Vector sample_action(std::mt19937_64& rng) const
    {
        if (const auto choices = discrete_actions()) {
            std::uniform_int_distribution<Eigen::Index> pick(0, choices->rows() - 1);
            return choices->row(pick(rng)).transpose();
        }
        const Box b = action_box();
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vector a(b.dim());
        for (Eigen::Index d = 0; d < b.dim(); ++d)
            a[d] = b.lower[d] + u(rng) * (b.upper[d] - b.lower[d]);
        return a;
    }

    Eigen::Index state_dim() const { return state_box().dim(); }
    Eigen::Index action_dim() const { return action_box().dim(); }

    Vector normalize_state(const Vector& s) const { return to_unit(s, state_box()); }
    Vector denormalize_state(const Vector& u) const { return from_unit(u, state_box()); }
    Vector normalize_action(const Vector& a) const { return to_unit(a, action_box()); }
    Vector denormalize_action(const Vector& u) const { return from_unit(u, action_box()); }

    gprl::ActionSpace normalized_action_space() const
    {
        if (const auto choices = discrete_actions())
            return gprl::ActionSpace::finite(to_unit_rows(*choices, action_box()));
        return gprl::ActionSpace::continuous(Box::symmetric(action_dim()));
    }

    gprl::RewardSpec normalized_reward() const
    {
        gprl::RewardSpec r;
        r.goal = normalize_state(goal());
        r.sigma = reward_sigma();
        r.dims = reward_dims();
        return r;
    }

    /// Squared normalized distance to the goal over the reward dimensions.
    double squared_goal_distance(const Vector& state) const
    {
        const Vector d = normalize_state(state) - normalize_state(goal());
        const auto dims = reward_dims();
        if (dims.empty())
            return d.squaredNorm();
        double acc = 0.0;
        for (int k : dims)
            acc += d[k] * d[k];
        return acc;
    }
};

/// n transitions with states and actions drawn uniformly; deterministic under `seed`.
inline TransitionBatch sample_batch(const Environment& env, int n, std::uint64_t seed)
{
    detail::require(n >= 1, "sample_batch: n must be >= 1");
    std::mt19937_64 rng(seed);
    TransitionBatch b;
    b.states.resize(n, env.state_dim());
    b.actions.resize(n, env.action_dim());
    b.next_states.resize(n, env.state_dim());
    for (int i = 0; i < n; ++i) {
        const Vector s = env.sample_state(rng);
        const Vector a = env.sample_action(rng);
        b.states.row(i) = s.transpose();
        b.actions.row(i) = a.transpose();
        b.next_states.row(i) = env.step(s, a).transpose();
    }
    return b;
}

/// The batch in normalized coordinates: GP inputs [s, a] and targets s'.
inline void normalize_batch(const Environment& env, const TransitionBatch& b, Matrix& inputs, Matrix& targets)
{
    const Matrix S = to_unit_rows(b.states, env.state_box());
    const Matrix A = to_unit_rows(b.actions, env.action_box());
    inputs.resize(b.size(), S.cols() + A.cols());
    inputs << S, A;
    targets = to_unit_rows(b.next_states, env.state_box());
}

} // namespace fleetgp::envs
