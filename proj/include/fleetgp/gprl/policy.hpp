#pragma once

#include <fleetgp/gprl/latin_hypercube.hpp>
#include <fleetgp/gprl/reward.hpp>
#include <fleetgp/gprl/value_model.hpp>

#include <Eigen/LU>

#include <cstring>
#include <functional>
#include <limits>
#include <optional>

namespace fleetgp::gprl {

/// Either a continuous box or a finite list of actions (one per row).
struct ActionSpace {
    bool discrete = false;
    Box box;
    Matrix choices;

    static ActionSpace continuous(Box b)
    {
        b.validate();
        ActionSpace a;
        a.box = std::move(b);
        return a;
    }

    static ActionSpace finite(Matrix c)
    {
        detail::require(c.rows() > 0 && c.cols() > 0, "ActionSpace: empty action set");
        ActionSpace a;
        a.discrete = true;
        a.choices = std::move(c);
        return a;
    }

    Eigen::Index dim() const { return discrete ? choices.cols() : box.dim(); }

    bool contains(const Vector& a) const
    {
        if (!discrete)
            return box.contains(a);
        for (Eigen::Index k = 0; k < choices.rows(); ++k)
            if (choices.row(k).transpose() == a)
                return true;
        return false;
    }

    /// n uniformly random actions (rows).
    Matrix sample(Eigen::Index n, std::mt19937_64& rng) const
    {
        Matrix A(n, dim());
        if (discrete) {
            std::uniform_int_distribution<Eigen::Index> pick(0, choices.rows() - 1);
            for (Eigen::Index i = 0; i < n; ++i)
                A.row(i) = choices.row(pick(rng));
        } else {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index d = 0; d < dim(); ++d)
                    A(i, d) = box.lower[d] + u(rng) * (box.upper[d] - box.lower[d]);
        }
        return A;
    }
};

/// Frozen models defining the one-step lookahead objective
/// E[R(s')] + gamma E[V(s')] with s' = tau(s, a).
struct Lookahead {
    TransitionModelPtr transition;
    std::shared_ptr<const ValueModel> value;
    RewardSpec reward;
    double gamma = 0.99;

    struct Terms {
        Matrix mean;
        Matrix variance;
        Vector reward;
    };

    Terms predict(const Matrix& states, const Matrix& actions) const
    {
        detail::require(states.rows() == actions.rows(), "Lookahead: state/action count mismatch");
        Matrix X(states.rows(), states.cols() + actions.cols());
        X << states, actions;
        Terms t;
        transition->predict(X, t.mean, t.variance);
        t.reward = expected_reward_batch(t.mean, t.variance, reward);
        return t;
    }

    Vector objective(const Matrix& states, const Matrix& actions) const
    {
        const Terms t = predict(states, actions);
        if (gamma == 0.0)
            return t.reward;
        return t.reward + gamma * value->expected_values(t.mean, t.variance);
    }
};

struct ImprovementOptions {
    int starts = 16;
    double initial_step = 1.0 / 16.0; // fraction of the box width
    double min_step = 1e-3;
    int max_iterations = 60;
};

namespace policy_detail {

/// Objective values closer than this relative gap count as tied (vectorized and
/// scalar exp paths differ in the last bits).
inline constexpr double kTieTolerance = 1e-12;

inline bool improves(double candidate, double incumbent)
{
    return candidate > incumbent + kTieTolerance * std::abs(incumbent);
}

inline bool ties(double a, double b)
{
    return !improves(a, b) && !improves(b, a);
}

inline bool lex_less(const Eigen::Ref<const RowVector>& a, const Eigen::Ref<const RowVector>& b)
{
    for (Eigen::Index d = 0; d < a.size(); ++d) {
        if (a[d] < b[d])
            return true;
        if (a[d] > b[d])
            return false;
    }
    return false;
}

inline std::uint64_t hash_state(const Vector& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        std::uint64_t bits;
        const double v = s[i] == 0.0 ? 0.0 : s[i];
        std::memcpy(&bits, &v, sizeof bits);
        h = mix_seed(h, bits);
    }
    return h;
}

inline Matrix greedy_discrete(const Lookahead& look, const Matrix& states, const Matrix& choices)
{
    const Eigen::Index Q = states.rows(), K = choices.rows();
    Matrix S(Q * K, states.cols()), A(Q * K, choices.cols());
    for (Eigen::Index q = 0; q < Q; ++q)
        for (Eigen::Index k = 0; k < K; ++k) {
            S.row(q * K + k) = states.row(q);
            A.row(q * K + k) = choices.row(k);
        }
    const Vector f = look.objective(S, A);
    Matrix best(Q, choices.cols());
    for (Eigen::Index q = 0; q < Q; ++q) {
        Eigen::Index arg = 0;
        for (Eigen::Index k = 1; k < K; ++k)
            if (improves(f[q * K + k], f[q * K + arg]))
                arg = k;
        best.row(q) = choices.row(arg);
    }
    return best;
}

/// Batched multi-start coordinate pattern search. Each (state, start) pair
/// probes +-step along every action axis, moves to the best strict
/// improvement, and halves its step otherwise.
inline Matrix greedy_continuous(const Lookahead& look, const Matrix& states, const Box& box,
                                const std::vector<std::uint64_t>& seeds, const ImprovementOptions& opt)
{
    const Eigen::Index Q = states.rows(), A = box.dim(), R = opt.starts;
    const Eigen::Index P = Q * R;
    const Vector width = box.width();

    Matrix pos(P, A);
    for (Eigen::Index q = 0; q < Q; ++q)
        pos.middleRows(q * R, R) = latin_hypercube(static_cast<int>(R), box, seeds[static_cast<std::size_t>(q)]);
    Matrix S(P, states.cols());
    for (Eigen::Index q = 0; q < Q; ++q)
        S.middleRows(q * R, R) = states.row(q).replicate(R, 1);
    Vector val = look.objective(S, pos);
    Vector step = Vector::Constant(P, opt.initial_step);

    for (int it = 0; it < opt.max_iterations; ++it) {
        std::vector<Eigen::Index> active;
        for (Eigen::Index p = 0; p < P; ++p)
            if (step[p] >= opt.min_step)
                active.push_back(p);
        if (active.empty())
            break;
        const Eigen::Index na = static_cast<Eigen::Index>(active.size()), nc = 2 * A;
        Matrix CS(na * nc, states.cols()), CA(na * nc, A);
        for (Eigen::Index i = 0; i < na; ++i) {
            const Eigen::Index p = active[static_cast<std::size_t>(i)];
            for (Eigen::Index c = 0; c < nc; ++c) {
                RowVector a = pos.row(p);
                const Eigen::Index d = c / 2;
                a[d] += (c % 2 == 0 ? -1.0 : 1.0) * step[p] * width[d];
                a[d] = std::clamp(a[d], box.lower[d], box.upper[d]);
                CA.row(i * nc + c) = a;
                CS.row(i * nc + c) = S.row(p);
            }
        }
        const Vector f = look.objective(CS, CA);
        for (Eigen::Index i = 0; i < na; ++i) {
            const Eigen::Index p = active[static_cast<std::size_t>(i)];
            Eigen::Index arg = -1;
            double best = val[p];
            for (Eigen::Index c = 0; c < nc; ++c)
                if (improves(f[i * nc + c], best)) {
                    best = f[i * nc + c];
                    arg = c;
                }
            if (arg >= 0) {
                pos.row(p) = CA.row(i * nc + arg);
                val[p] = best;
            } else {
                step[p] *= 0.5;
            }
        }
    }

    Matrix out(Q, A);
    for (Eigen::Index q = 0; q < Q; ++q) {
        Eigen::Index arg = q * R;
        for (Eigen::Index p = q * R + 1; p < (q + 1) * R; ++p)
            if (improves(val[p], val[arg]) || (ties(val[p], val[arg]) && lex_less(pos.row(p), pos.row(arg))))
                arg = p;
        out.row(q) = pos.row(arg);
    }
    return out;
}

} // namespace policy_detail

/// Greedy one-step lookahead actions for each row of `states`. Discrete spaces
/// are enumerated (ties go to the lowest index); continuous boxes use
/// `opt.starts` Latin-hypercube seeded pattern searches per state (ties go to
/// the lexicographically smallest action). `seeds` holds one seed per state.
inline Matrix greedy_actions(const Lookahead& look, const Matrix& states, const ActionSpace& actions,
                             const std::vector<std::uint64_t>& seeds, const ImprovementOptions& opt = {})
{
    detail::require(look.transition && (look.value || look.gamma == 0.0), "greedy_actions: lookahead models missing");
    detail::require(states.cols() + actions.dim() == look.transition->input_dim(), "greedy_actions: dimension mismatch");
    if (actions.discrete)
        return policy_detail::greedy_discrete(look, states, actions.choices);
    detail::require(static_cast<Eigen::Index>(seeds.size()) == states.rows(), "greedy_actions: one seed per state");
    detail::require(opt.starts >= 1, "greedy_actions: need at least one start");
    return policy_detail::greedy_continuous(look, states, actions.box, seeds, opt);
}

/// Greedy policy against frozen models. Actions at support states are cached;
/// any other state re-solves the lookahead.
class Policy {
public:
    Policy() = default;

    Policy(Lookahead look, ActionSpace actions, Matrix support_states, Matrix support_actions, std::uint64_t seed,
           ImprovementOptions opt = {})
        : look_(std::move(look)), actions_(std::move(actions)), support_states_(std::move(support_states)),
          support_actions_(std::move(support_actions)), seed_(seed), opt_(opt)
    {
        detail::require(support_states_.rows() == support_actions_.rows(), "Policy: support state/action count mismatch");
    }

    const Lookahead& lookahead() const { return look_; }
    const ActionSpace& action_space() const { return actions_; }
    const Matrix& support_states() const { return support_states_; }
    const Matrix& support_actions() const { return support_actions_; }

    Vector act(const Vector& state) const
    {
        for (Eigen::Index i = 0; i < support_states_.rows(); ++i)
            if (support_states_.row(i).transpose() == state)
                return support_actions_.row(i).transpose();
        const std::vector<std::uint64_t> seeds{mix_seed(seed_, policy_detail::hash_state(state))};
        return greedy_actions(look_, state.transpose(), actions_, seeds, opt_).row(0).transpose();
    }

    Vector operator()(const Vector& state) const { return act(state); }

private:
    Lookahead look_;
    ActionSpace actions_;
    Matrix support_states_;
    Matrix support_actions_;
    std::uint64_t seed_ = 0;
    ImprovementOptions opt_;
};

struct EvaluationResult {
    Vector values;
    Vector rewards;
    Matrix transition;      // P
    double residual = 0.0;  // ||v - r - gamma P v||_inf
    double max_row_sum = 0.0;
    int rows_above_one = 0; // rows of P summing to more than 1
};

/// Closed-form policy evaluation v = (I - gamma P)^-1 r with the policy given
/// by its actions at the support states.
inline EvaluationResult policy_evaluation(const Matrix& support, const RewardSpec& reward, const TransitionModel& model,
                                          const ValueModel& value, const Matrix& support_actions, double gamma)
{
    detail::require(gamma >= 0.0 && gamma < 1.0, "policy_evaluation: gamma must lie in [0, 1)");
    detail::require(support.rows() == support_actions.rows(), "policy_evaluation: one action per support state");
    detail::require(support.rows() == value.size(), "policy_evaluation: value model is not on this support set");
    const Eigen::Index N = support.rows();
    Matrix X(N, support.cols() + support_actions.cols());
    X << support, support_actions;
    Matrix mean, var;
    model.predict(X, mean, var);

    EvaluationResult out;
    out.rewards = expected_reward_batch(mean, var, reward);
    out.transition = value.transition_matrix(mean, var);
    const Vector sums = out.transition.rowwise().sum();
    out.max_row_sum = sums.maxCoeff();
    out.rows_above_one = static_cast<int>((sums.array() > 1.0).count());

    const Matrix A = Matrix::Identity(N, N) - gamma * out.transition;
    const Eigen::PartialPivLU<Matrix> lu(A);
    out.values = lu.solve(out.rewards);
    for (int refine = 0; refine < 3; ++refine) {
        const Vector res = out.rewards - A * out.values;
        out.residual = res.cwiseAbs().maxCoeff();
        if (!std::isfinite(out.residual))
            break;
        if (out.residual < 1e-12 * std::max(1.0, out.values.cwiseAbs().maxCoeff()))
            break;
        out.values += lu.solve(res);
    }
    out.residual = (out.values - out.rewards - gamma * out.transition * out.values).cwiseAbs().maxCoeff();
    if (!out.values.allFinite())
        throw NumericalError("policy_evaluation: I - gamma P is singular");
    return out;
}

/// Greedy improvement at every support state.
inline Policy policy_improvement(const Matrix& support, const Lookahead& look, const ActionSpace& actions, std::uint64_t seed,
                                 const ImprovementOptions& opt = {})
{
    std::vector<std::uint64_t> seeds(static_cast<std::size_t>(support.rows()));
    for (std::size_t i = 0; i < seeds.size(); ++i)
        seeds[i] = mix_seed(seed, i);
    Matrix best = greedy_actions(look, support, actions, seeds, opt);
    return Policy(look, actions, support, std::move(best), seed, opt);
}

struct PolicyIterationOptions {
    double gamma = 0.99;
    double tol = 1e-3;
    int max_iters = 50;
    std::uint64_t seed = 0;
    int value_restarts = 3;      // first value-GP fit
    int value_refit_restarts = 1; // later fits, warm-started
    gp::RpropOptions value_rprop{};
    double value_min_lengthscale = 0.05;
    double value_max_lengthscale = 20.0;
    double value_initial_lengthscale = 0.5;
    std::optional<double> value_signal_variance; // fitted when empty
    ValuePrior value_prior = ValuePrior::support_mean;
    ImprovementOptions improvement{};
};

struct PolicyIterationResult {
    Policy policy;
    std::shared_ptr<const ValueModel> value;
    Vector values;
    bool converged = false;
    int iterations = 0;
    double max_residual = 0.0;
    double max_row_sum = 0.0;
    int rows_above_one = 0;
    std::vector<double> deltas;
};

/// Policy iteration over a support set: evaluate, refit V, improve, until
/// ||dv||_inf < tol (1 + ||v||_inf) or max_iters.
inline PolicyIterationResult policy_iteration(const Matrix& support, const RewardSpec& reward, TransitionModelPtr model,
                                              const ActionSpace& actions, const PolicyIterationOptions& opt = {})
{
    detail::require(model != nullptr, "policy_iteration: missing transition model");
    detail::require(opt.max_iters >= 1, "policy_iteration: max_iters must be >= 1");
    detail::require(opt.tol > 0.0, "policy_iteration: tol must be positive");
    reward.validate();

    gp::HyperoptOptions hopt;
    hopt.fit_signal_variance = !opt.value_signal_variance.has_value();
    hopt.min_lengthscale = opt.value_min_lengthscale;
    hopt.max_lengthscale = opt.value_max_lengthscale;
    hopt.rprop = opt.value_rprop;

    std::mt19937_64 rng(opt.seed);
    Matrix support_actions = actions.sample(support.rows(), rng);
    Vector v = reward_at(support, reward);

    const auto fit_value = [&](const Vector& values, const gp::SeKernel& init, int restarts, std::uint64_t salt) {
        hopt.restarts = restarts;
        hopt.seed = mix_seed(opt.seed, salt);
        return std::make_shared<const ValueModel>(ValueModel::fit(support, values, init, hopt, kValueNoise, opt.value_prior));
    };

    PolicyIterationResult out;
    const Vector centred = opt.value_prior == ValuePrior::support_mean ? (v.array() - v.mean()).matrix() : v;
    const double sf2 = opt.value_signal_variance ? *opt.value_signal_variance
                                                 : std::max(centred.squaredNorm() / static_cast<double>(v.size()), 1e-2);
    std::shared_ptr<const ValueModel> V;
    try {
        V = fit_value(v, gp::SeKernel(gp::SeKernelParams::isotropic(support.cols(), opt.value_initial_lengthscale), sf2),
                      opt.value_restarts, 0);
    } catch (const NumericalError& e) {
        throw NumericalError("policy iteration 0", e);
    }

    for (int k = 1; k <= opt.max_iters; ++k) {
        try {
            const EvaluationResult eval = policy_evaluation(support, reward, *model, *V, support_actions, opt.gamma);
            out.max_residual = std::max(out.max_residual, eval.residual);
            out.max_row_sum = std::max(out.max_row_sum, eval.max_row_sum);
            out.rows_above_one = std::max(out.rows_above_one, eval.rows_above_one);
            const double delta = (eval.values - v).cwiseAbs().maxCoeff();
            v = eval.values;
            out.deltas.push_back(delta);
            out.iterations = k;

            V = fit_value(v, V->kernel(), opt.value_refit_restarts, static_cast<std::uint64_t>(k));
            const Lookahead look{model, V, reward, opt.gamma};
            out.policy = policy_improvement(support, look, actions, mix_seed(opt.seed, 1000 + static_cast<std::uint64_t>(k)),
                                            opt.improvement);
            support_actions = out.policy.support_actions();
            if (delta < opt.tol * (1.0 + v.cwiseAbs().maxCoeff())) {
                out.converged = true;
                break;
            }
        } catch (const NumericalError& e) {
            throw NumericalError("policy iteration " + std::to_string(k), e);
        }
    }
    out.value = V;
    out.values = v;
    return out;
}

} // namespace fleetgp::gprl
