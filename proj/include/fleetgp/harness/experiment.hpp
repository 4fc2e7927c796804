#pragma once

#include <fleetgp/gprl/latin_hypercube.hpp>
#include <fleetgp/harness/config.hpp>

#include <atomic>
#include <chrono>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

namespace fleetgp::harness {

struct RunResult {
    int run_id = 0;
    TargetType target_type = TargetType::single;
    std::uint64_t seed = 0;
    double metric = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    double wall_ms = 0.0;
    bool ok = false;
    std::string error;
    int iterations = 0;
    double max_residual = 0.0;
    double max_row_sum = 0.0;
    double value_std = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> final_state;     // raw units
    std::vector<double> max_abs_state;   // raw units, over the rollout
    std::vector<Matrix> correlations;    // fleet only, one M x M matrix per state dimension

    friend bool operator==(const RunResult& a, const RunResult& b);
};

namespace harness_detail {

inline bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

inline bool same(const std::vector<Matrix>& a, const std::vector<Matrix>& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i] != b[i])
            return false;
    return true;
}

} // namespace harness_detail

/// Field-wise equality; NaN metrics compare equal.
inline bool operator==(const RunResult& a, const RunResult& b)
{
    using harness_detail::same;
    return a.run_id == b.run_id && a.target_type == b.target_type && a.seed == b.seed && same(a.metric, b.metric) &&
           a.converged == b.converged && a.wall_ms == b.wall_ms && a.ok == b.ok && a.error == b.error &&
           a.iterations == b.iterations && a.max_residual == b.max_residual && a.max_row_sum == b.max_row_sum &&
           same(a.value_std, b.value_std) && a.final_state == b.final_state && a.max_abs_state == b.max_abs_state &&
           same(a.correlations, b.correlations);
}

/// Sampled fleet in raw units plus its normalized GP dataset.
struct FleetSamples {
    std::vector<envs::TransitionBatch> batches;
    coreg::FleetDataset data;
};

inline FleetSamples sample_fleet(const ExperimentConfig& c, std::uint64_t seed)
{
    const auto ref = make_environment(c, c.target);
    FleetSamples out;
    out.data = coreg::FleetDataset(c.member_count(), ref->state_dim() + ref->action_dim(), ref->state_dim());
    for (int m = 0; m < c.member_count(); ++m) {
        const auto env = make_environment(c, m);
        out.batches.push_back(envs::sample_batch(*env, c.members[static_cast<std::size_t>(m)].samples, mix_seed(seed, 100 + m)));
        auto& md = out.data.member(m);
        envs::normalize_batch(*env, out.batches.back(), md.inputs, md.targets);
    }
    return out;
}

struct TransitionBuild {
    gprl::TransitionModelPtr model;
    std::vector<Matrix> correlations; // fleet only
};

/// single: target samples only; joint: pooled samples; fleet: coregionalized
/// GPs. One GP per output dimension of `data`. The diagnostic replaces the
/// fitted fleet parameters by ones that reduce to a baseline.
inline TransitionBuild fit_transition_gps(const coreg::FleetDataset& data, TargetType type, int target,
                                              const gprl::TransitionFitOptions& opt = {},
                                              FleetDiagnostic diagnostic = FleetDiagnostic::none)
{
    const auto& own = data.member(target);
    detail::require(own.size() > 0, "build_transition_model: no samples for the target member");
    TransitionBuild out;
    if (type == TargetType::single) {
        out.model = gprl::fit_se_transition_model(own.inputs, own.targets, opt);
        return out;
    }
    if (type == TargetType::joint) {
        Matrix X, Y;
        data.pooled(X, Y);
        out.model = gprl::fit_se_transition_model(X, Y, opt);
        return out;
    }

    std::shared_ptr<gprl::FleetTransitionModel> fleet;
    if (diagnostic == FleetDiagnostic::none) {
        fleet = gprl::fit_fleet_transition_model(data, target, opt);
    } else {
        const bool zero = diagnostic == FleetDiagnostic::zero_cross_weights;
        detail::require(zero || data.members == 2, "build_transition_model: perfect correlation needs two members");
        std::shared_ptr<gprl::SeTransitionModel> base;
        if (zero) {
            base = gprl::fit_se_transition_model(own.inputs, own.targets, opt);
        } else {
            Matrix X, Y;
            data.pooled(X, Y);
            base = gprl::fit_se_transition_model(X, Y, opt);
        }
        std::vector<coreg::FleetKernelParams> params;
        for (Eigen::Index e = 0; e < data.output_dim(); ++e) {
            const auto& k = base->dimension(static_cast<std::size_t>(e)).kernel();
            auto p = coreg::FleetKernelParams::uniform(data.members, target, k.params, zero ? 0.0 : 1.0);
            p.alphas.setConstant(zero ? std::sqrt(k.signal_variance) : 0.0);
            params.push_back(std::move(p));
        }
        fleet = gprl::make_fleet_transition_model(data, params, opt.noise);
    }
    for (Eigen::Index e = 0; e < data.output_dim(); ++e)
        out.correlations.push_back(coreg::correlation_matrix(fleet->dimension(static_cast<std::size_t>(e)).g_matrix()));
    out.model = fleet;
    return out;
}

/// Transition model of `type` for member `target` over [s, a] -> s'. With
/// `differences` the GPs regress s' - s and the state is added back.
inline TransitionBuild build_transition_model(const coreg::FleetDataset& data, TargetType type, int target,
                                              const gprl::TransitionFitOptions& opt = {},
                                              FleetDiagnostic diagnostic = FleetDiagnostic::none, bool differences = false)
{
    if (!differences)
        return fit_transition_gps(data, type, target, opt, diagnostic);
    TransitionBuild b = fit_transition_gps(gprl::to_differences(data), type, target, opt, diagnostic);
    b.model = std::make_shared<gprl::DifferenceTransitionModel>(std::move(b.model));
    return b;
}

struct Rollout {
    Matrix states; // (horizon + 1) x D, raw units, row 0 is the start
    double metric = 0.0;
};

using RawPolicy = std::function<Vector(const Vector&)>;

/// Rolls `policy` out from the start state. The metric is the summed squared
/// normalized distance to the goal over steps 1..horizon, or the final power
/// for the wind row.
inline Rollout evaluate_policy(const envs::Environment& env, const RawPolicy& policy, int horizon)
{
    detail::require(horizon >= 1, "evaluate_policy: horizon must be >= 1");
    Rollout r;
    r.states.resize(horizon + 1, env.state_dim());
    Vector s = env.start();
    r.states.row(0) = s.transpose();
    for (int k = 1; k <= horizon; ++k) {
        s = env.step(s, policy(s));
        r.states.row(k) = s.transpose();
        r.metric += env.squared_goal_distance(s);
    }
    if (env.name() == "wind_farm")
        r.metric = s[2];
    return r;
}

/// Adapts a policy over normalized coordinates to raw environment units.
inline RawPolicy raw_policy(const envs::Environment& env, const gprl::Policy& policy)
{
    return [&env, &policy](const Vector& s) { return env.denormalize_action(policy.act(env.normalize_state(s))); };
}

/// Normalized evaluation grid over [-1, 1]^D: a regular grid for D = 2,
/// otherwise grid^2 Latin-hypercube points.
inline Matrix state_grid(Eigen::Index dim, int grid, std::uint64_t seed)
{
    if (dim == 2) {
        Matrix G(grid * grid, 2);
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j)
                G.row(i * grid + j) << -1.0 + 2.0 * i / (grid - 1), -1.0 + 2.0 * j / (grid - 1);
        return G;
    }
    return gprl::latin_hypercube(grid * grid, gprl::Box::symmetric(dim), seed);
}

/// Mean posterior standard deviation of the value GP over the state grid.
inline double mean_value_std(const gprl::ValueModel& V, int grid, std::uint64_t seed)
{
    Vector m, var;
    V.predict(state_grid(V.dim(), grid, seed), m, var);
    return var.cwiseSqrt().mean();
}

inline gprl::PolicyIterationOptions policy_iteration_options(const ExperimentConfig& c, std::uint64_t seed)
{
    gprl::PolicyIterationOptions o;
    o.gamma = c.gamma;
    o.tol = c.tol;
    o.max_iters = c.max_iters;
    o.seed = seed;
    o.value_restarts = c.value_restarts;
    o.value_refit_restarts = c.value_refit_restarts;
    o.improvement.starts = c.improvement_starts;
    o.value_signal_variance = c.value_signal_variance;
    o.value_prior = c.value_prior;
    return o;
}

inline gprl::RewardSpec experiment_reward(const ExperimentConfig& c, const envs::Environment& env)
{
    gprl::RewardSpec r = env.normalized_reward();
    if (c.reward_sigma)
        r.sigma = *c.reward_sigma;
    return r;
}

/// One run of one target type. Failures are caught and recorded.
inline RunResult run_single(const ExperimentConfig& c, TargetType type, int run)
{
    RunResult out;
    out.run_id = run;
    out.target_type = type;
    out.seed = c.run_seed(run);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto env = make_environment(c, c.target);
        const FleetSamples samples = sample_fleet(c, out.seed);

        gprl::TransitionFitOptions fit;
        fit.restarts = c.transition_restarts;
        fit.seed = mix_seed(out.seed, 300);
        fit.noise = c.transition_noise;
        fit.initial_lengthscale = c.transition_lengthscale;
        TransitionBuild model = build_transition_model(samples.data, type, c.target, fit, c.diagnostic, c.transition_differences);
        out.correlations = std::move(model.correlations);

        const Matrix support = gprl::latin_hypercube(c.support_points, gprl::Box::symmetric(env->state_dim()), mix_seed(out.seed, 200));
        const auto pi = gprl::policy_iteration(support, experiment_reward(c, *env), model.model, env->normalized_action_space(),
                                               policy_iteration_options(c, mix_seed(out.seed, 400)));
        out.converged = pi.converged;
        out.iterations = pi.iterations;
        out.max_residual = pi.max_residual;
        out.max_row_sum = pi.max_row_sum;
        out.value_std = mean_value_std(*pi.value, c.value_grid, mix_seed(out.seed, 500));

        const Rollout roll = evaluate_policy(*env, raw_policy(*env, pi.policy), c.horizon);
        out.metric = roll.metric;
        const Vector last = roll.states.row(roll.states.rows() - 1).transpose();
        const Vector peak = roll.states.cwiseAbs().colwise().maxCoeff().transpose();
        out.final_state.assign(last.data(), last.data() + last.size());
        out.max_abs_state.assign(peak.data(), peak.data() + peak.size());
        if (!std::isfinite(out.metric))
            throw NumericalError("rollout metric is not finite");
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
        out.metric = std::numeric_limits<double>::quiet_NaN();
    }
    out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

using ProgressCallback = std::function<void(const RunResult&)>;
using RunFunction = std::function<RunResult(const ExperimentConfig&, TargetType, int)>;

/// Every (target type, run) pair on a pool of `c.jobs` workers. Results are
/// ordered by target type, then run. A run that throws is recorded as failed.
inline std::vector<RunResult> run_experiment(const ExperimentConfig& c, const ProgressCallback& progress = {},
                                             const RunFunction& runner = run_single)
{
    c.validate();
    struct Task {
        TargetType type;
        int run;
    };
    std::vector<Task> tasks;
    for (auto t : c.target_types)
        for (int r = 0; r < c.runs; ++r)
            tasks.push_back({t, r});

    std::vector<RunResult> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex report;
    const auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                results[i] = runner(c, tasks[i].type, tasks[i].run);
            } catch (const std::exception& e) {
                results[i].run_id = tasks[i].run;
                results[i].target_type = tasks[i].type;
                results[i].seed = c.run_seed(tasks[i].run);
                results[i].error = e.what();
            }
            if (progress) {
                std::lock_guard lock(report);
                progress(results[i]);
            }
        }
    };
    const int n = std::min<int>(c.jobs, static_cast<int>(tasks.size()));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < n; ++w)
            pool.emplace_back(worker);
    }
    return results;
}

} // namespace fleetgp::harness
