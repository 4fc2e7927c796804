#pragma once

// Brute-force validation suites shared by the `oracle` CLI command and the
// acceptance binary. Every check compares the library against an independent
// dense or Monte-Carlo computation.

#include <fleetgp/coreg/fleet_gp.hpp>
#include <fleetgp/gprl/policy.hpp>
#include <fleetgp/harness/experiment.hpp>
#include <fleetgp/harness/results.hpp>

#include "oracles.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace fleetgp::suites {

struct Check {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

struct Report {
    std::string suite;
    std::vector<Check> checks;
    double seconds = 0.0;

    bool pass() const
    {
        for (const auto& c : checks)
            if (!c.pass)
                return false;
        return !checks.empty();
    }

    void upper(std::string name, double value, double threshold, std::string note = {})
    {
        checks.push_back({std::move(name), value, threshold, value <= threshold, std::move(note)});
    }

    void lower(std::string name, double value, double threshold, std::string note = {})
    {
        checks.push_back({std::move(name), value, threshold, value >= threshold, std::move(note)});
    }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline coreg::FleetKernelParams random_params(std::mt19937_64& rng, int M, Eigen::Index D)
{
    std::uniform_int_distribution<int> pick(0, M - 1);
    std::normal_distribution<double> w(0.0, 1.0);
    coreg::FleetKernelParams p;
    p.se = gp::SeKernelParams(oracle::uniform_vector(rng, D, 0.3, 2.0));
    p.target = pick(rng);
    p.alphas.resize(M);
    for (int m = 0; m < M; ++m) {
        p.alphas[m] = w(rng);
        if (m != p.target)
            p.sources.push_back({m, w(rng), w(rng)});
    }
    return p;
}

// G = sum_s w_s w_s^T + diag(alpha^2) with w_s nonzero only at (target, s).
inline Matrix dense_g(const coreg::FleetKernelParams& p)
{
    const int M = static_cast<int>(p.alphas.size());
    Matrix G = p.alphas.array().square().matrix().asDiagonal();
    for (const auto& s : p.sources) {
        Vector w = Vector::Zero(M);
        w[p.target] = s.w_target;
        w[s.source] = s.w_source;
        G += w * w.transpose();
    }
    return G;
}

inline coreg::FleetDataset random_fleet(std::mt19937_64& rng, int M, Eigen::Index D, int min_n, int max_n)
{
    std::uniform_int_distribution<int> count(min_n, max_n);
    coreg::FleetDataset data(M, D, 1);
    for (int m = 0; m < M; ++m) {
        const int n = count(rng);
        data.member(m).inputs = oracle::uniform_matrix(rng, n, D);
        data.member(m).targets = oracle::uniform_matrix(rng, n, 1);
    }
    return data;
}

inline Matrix dense_fleet_gram(const coreg::FleetDataset& data, const coreg::FleetKernelParams& p)
{
    const Matrix G = dense_g(p);
    std::vector<Vector> xs;
    std::vector<int> ms;
    for (int m = 0; m < data.members; ++m)
        for (Eigen::Index i = 0; i < data.member(m).size(); ++i) {
            xs.push_back(data.member(m).inputs.row(i).transpose());
            ms.push_back(m);
        }
    const auto n = static_cast<Eigen::Index>(xs.size());
    Matrix K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            K(i, j) = oracle::se_entry(xs[i], xs[j], p.se.lengthscales) * G(ms[i], ms[j]);
    return K;
}

inline coreg::BlockArrowMatrix random_arrow(std::mt19937_64& rng, int members, int min_block, int max_block)
{
    const coreg::FleetDataset data = random_fleet(rng, members, 2, min_block, max_block);
    const coreg::FleetKernelParams p = random_params(rng, members, 2);
    const coreg::FleetLayout layout(data, p.target, 0);
    return coreg::fleet_covariance(layout, p, coreg::build_g_matrix(p), 1e-2);
}

template <typename F>
double best_time(int reps, F&& f)
{
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < reps; ++r) {
        const auto t0 = Clock::now();
        f();
        best = std::min(best, seconds_since(t0));
    }
    return best;
}

inline coreg::FleetDataset mountain_car_fleet(const std::vector<double>& powers, const std::vector<int>& samples, std::uint64_t seed)
{
    coreg::FleetDataset data(static_cast<int>(powers.size()), 3, 2);
    for (std::size_t m = 0; m < powers.size(); ++m) {
        const envs::MountainCar env(powers[m]);
        const auto batch = envs::sample_batch(env, samples[m], mix_seed(seed, m));
        envs::normalize_batch(env, batch, data.member(static_cast<int>(m)).inputs, data.member(static_cast<int>(m)).targets);
    }
    return data;
}

} // namespace detail

/// GP posterior against dense joint-normal conditioning.
inline Report gp_posterior_suite(std::uint64_t seed = 1)
{
    Report rep{"gp_posterior"};
    const auto t0 = detail::Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> npts(1, 10), dims(1, 4), nq(1, 5);
    std::uniform_real_distribution<double> lognoise(-4.0, -1.0);
    double err_mean = 0.0, err_cov = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = npts(rng), D = dims(rng), q = nq(rng);
        const Matrix X = oracle::uniform_matrix(rng, n, D);
        const Matrix Q = oracle::uniform_matrix(rng, q, D);
        const Vector y = oracle::uniform_vector(rng, n);
        const Vector l = oracle::uniform_vector(rng, D, 0.3, 2.0);
        const double sf2 = std::exp(oracle::uniform_vector(rng, 1, -1.0, 1.0)[0]);
        const double noise = std::pow(10.0, lognoise(rng));

        Matrix all(q + n, D);
        all << Q, X;
        Matrix S(q + n, q + n);
        for (Eigen::Index i = 0; i < q + n; ++i)
            for (Eigen::Index j = 0; j < q + n; ++j)
                S(i, j) = sf2 * oracle::se_entry(all.row(i).transpose(), all.row(j).transpose(), l);
        S.bottomRightCorner(n, n).diagonal().array() += noise;
        const auto ref = oracle::condition_joint_normal(S.topLeftCorner(q, q), S.topRightCorner(q, n), S.bottomRightCorner(n, n), y);
        const auto post = gp::gp_posterior(Q, gp::GpDataset(X, y, noise), gp::SeKernel(gp::SeKernelParams(l), sf2));
        err_mean = std::max(err_mean, detail::max_abs(post.mean - ref.mean));
        err_cov = std::max(err_cov, detail::max_abs(post.covariance - ref.cov));
    }
    rep.seconds = detail::seconds_since(t0);
    rep.upper("max |mean - dense| over 100 instances", err_mean, 1e-8);
    rep.upper("max |cov - dense| over 100 instances", err_cov, 1e-8);
    rep.upper("runtime seconds", rep.seconds, 5.0);
    return rep;
}

/// Coregionalization matrix symmetry / PSD and Cholesky of the jittered fleet Gram.
inline Report g_matrix_suite(std::uint64_t seed = 2)
{
    Report rep{"g_matrix"};
    const auto t0 = detail::Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> members(1, 6);
    double asym = 0.0, min_eig = std::numeric_limits<double>::infinity(), vs_dense = 0.0;
    int chol_failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int M = members(rng);
        const auto p = detail::random_params(rng, M, 2);
        const Matrix G = coreg::build_g_matrix(p).g;
        asym = std::max(asym, detail::max_abs(G - G.transpose()));
        vs_dense = std::max(vs_dense, detail::max_abs(G - detail::dense_g(p)));
        min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Matrix>(G, Eigen::EigenvaluesOnly).eigenvalues().minCoeff());

        const auto data = detail::random_fleet(rng, M, 2, 1, 6);
        Matrix K = detail::dense_fleet_gram(data, p);
        K.diagonal().array() += 1e-8;
        if (Eigen::LLT<Matrix>(K).info() != Eigen::Success)
            ++chol_failures;
    }
    rep.seconds = detail::seconds_since(t0);
    rep.upper("max |G - G^T|", asym, 0.0);
    rep.upper("max |G - (sum w w^T + diag alpha^2)|", vs_dense, 1e-12);
    rep.lower("min eigenvalue of G", min_eig, -1e-8);
    rep.upper("Cholesky failures of Gram + 1e-8 I", chol_failures, 0.0);
    rep.upper("runtime seconds", rep.seconds, 30.0);
    return rep;
}

struct ScalingPoint {
    int members = 0;
    double arrow_seconds = 0.0;
    double dense_seconds = 0.0;
};

/// Block-arrow solve against a dense LU solve, and factor+solve cost as the
/// fleet doubles at a fixed block size.
inline Report block_arrow_suite(std::uint64_t seed = 3, std::vector<ScalingPoint>* scaling = nullptr)
{
    Report rep{"block_arrow"};
    const auto t0 = detail::Clock::now();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> members(1, 6);
    double err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto C = detail::random_arrow(rng, members(rng), 1, 12);
        const Matrix B = oracle::uniform_matrix(rng, C.size(), 3);
        const Matrix ref = C.to_dense().fullPivLu().solve(B);
        err = std::max(err, detail::max_abs(coreg::block_arrow_solve(C, B) - ref));
    }
    rep.upper("max |arrow solve - dense solve| over 100 systems", err, 1e-6);

    const int block = 100;
    std::vector<ScalingPoint> points;
    for (int M : {4, 8, 16, 32}) {
        const auto C = detail::random_arrow(rng, M, block, block);
        const Matrix dense = C.to_dense();
        const Matrix b = oracle::uniform_matrix(rng, C.size(), 1);
        ScalingPoint pt{M};
        volatile double sink = 0.0;
        pt.arrow_seconds = detail::best_time(10, [&] { sink = sink + coreg::BlockArrowCholesky(C).solve(b)(0, 0); });
        pt.dense_seconds = detail::best_time(10, [&] { sink = sink + Eigen::LLT<Matrix>(dense).solve(b)(0, 0); });
        points.push_back(pt);
    }
    double arrow_growth = 0.0, dense_growth = std::numeric_limits<double>::infinity();
    std::string note;
    for (std::size_t i = 1; i < points.size(); ++i) {
        arrow_growth = std::max(arrow_growth, points[i].arrow_seconds / points[i - 1].arrow_seconds);
        dense_growth = std::min(dense_growth, points[i].dense_seconds / points[i - 1].dense_seconds);
    }
    for (const auto& p : points)
        note += "M=" + std::to_string(p.members) + " arrow " + harness::io_detail::format_double(p.arrow_seconds * 1e3) + " ms dense " +
                harness::io_detail::format_double(p.dense_seconds * 1e3) + " ms; ";
    rep.upper("arrow cost growth per member doubling (block 100)", arrow_growth, 1.5, note);
    rep.lower("dense cost growth per member doubling (block 100)", dense_growth, 4.0);
    rep.seconds = detail::seconds_since(t0);
    rep.upper("runtime seconds", rep.seconds, 120.0);
    if (scaling)
        *scaling = points;
    return rep;
}

/// Analytic expected reward and expected value rows against Monte Carlo.
inline Report expectation_suite(std::uint64_t seed = 4, int samples = 1'000'000)
{
    using namespace gprl;
    Report rep{"expectations"};
    const auto t0 = detail::Clock::now();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> dims(1, 3);
    double reward_err = 0.0, row_err = 0.0, value_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index D = dims(rng);
        const RewardSpec r{oracle::uniform_vector(rng, D), oracle::uniform_vector(rng, 1, 0.1, 0.4)[0]};
        const GaussianState g{r.goal + oracle::uniform_vector(rng, D, -0.3, 0.3), oracle::uniform_vector(rng, D, 0.005, 0.1)};
        const double norm = std::pow(2.0 * std::numbers::pi * r.sigma * r.sigma, -0.5 * static_cast<double>(D));
        double acc = 0.0;
        for (int i = 0; i < samples; ++i) {
            double d2 = 0.0;
            for (Eigen::Index d = 0; d < D; ++d) {
                const double s = g.mean[d] + std::sqrt(g.variance[d]) * z(rng);
                d2 += (s - r.goal[d]) * (s - r.goal[d]);
            }
            acc += norm * std::exp(-0.5 * d2 / (r.sigma * r.sigma));
        }
        const double mc = acc / samples;
        reward_err = std::max(reward_err, std::abs(expected_reward(g, r) - mc) / mc);
    }
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index D = dims(rng), N = 6;
        const Matrix support = oracle::uniform_matrix(rng, N, D);
        const Vector l = oracle::uniform_vector(rng, D, 0.3, 0.8);
        const double sf2 = 4.0;
        const ValueModel v(support, oracle::uniform_vector(rng, N, 0.0, 5.0), gp::SeKernel(gp::SeKernelParams(l), sf2));
        const GaussianState g{oracle::uniform_vector(rng, D, -0.5, 0.5), oracle::uniform_vector(rng, D, 0.01, 0.2)};
        const ExpectedValueRow e = expected_value_row(g, v);
        Vector acc = Vector::Zero(N);
        Vector s(D);
        for (int i = 0; i < samples; ++i) {
            for (Eigen::Index d = 0; d < D; ++d)
                s[d] = g.mean[d] + std::sqrt(g.variance[d]) * z(rng);
            for (Eigen::Index j = 0; j < N; ++j)
                acc[j] += sf2 * oracle::se_entry(s, support.row(j).transpose(), l);
        }
        acc /= samples;
        row_err = std::max(row_err, detail::max_abs(acc - e.row) / e.row.cwiseAbs().maxCoeff());
        const double mc_value = acc.dot(v.weights());
        value_err = std::max(value_err, std::abs(mc_value - e.value) / std::abs(mc_value));
    }
    rep.seconds = detail::seconds_since(t0);
    rep.upper("max relative error, expected reward vs MC (20 configs)", reward_err, 0.02);
    rep.upper("max relative error, expected value row vs MC (20 configs)", row_err, 0.01);
    rep.upper("max relative error, expected value vs MC (20 configs)", value_err, 0.01);
    rep.upper("runtime seconds", rep.seconds, 120.0);
    return rep;
}

/// Closed-form policy evaluation against fixed-point iteration, N = 20 support states.
inline Report fixed_point_suite(std::uint64_t seed = 5)
{
    using namespace gprl;
    Report rep{"fixed_point"};
    const auto t0 = detail::Clock::now();
    std::mt19937_64 rng(seed);
    // next state = clamp(s + 0.5 a, -1, 1) in one dimension
    const Matrix X = oracle::uniform_matrix(rng, 40, 2);
    Matrix Y(40, 1);
    for (Eigen::Index i = 0; i < 40; ++i)
        Y(i, 0) = std::clamp(X(i, 0) + 0.5 * X(i, 1), -1.0, 1.0);
    const auto model = fit_se_transition_model(X, Y);
    double residual = 0.0, err = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index N = 20;
        const Matrix S = oracle::uniform_matrix(rng, N, 1);
        const Matrix A = oracle::uniform_matrix(rng, N, 1);
        const ValueModel v(S, oracle::uniform_vector(rng, N), gp::SeKernel(gp::SeKernelParams::isotropic(1, 0.4), 3.0));
        const RewardSpec r{oracle::uniform_vector(rng, 1), 0.3};
        const double gamma = trial % 2 == 0 ? 0.5 : 0.9;
        const EvaluationResult e = policy_evaluation(S, r, *model, v, A, gamma);
        residual = std::max(residual, detail::max_abs(e.values - e.rewards - gamma * e.transition * e.values));
        Vector x = Vector::Zero(N);
        for (int it = 0; it < 20000; ++it)
            x = e.rewards + gamma * e.transition * x;
        err = std::max(err, detail::max_abs(x - e.values));
    }
    rep.seconds = detail::seconds_since(t0);
    rep.upper("max ||v - r - gamma P v||_inf", residual, 1e-8);
    rep.upper("max |closed form - fixed-point iteration|", err, 1e-6);
    return rep;
}

/// Fleet transition models in their degenerate settings against the baselines.
inline Report degeneracy_suite(std::uint64_t seed = 6)
{
    using harness::FleetDiagnostic;
    using harness::TargetType;
    Report rep{"degeneracy"};
    const auto t0 = detail::Clock::now();
    std::mt19937_64 rng(seed);
    double single_err = 0.0, joint_err = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        gprl::TransitionFitOptions opt;
        opt.restarts = 2;
        opt.seed = mix_seed(seed, 10 + trial);
        const Matrix Q = oracle::uniform_matrix(rng, 50, 3);
        Matrix m1, v1, m2, v2;

        const auto three = detail::mountain_car_fleet({1.5e-3, 1e-3, 1e-4}, {20, 40, 40}, mix_seed(seed, trial));
        harness::build_transition_model(three, TargetType::single, 0, opt).model->predict(Q, m1, v1);
        harness::build_transition_model(three, TargetType::fleet, 0, opt, FleetDiagnostic::zero_cross_weights).model->predict(Q, m2, v2);
        single_err = std::max({single_err, detail::max_abs(m1 - m2), detail::max_abs(v1 - v2)});

        const auto two = detail::mountain_car_fleet({1.5e-3, 1.5e-3}, {20, 30}, mix_seed(seed, 100 + trial));
        harness::build_transition_model(two, TargetType::joint, 0, opt).model->predict(Q, m1, v1);
        harness::build_transition_model(two, TargetType::fleet, 0, opt, FleetDiagnostic::perfect_correlation).model->predict(Q, m2, v2);
        joint_err = std::max({joint_err, detail::max_abs(m1 - m2), detail::max_abs(v1 - v2)});
    }
    rep.seconds = detail::seconds_since(t0);
    rep.upper("zero cross-weights vs single: max |mean|,|var| difference", single_err, 1e-10);
    rep.upper("unit weights, zero alpha vs joint (2 members): max |mean|,|var| difference", joint_err, 1e-8);
    return rep;
}

inline const std::map<std::string, std::function<Report()>>& registry()
{
    static const std::map<std::string, std::function<Report()>> suites{
        {"gp", [] { return gp_posterior_suite(); }},
        {"coreg", [] {
             Report r = g_matrix_suite();
             Report b = block_arrow_suite();
             r.suite = "coreg";
             r.checks.insert(r.checks.end(), b.checks.begin(), b.checks.end());
             r.seconds += b.seconds;
             return r;
         }},
        {"gprl", [] {
             Report r = expectation_suite();
             Report f = fixed_point_suite();
             r.suite = "gprl";
             r.checks.insert(r.checks.end(), f.checks.begin(), f.checks.end());
             r.seconds += f.seconds;
             return r;
         }},
        {"degeneracy", [] { return degeneracy_suite(); }},
    };
    return suites;
}

inline harness::json to_json(const Report& r)
{
    harness::json checks = harness::json::array();
    for (const auto& c : r.checks)
        checks.push_back({{"name", c.name}, {"value", harness::io_detail::number(c.value)}, {"threshold", c.threshold}, {"pass", c.pass}, {"note", c.note}});
    return {{"suite", r.suite}, {"pass", r.pass()}, {"seconds", r.seconds}, {"checks", checks}};
}

} // namespace fleetgp::suites
