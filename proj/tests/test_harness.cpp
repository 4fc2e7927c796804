#include <fleetgp/harness/results.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace fleetgp;
using namespace fleetgp::harness;

namespace {

std::string preset(const std::string& name) { return std::string(FLEETGP_CONFIG_DIR) + "/" + name + ".json"; }

// Moves straight to the commanded point.
class Teleport final : public envs::Environment {
public:
    std::string name() const override { return "teleport"; }
    gprl::Box state_box() const override { return gprl::Box::symmetric(2); }
    gprl::Box action_box() const override { return gprl::Box::symmetric(2); }
    Vector start() const override { return Vector(Eigen::Vector2d(-0.5, -0.5)); }
    Vector goal() const override { return Vector(Eigen::Vector2d(0.5, 0.5)); }
    double reward_sigma() const override { return 0.1; }
    Vector step(const Vector&, const Vector& a) const override { return state_box().clamp(a); }
};

coreg::FleetDataset mountain_car_fleet(const std::vector<double>& powers, const std::vector<int>& samples, std::uint64_t seed)
{
    coreg::FleetDataset data(static_cast<int>(powers.size()), 3, 2);
    for (std::size_t m = 0; m < powers.size(); ++m) {
        const envs::MountainCar env(powers[m]);
        const auto batch = envs::sample_batch(env, samples[m], seed + m);
        envs::normalize_batch(env, batch, data.member(static_cast<int>(m)).inputs, data.member(static_cast<int>(m)).targets);
    }
    return data;
}

RunResult random_result(std::mt19937_64& rng, int id)
{
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    RunResult r;
    r.run_id = id;
    r.target_type = static_cast<TargetType>(id % 3);
    r.seed = rng();
    r.ok = id % 4 != 3;
    r.metric = r.ok ? u(rng) : std::numeric_limits<double>::quiet_NaN();
    r.error = r.ok ? "" : "policy iteration 3: value GP covariance is not positive definite, \"quoted\"";
    r.converged = id % 2 == 0;
    r.iterations = id * 7;
    r.wall_ms = std::abs(u(rng));
    r.max_residual = 1e-12 * std::abs(u(rng));
    r.max_row_sum = 1.0 + 1e-3 * std::abs(u(rng));
    r.value_std = std::abs(u(rng)) / 3.0;
    r.final_state = {u(rng), u(rng) / 7.0};
    r.max_abs_state = {std::abs(u(rng)), 1.0 / 3.0};
    if (r.target_type == TargetType::fleet)
        r.correlations = {oracle::uniform_matrix(rng, 3, 3), oracle::uniform_matrix(rng, 3, 3)};
    return r;
}

} // namespace

TEST(Config, MountainCarPresetEncodesThePaperSetup)
{
    const auto c = load_config(preset("mountain_car"));
    EXPECT_EQ(c.environment, "mountain_car");
    ASSERT_EQ(c.member_count(), 3);
    EXPECT_EQ(c.members[0].parameter, 1.5e-3);
    EXPECT_EQ(c.members[1].parameter, 1e-3);
    EXPECT_EQ(c.members[2].parameter, 1e-4);
    EXPECT_EQ(c.members[0].samples, 20);
    EXPECT_EQ(c.members[1].samples, 100);
    EXPECT_EQ(c.members[2].samples, 100);
    EXPECT_EQ(c.target, 0);
    EXPECT_EQ(c.support_points, 200);
    EXPECT_EQ(c.gamma, 0.99);
    EXPECT_EQ(c.horizon, 200);
    EXPECT_EQ(c.runs, 50);
    EXPECT_EQ(c.reward_sigma.value(), 0.05);
    EXPECT_EQ(c.target_types.size(), 3u);
}

TEST(Config, CartPolePresetEncodesThePaperSetup)
{
    const auto c = load_config(preset("cart_pole"));
    ASSERT_EQ(c.member_count(), 3);
    EXPECT_EQ(c.members[0].parameter, 0.1);
    EXPECT_EQ(c.members[1].parameter, 0.2);
    EXPECT_EQ(c.members[2].parameter, 0.5);
    EXPECT_EQ(c.members[0].samples + c.members[1].samples + c.members[2].samples, 105);
    EXPECT_EQ(c.members[0].samples, 5);
    EXPECT_EQ(c.support_points, 300);
    EXPECT_EQ(c.reward_sigma.value(), 0.2);
    EXPECT_EQ(c.runs, 50);
}

TEST(Config, WindPresetEncodesThePaperSetup)
{
    const auto c = load_config(preset("wind_farm"));
    ASSERT_EQ(c.member_count(), 8);
    const std::vector<double> eff{1.0, 0.9, 0.9, 0.9, 0.8, 0.8, 0.8, 0.8};
    int total = 0;
    for (int m = 0; m < 8; ++m) {
        EXPECT_EQ(c.members[static_cast<std::size_t>(m)].parameter, eff[static_cast<std::size_t>(m)]);
        total += c.members[static_cast<std::size_t>(m)].samples;
    }
    EXPECT_EQ(total, 400);
    EXPECT_EQ(c.support_points, 300);
    EXPECT_EQ(c.wake.spacing_m, 100.0);
    const auto env = make_environment(c, 0);
    EXPECT_EQ(env->goal()[2], 1.07);
}

TEST(Config, EveryPresetLoadsAndRoundTrips)
{
    for (const char* name : {"mountain_car", "cart_pole", "wind_farm", "smoke", "sensitivity"}) {
        const auto c = load_config(preset(name));
        const auto back = config_from_json(to_json(c));
        EXPECT_EQ(to_json(back), to_json(c)) << name;
    }
}

TEST(Config, SmokePresetIsASingleShortRun)
{
    const auto c = load_config(preset("smoke"));
    EXPECT_EQ(c.runs, 1);
    EXPECT_EQ(c.support_points, 20);
}

TEST(Config, SweepExpandsOneConfigPerValue)
{
    const auto c = load_config(preset("sensitivity"));
    ASSERT_TRUE(c.sweep.has_value());
    const auto all = expand_sweep(c);
    ASSERT_EQ(all.size(), c.sweep->values.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_EQ(all[i].members[static_cast<std::size_t>(c.sweep->member)].parameter, c.sweep->values[i]);
        EXPECT_EQ(all[i].members[0].parameter, c.members[0].parameter);
        EXPECT_FALSE(all[i].sweep.has_value());
    }
    EXPECT_EQ(expand_sweep(all[0]).size(), 1u);
}

TEST(Config, RejectsInvalidConfigs)
{
    const json base = to_json(load_config(preset("smoke")));
    const auto broken = [&](const char* key, json value) {
        json j = base;
        j[key] = std::move(value);
        return j;
    };
    EXPECT_THROW(config_from_json(broken("target", 3)), ConfigError);
    EXPECT_THROW(config_from_json(broken("target", -1)), ConfigError);
    EXPECT_THROW(config_from_json(broken("runs", 0)), ConfigError);
    EXPECT_THROW(config_from_json(broken("gamma", 1.0)), ConfigError);
    EXPECT_THROW(config_from_json(broken("environment", "lunar_lander")), ConfigError);
    EXPECT_THROW(config_from_json(broken("target_types", json::array({"fleet", "pooled"}))), ConfigError);
    EXPECT_THROW(config_from_json(broken("seeds", json::array({1, 2, 3}))), ConfigError);
    EXPECT_THROW(config_from_json(broken("diagnostic", "perfect_correlation")), ConfigError);
    EXPECT_THROW(config_from_json(broken("members", "three cars")), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);

    json j = base;
    j["policy_iteration"]["value_prior"] = "median";
    EXPECT_THROW(config_from_json(j), ConfigError);
    j = base;
    j["policy_iteration"]["value_signal_variance"] = -1.0;
    EXPECT_THROW(config_from_json(j), ConfigError);
}

TEST(Config, ValueGpSettings)
{
    json j = to_json(load_config(preset("smoke")));
    EXPECT_EQ(config_from_json(j).value_signal_variance, std::optional<double>(1.0));
    EXPECT_EQ(config_from_json(j).value_prior, gprl::ValuePrior::support_mean);
    j["policy_iteration"]["value_signal_variance"] = "fit";
    j["policy_iteration"]["value_prior"] = "zero";
    const ExperimentConfig c = config_from_json(j);
    EXPECT_FALSE(c.value_signal_variance.has_value());
    EXPECT_EQ(c.value_prior, gprl::ValuePrior::zero);
    EXPECT_EQ(to_json(c), j);
    const auto o = policy_iteration_options(c, 1);
    EXPECT_FALSE(o.value_signal_variance.has_value());
    EXPECT_EQ(o.value_prior, gprl::ValuePrior::zero);
}

TEST(Config, RunSeedsDefaultToConsecutiveOffsets)
{
    auto c = load_config(preset("smoke"));
    c.seed = 40;
    c.runs = 3;
    EXPECT_EQ(c.run_seed(0), 40u);
    EXPECT_EQ(c.run_seed(2), 42u);
    c.seeds = {7, 9, 11};
    EXPECT_EQ(c.run_seed(1), 9u);
}

TEST(BuildTransitionModel, ZeroCrossWeightsReproduceTheSingleModel)
{
    const auto data = mountain_car_fleet({1.5e-3, 1e-3, 1e-4}, {20, 40, 40}, 11);
    gprl::TransitionFitOptions opt;
    opt.restarts = 2;
    opt.seed = 5;
    const auto single = build_transition_model(data, TargetType::single, 0, opt);
    const auto fleet = build_transition_model(data, TargetType::fleet, 0, opt, FleetDiagnostic::zero_cross_weights);
    std::mt19937_64 rng(3);
    const Matrix Q = oracle::uniform_matrix(rng, 50, 3);
    Matrix m1, v1, m2, v2;
    single.model->predict(Q, m1, v1);
    fleet.model->predict(Q, m2, v2);
    EXPECT_LT((m1 - m2).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((v1 - v2).cwiseAbs().maxCoeff(), 1e-10);
    for (const auto& C : fleet.correlations) {
        EXPECT_NEAR(C(0, 1), 0.0, 1e-12);
        EXPECT_NEAR(C(0, 2), 0.0, 1e-12);
    }
}

TEST(BuildTransitionModel, PerfectCorrelationReproducesTheJointModel)
{
    const auto data = mountain_car_fleet({1.5e-3, 1.5e-3}, {20, 30}, 21);
    gprl::TransitionFitOptions opt;
    opt.restarts = 2;
    opt.seed = 8;
    const auto joint = build_transition_model(data, TargetType::joint, 0, opt);
    const auto fleet = build_transition_model(data, TargetType::fleet, 0, opt, FleetDiagnostic::perfect_correlation);
    std::mt19937_64 rng(4);
    const Matrix Q = oracle::uniform_matrix(rng, 50, 3);
    Matrix m1, v1, m2, v2;
    joint.model->predict(Q, m1, v1);
    fleet.model->predict(Q, m2, v2);
    EXPECT_LT((m1 - m2).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((v1 - v2).cwiseAbs().maxCoeff(), 1e-8);
    for (const auto& C : fleet.correlations)
        EXPECT_NEAR(C(0, 1), 1.0, 1e-12);
}

TEST(BuildTransitionModel, SingleUsesOnlyTargetSamples)
{
    auto data = mountain_car_fleet({1.5e-3, 1e-3, 1e-4}, {15, 30, 30}, 31);
    gprl::TransitionFitOptions opt;
    opt.restarts = 2;
    const auto a = build_transition_model(data, TargetType::single, 0, opt);
    data.member(2).targets.setConstant(42.0);
    const auto b = build_transition_model(data, TargetType::single, 0, opt);
    std::mt19937_64 rng(5);
    const Matrix Q = oracle::uniform_matrix(rng, 20, 3);
    Matrix m1, v1, m2, v2;
    a.model->predict(Q, m1, v1);
    b.model->predict(Q, m2, v2);
    EXPECT_EQ(m1, m2);
    EXPECT_TRUE(a.correlations.empty());
}

TEST(BuildTransitionModel, FleetCorrelationsAreValid)
{
    const auto data = mountain_car_fleet({1.5e-3, 1e-3, 1e-4}, {20, 40, 40}, 41);
    gprl::TransitionFitOptions opt;
    opt.restarts = 2;
    const auto fleet = build_transition_model(data, TargetType::fleet, 0, opt);
    ASSERT_EQ(fleet.correlations.size(), 2u);
    for (const auto& C : fleet.correlations) {
        ASSERT_EQ(C.rows(), 3);
        EXPECT_LT((C - C.transpose()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_TRUE((C.diagonal().array() == 1.0).all());
        EXPECT_LE(C.cwiseAbs().maxCoeff(), 1.0);
    }
}

TEST(BuildTransitionModel, RejectsMissingTargetData)
{
    auto data = mountain_car_fleet({1.5e-3, 1e-3}, {1, 10}, 51);
    data.member(0).inputs.resize(0, 3);
    data.member(0).targets.resize(0, 2);
    for (auto t : {TargetType::single, TargetType::joint, TargetType::fleet})
        EXPECT_THROW(build_transition_model(data, t, 0), std::invalid_argument);
}

TEST(BuildTransitionModel, DifferenceTargetsPredictNextStates)
{
    const auto data = mountain_car_fleet({1.5e-3}, {30}, 61);
    gprl::TransitionFitOptions opt;
    opt.restarts = 2;
    const auto b = build_transition_model(data, TargetType::single, 0, opt, FleetDiagnostic::none, true);
    Matrix m, v;
    b.model->predict(data.member(0).inputs, m, v);
    EXPECT_LT((m - data.member(0).targets).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(EvaluatePolicy, JumpingToTheGoalScoresZero)
{
    const Teleport env;
    const auto r = evaluate_policy(env, [&](const Vector&) { return env.goal(); }, 200);
    EXPECT_EQ(r.metric, 0.0);
    EXPECT_EQ(r.states.rows(), 201);
    EXPECT_EQ(Vector(r.states.row(0).transpose()), env.start());
}

TEST(EvaluatePolicy, StaticPolicyScoresHorizonTimesStartDistance)
{
    const Teleport env;
    const auto r = evaluate_policy(env, [](const Vector& s) { return s; }, 200);
    EXPECT_DOUBLE_EQ(r.metric, 200.0 * (env.start() - env.goal()).squaredNorm());
}

TEST(EvaluatePolicy, MatchesStepByStepTraceRecomputation)
{
    const envs::MountainCar env(1.5e-3);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> actions;
    const auto r = evaluate_policy(
        env,
        [&](const Vector&) {
            actions.push_back(u(rng));
            return Vector::Constant(1, actions.back());
        },
        200);
    ASSERT_EQ(actions.size(), 200u);

    double p = -0.5, v = 0.0, total = 0.0;
    for (double a : actions) {
        v = std::clamp(v + a * 1.5e-3 - 0.0025 * std::cos(3.0 * p), -0.07, 0.07);
        p = std::clamp(p + v, -1.1, 0.55);
        const double dp = 2.0 * (p - 0.45) / 1.65, dv = v / 0.07;
        total += dp * dp + dv * dv;
    }
    EXPECT_NEAR(r.metric, total, 1e-9 * total);
    EXPECT_DOUBLE_EQ(r.states(200, 0), p);
}

TEST(EvaluatePolicy, WindReportsFinalPower)
{
    const envs::WindFarmRow env(1.0);
    const auto r = evaluate_policy(env, [](const Vector&) { return Vector(Eigen::Vector2d(1.0, 0.0)); }, 200);
    EXPECT_EQ(r.states(200, 0), 45.0);
    EXPECT_EQ(r.metric, env.surrogate().total_power(45.0, 0.0, 1.0));
}

TEST(ValueStd, GridSpansTheNormalizedBox)
{
    const Matrix G = state_grid(2, 50, 0);
    ASSERT_EQ(G.rows(), 2500);
    EXPECT_EQ(G.minCoeff(), -1.0);
    EXPECT_EQ(G.maxCoeff(), 1.0);
    const Matrix H = state_grid(4, 10, 3);
    EXPECT_EQ(H.rows(), 100);
    EXPECT_LE(H.cwiseAbs().maxCoeff(), 1.0);
}

TEST(ValueStd, FarFromDataApproachesThePriorStd)
{
    const Matrix support = Matrix::Constant(1, 2, 0.0);
    const gprl::ValueModel V(support, Vector::Ones(1), gp::SeKernel(gp::SeKernelParams::isotropic(2, 0.01), 4.0));
    EXPECT_NEAR(mean_value_std(V, 50, 0), 2.0, 1e-3);
}

TEST(Summarize, KnownVectorGivesMedianAndQuartiles)
{
    std::vector<RunResult> rs;
    for (int i = 0; i < 5; ++i) {
        RunResult r;
        r.run_id = i;
        r.target_type = TargetType::fleet;
        r.ok = true;
        r.metric = static_cast<double>(5 - i);
        rs.push_back(r);
    }
    const auto s = summarize(rs);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].median, 3.0);
    EXPECT_EQ(s[0].q1, 2.0);
    EXPECT_EQ(s[0].q3, 4.0);
    EXPECT_EQ(s[0].min, 1.0);
    EXPECT_EQ(s[0].max, 5.0);
    EXPECT_EQ(s[0].successful, 5);
}

TEST(Summarize, SingleRunIsItsOwnMedian)
{
    RunResult r;
    r.ok = true;
    r.metric = 12.5;
    const auto s = summarize({r});
    EXPECT_EQ(s[0].median, 12.5);
    EXPECT_EQ(s[0].q1, 12.5);
    EXPECT_EQ(s[0].q3, 12.5);
}

TEST(Summarize, SkipsFailedRunsAndRejectsAllFailed)
{
    RunResult ok, bad;
    ok.ok = true;
    ok.metric = 3.0;
    bad.ok = false;
    bad.error = "diverged";
    const auto s = summarize({ok, bad, bad});
    EXPECT_EQ(s[0].runs, 3);
    EXPECT_EQ(s[0].successful, 1);
    EXPECT_EQ(s[0].median, 3.0);
    EXPECT_THROW(summarize({bad, bad}), std::runtime_error);
    EXPECT_THROW(summarize({}), std::runtime_error);
}

TEST(Summarize, QuantileMatchesSortedInterpolationOracle)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int n = 1; n <= 12; ++n) {
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x)
            v = u(rng);
        std::sort(x.begin(), x.end());
        for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const double h = (n - 1) * p;
            const int lo = static_cast<int>(h);
            const double ref = lo + 1 < n ? x[lo] + (h - lo) * (x[lo + 1] - x[lo]) : x[lo];
            EXPECT_NEAR(quantile(x, p), ref, 1e-12);
        }
    }
}

TEST(ResultsIo, CsvRoundTrip)
{
    std::mt19937_64 rng(13);
    std::vector<RunResult> rs;
    for (int i = 0; i < 40; ++i)
        rs.push_back(random_result(rng, i));
    const std::string text = results_to_csv(rs);
    EXPECT_EQ(text.substr(0, text.find('\n')), "run_id,target_type,seed,metric,converged,wall_ms");
    const auto back = results_from_csv(text);
    ASSERT_EQ(back.size(), rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
        EXPECT_EQ(back[i].run_id, rs[i].run_id);
        EXPECT_EQ(back[i].target_type, rs[i].target_type);
        EXPECT_EQ(back[i].seed, rs[i].seed);
        EXPECT_TRUE(harness_detail::same(back[i].metric, rs[i].metric));
        EXPECT_EQ(back[i].converged, rs[i].converged);
        EXPECT_EQ(back[i].wall_ms, rs[i].wall_ms);
        EXPECT_EQ(back[i].ok, rs[i].ok);
    }
    EXPECT_EQ(results_to_csv(back), text);
}

TEST(ResultsIo, JsonRoundTrip)
{
    std::mt19937_64 rng(17);
    std::vector<RunResult> rs;
    for (int i = 0; i < 40; ++i)
        rs.push_back(random_result(rng, i));
    const auto back = runs_from_json(json::parse(runs_to_json(rs).dump()));
    ASSERT_EQ(back.size(), rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i)
        EXPECT_TRUE(back[i] == rs[i]) << i;
}

TEST(ResultsIo, SummaryRoundTrip)
{
    std::mt19937_64 rng(19);
    std::vector<RunResult> rs;
    for (int i = 0; i < 30; ++i)
        rs.push_back(random_result(rng, i));
    const auto s = summarize(rs);
    EXPECT_EQ(summary_from_json(json::parse(summary_to_json(s).dump())), s);
    const std::string csv = summary_to_csv(s);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(ResultsIo, RejectsMalformedCsv)
{
    EXPECT_THROW(results_from_csv("id,type\n"), std::runtime_error);
    const std::string h = std::string(kResultsHeader) + "\n";
    EXPECT_THROW(results_from_csv(h + "0,single,1,2.5,1\n"), std::runtime_error);
    EXPECT_THROW(results_from_csv(h + "0,pooled,1,2.5,1,3\n"), std::runtime_error);
    EXPECT_THROW(results_from_csv(h + "0,single,1,abc,1,3\n"), std::runtime_error);
    EXPECT_THROW(results_from_csv(h + "0,single,1,2.5,yes,3\n"), std::runtime_error);
    EXPECT_EQ(results_from_csv(h).size(), 0u);
}

TEST(ResultsIo, CorrelationFileAveragesFleetRuns)
{
    RunResult a, b, c;
    a.ok = b.ok = c.ok = true;
    a.target_type = b.target_type = TargetType::fleet;
    a.correlations = {Matrix::Identity(2, 2)};
    b.correlations = {Matrix::Constant(2, 2, 0.5)};
    const json j = correlations_to_json({a, b, c}, 0, {"T", "S"});
    EXPECT_EQ(j.at("runs").size(), 2u);
    const Matrix mean = io_detail::matrix_from_json(j.at("mean"));
    EXPECT_DOUBLE_EQ(mean(0, 0), 0.75);
    EXPECT_DOUBLE_EQ(mean(0, 1), 0.25);
}

TEST(ResultsIo, WriteOutputsProducesEveryArtifact)
{
    std::mt19937_64 rng(23);
    std::vector<RunResult> rs;
    for (int i = 0; i < 9; ++i)
        rs.push_back(random_result(rng, i));
    const auto dir = std::filesystem::temp_directory_path() / "fleetgp_write_outputs";
    std::filesystem::remove_all(dir);
    const auto c = load_config(preset("smoke"));
    write_outputs(dir, c, rs);
    for (const char* f : {"results.csv", "runs.json", "config.json", "summary.json", "summary.csv", "corr_0.json", "corr_1.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    const auto back = read_results(dir);
    ASSERT_EQ(back.size(), rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i)
        EXPECT_TRUE(back[i] == rs[i]);
    std::filesystem::remove(dir / "runs.json");
    EXPECT_EQ(read_results(dir).size(), rs.size());
    std::filesystem::remove_all(dir);
}

TEST(RunExperiment, FailedRunsAreRecordedAndOthersContinue)
{
    auto c = load_config(preset("smoke"));
    c.runs = 4;
    c.jobs = 2;
    const auto fake = [](const ExperimentConfig& cfg, TargetType t, int run) {
        if (run == 1)
            throw NumericalError("synthetic failure");
        RunResult r;
        r.run_id = run;
        r.target_type = t;
        r.seed = cfg.run_seed(run);
        r.ok = true;
        r.metric = run;
        return r;
    };
    const auto rs = run_experiment(c, {}, fake);
    ASSERT_EQ(rs.size(), 12u);
    int failed = 0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
        EXPECT_EQ(rs[i].target_type, c.target_types[i / 4]);
        EXPECT_EQ(rs[i].run_id, static_cast<int>(i % 4));
        if (!rs[i].ok) {
            ++failed;
            EXPECT_EQ(rs[i].run_id, 1);
            EXPECT_EQ(rs[i].error, "synthetic failure");
        }
    }
    EXPECT_EQ(failed, 3);
    EXPECT_EQ(summarize(rs)[0].successful, 3);
}

TEST(RunExperiment, SmokeConfigCompletesDeterministically)
{
    const auto c = load_config(preset("smoke"));
    const auto a = run_experiment(c);
    const auto b = run_experiment(c);
    ASSERT_EQ(a.size(), 3u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(a[i].ok) << a[i].error;
        EXPECT_TRUE(std::isfinite(a[i].metric));
        EXPECT_TRUE(std::isfinite(a[i].value_std));
        EXPECT_LT(a[i].max_residual, 1e-8);
        RunResult x = a[i], y = b[i];
        x.wall_ms = y.wall_ms = 0.0;
        EXPECT_TRUE(x == y) << to_string(a[i].target_type);
        EXPECT_EQ(to_json(x).dump(), to_json(y).dump());
    }
    ASSERT_EQ(a[2].target_type, TargetType::fleet);
    EXPECT_EQ(a[2].correlations.size(), 2u);
    EXPECT_TRUE(a[0].correlations.empty());
}

TEST(RunExperiment, TargetTypesShareTheSampledData)
{
    const auto c = load_config(preset("smoke"));
    const auto a = sample_fleet(c, 5), b = sample_fleet(c, 5), d = sample_fleet(c, 6);
    for (int m = 0; m < 3; ++m) {
        EXPECT_EQ(a.data.member(m).inputs, b.data.member(m).inputs);
        EXPECT_NE(a.data.member(m).inputs, d.data.member(m).inputs);
        EXPECT_EQ(a.data.member(m).size(), c.members[static_cast<std::size_t>(m)].samples);
    }
}
