#include <fleetgp/envs/cart_pole.hpp>
#include <fleetgp/envs/mountain_car.hpp>
#include <fleetgp/envs/wind_farm.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace fleetgp;
using namespace fleetgp::envs;

namespace {

Vector uniform_in(const Box& b, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector x(b.dim());
    for (Eigen::Index d = 0; d < b.dim(); ++d)
        x[d] = b.lower[d] + u(rng) * (b.upper[d] - b.lower[d]);
    return x;
}

// Cart-pole accelerations from the coupled equations of motion, solved as a
// 2x2 linear system in (x_acc, theta_acc).
Vector reference_cart_pole(const Vector& s, double F, double m, double M, double l, double g, double dt)
{
    const double th = s[1], thd = s[3];
    const double c = std::cos(th), sn = std::sin(th);
    // (M + m) x_acc + m l c th_acc = F + m l thd^2 sn
    // c x_acc + (4/3) l th_acc     = g sn
    Eigen::Matrix2d A;
    A << M + m, m * l * c, c, 4.0 / 3.0 * l;
    const Eigen::Vector2d b(F + m * l * thd * thd * sn, g * sn);
    const Eigen::Vector2d acc = A.fullPivLu().solve(b);
    Vector next(4);
    next << s[0] + dt * s[2], s[1] + dt * s[3], s[2] + dt * acc[0], s[3] + dt * acc[1];
    return next;
}

} // namespace

TEST(MountainCar, GravityOnlyVelocityChange)
{
    const MountainCarParams p{1.5e-3};
    const Vector next = mountain_car_step(Vector(Eigen::Vector2d(-0.5, 0.0)), 0.0, p);
    EXPECT_NEAR(next[1], -0.00017684300416925727, 1e-17);
    EXPECT_NEAR(next[0], -0.5 - 0.00017684300416925727, 1e-16);
}

TEST(MountainCar, FlatPointIsEquilibrium)
{
    const double flat = -std::numbers::pi / 6.0;
    const Vector next = mountain_car_step(Vector(Eigen::Vector2d(flat, 0.0)), 0.0, MountainCarParams{});
    EXPECT_NEAR(next[0], flat, 1e-15);
    EXPECT_NEAR(next[1], 0.0, 1e-15);
}

TEST(MountainCar, VelocityIncreasesWithAction)
{
    std::mt19937_64 rng(1);
    const MountainCar env(1e-3);
    for (int i = 0; i < 200; ++i) {
        // away from the walls and the speed limit
        const Vector s = uniform_in(Box(Vector(Eigen::Vector2d(-1.0, -0.035)), Vector(Eigen::Vector2d(0.5, 0.035))), rng);
        double prev = -1.0;
        for (double a = -1.0; a <= 1.0; a += 0.25) {
            const double v = env.step(s, Vector::Constant(1, a))[1];
            EXPECT_GT(v, prev);
            prev = v;
        }
    }
}

TEST(MountainCar, PositionIsClippedAndVelocityKept)
{
    const MountainCarParams p;
    const Vector s(Eigen::Vector2d(-1.09, -0.05));
    const Vector next = mountain_car_step(s, -1.0, p);
    const double v = -0.05 - p.power - p.gravity * std::cos(3.0 * -1.09);
    EXPECT_EQ(next[0], -1.1);
    EXPECT_DOUBLE_EQ(next[1], v);
}

TEST(MountainCar, PaperFleetPowers)
{
    EXPECT_EQ(MountainCar(1.5e-3).params().power, 1.5e-3);
    EXPECT_EQ(MountainCar(1e-3).params().power, 1e-3);
    EXPECT_EQ(MountainCar(1e-4).params().power, 1e-4);
    const MountainCar env;
    EXPECT_EQ(env.start(), Vector(Eigen::Vector2d(-0.5, 0.0)));
    EXPECT_EQ(env.goal(), Vector(Eigen::Vector2d(0.45, 0.0)));
    EXPECT_EQ(env.reward_sigma(), 0.05);
    EXPECT_EQ(env.state_box().lower[0], -1.1);
    EXPECT_EQ(env.state_box().upper[0], 0.55);
}

TEST(CartPole, UprightRestIsEquilibrium)
{
    const Vector next = cart_pole_step(Vector::Zero(4), 0.0, CartPoleParams{});
    EXPECT_EQ(next, Vector::Zero(4));
}

TEST(CartPole, TiltedPoleFalls)
{
    Vector s = Vector::Zero(4);
    s[1] = 0.05;
    const Vector next = cart_pole_step(s, 0.0, CartPoleParams{});
    EXPECT_GT(next[3], 0.0);
}

TEST(CartPole, MatchesReferenceImplementation)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> force(-10.0, 10.0);
    for (double m : {0.1, 0.2, 0.5}) {
        const CartPoleParams p{m};
        Box inner = cart_pole_bounds();
        inner.lower *= 0.8;
        inner.upper *= 0.8;
        for (int i = 0; i < 500; ++i) {
            const Vector s = uniform_in(inner, rng);
            const double F = force(rng);
            const Vector ref = cart_pole_bounds().clamp(reference_cart_pole(s, F, m, 1.0, 0.5, 9.8, 0.02));
            EXPECT_LT((cart_pole_step(s, F, p) - ref).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(CartPole, PaperSetup)
{
    const CartPole env(0.1);
    EXPECT_EQ(env.start(), Vector::Zero(4));
    EXPECT_EQ(env.goal(), Vector::Zero(4));
    EXPECT_EQ(env.reward_sigma(), 0.2);
    EXPECT_EQ(env.state_box().upper, Vector(Eigen::Vector4d(4.8, 0.42, 2.0, 2.0)));
    EXPECT_EQ(env.action_box().upper[0], 10.0);
}

TEST(WindFarm, AlignedBaselineAnchor)
{
    const WakeSurrogate w;
    EXPECT_NEAR(w.total_power(0.0, 0.0, 1.0), 0.853125, 1e-12);
    EXPECT_LT(w.total_power(0.0, 0.0, 1.0), 1.07);
    const WindFarmRow row(1.0);
    EXPECT_NEAR(row.start()[2], 0.853125, 1e-12);
}

TEST(WindFarm, EfficiencyScalesUpstreamTerm)
{
    const WakeSurrogate w;
    for (double yaw : {0.0, 10.0, -25.0})
        EXPECT_NEAR(w.upstream_power(yaw, 0.8), 0.8 * w.upstream_power(yaw, 1.0), 1e-15);
    // both rotors share the generator degradation, so unclipped totals scale too
    EXPECT_NEAR(w.total_power(5.0, 3.0, 0.8), 0.8 * w.total_power(5.0, 3.0, 1.0), 1e-12);
}

TEST(WindFarm, ExhaustiveGridOptimumBeatsAlignment)
{
    const WakeSurrogate w;
    const WindOptimum best = wind_grid_optimum(1.0);
    EXPECT_GT(best.power_mw, w.total_power(0.0, 0.0, 1.0));
    EXPECT_NE(best.yaw1_deg, 0.0);
    EXPECT_EQ(std::abs(best.yaw1_deg), 20.0);
    EXPECT_EQ(best.yaw2_deg, 0.0);
    EXPECT_NEAR(best.power_mw, 1.0447152998368148, 1e-12);
    EXPECT_LE(best.power_mw, 1.05);
}

TEST(WindFarm, PowerDecreasesWithDownstreamYaw)
{
    const WakeSurrogate w;
    for (int y = 0; y < 45; ++y) {
        EXPECT_GT(w.total_power(0.0, y, 1.0), w.total_power(0.0, y + 1, 1.0));
        EXPECT_GT(w.total_power(0.0, -y, 1.0), w.total_power(0.0, -y - 1, 1.0));
    }
}

TEST(WindFarm, StepClipsYawAndRecomputesPower)
{
    const WindFarmRow row(0.9);
    const Vector next = row.step(Vector(Eigen::Vector3d(45.0, -3.0, 0.7)), Vector(Eigen::Vector2d(1.0, -1.0)));
    EXPECT_EQ(next[0], 45.0);
    EXPECT_EQ(next[1], -4.0);
    EXPECT_EQ(next[2], row.surrogate().total_power(45.0, -4.0, 0.9));
    EXPECT_EQ(row.discrete_actions()->rows(), 9);
    EXPECT_EQ(row.reward_dims(), std::vector<int>{2});
    EXPECT_EQ(row.goal()[2], 1.07);
}

TEST(Environments, StatesStayInBounds)
{
    std::mt19937_64 rng(5);
    const MountainCar mc(1.5e-3);
    const CartPole cp(0.5);
    const WindFarmRow wf(0.8);
    for (const Environment* env : std::vector<const Environment*>{&mc, &cp, &wf})
        for (int i = 0; i < 2000; ++i) {
            const Vector s = env->sample_state(rng);
            const Vector a = env->sample_action(rng);
            EXPECT_TRUE(env->state_box().contains(env->step(s, a))) << env->name();
        }
}

TEST(Environments, StepIsBitwiseDeterministic)
{
    std::mt19937_64 rng(7);
    const CartPole cp(0.2);
    for (int i = 0; i < 100; ++i) {
        const Vector s = cp.sample_state(rng);
        const Vector a = cp.sample_action(rng);
        const Vector x = cp.step(s, a), y = cp.step(s, a);
        EXPECT_EQ(0, std::memcmp(x.data(), y.data(), sizeof(double) * 4));
    }
}

TEST(SampleBatch, SizesAndDeterminism)
{
    const MountainCar mc(1e-3);
    const TransitionBatch a = sample_batch(mc, 100, 11), b = sample_batch(mc, 100, 11), c = sample_batch(mc, 100, 12);
    EXPECT_EQ(a.size(), 100);
    EXPECT_EQ(a.states, b.states);
    EXPECT_EQ(a.actions, b.actions);
    EXPECT_EQ(a.next_states, b.next_states);
    EXPECT_NE(a.states, c.states);
    EXPECT_EQ(sample_batch(CartPole(0.1), 5, 1).size(), 5);
    EXPECT_THROW(sample_batch(mc, 0, 1), std::invalid_argument);
    for (Eigen::Index i = 0; i < a.size(); ++i)
        EXPECT_EQ(a.next_states.row(i).transpose(), mc.step(a.states.row(i).transpose(), a.actions.row(i).transpose()));
}

TEST(SampleBatch, WindPowerMatchesYawsAndActionsAreDiscrete)
{
    const WindFarmRow row(0.9);
    const TransitionBatch b = sample_batch(row, 50, 13);
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        EXPECT_EQ(b.states(i, 2), row.surrogate().total_power(b.states(i, 0), b.states(i, 1), 0.9));
        EXPECT_TRUE(b.actions(i, 0) == -1.0 || b.actions(i, 0) == 0.0 || b.actions(i, 0) == 1.0);
    }
}

TEST(Normalization, RoundTripAndGoal)
{
    std::mt19937_64 rng(17);
    const MountainCar mc;
    for (int i = 0; i < 50; ++i) {
        const Vector s = mc.sample_state(rng);
        const Vector u = mc.normalize_state(s);
        EXPECT_TRUE((u.array().abs() <= 1.0 + 1e-15).all());
        EXPECT_LT((mc.denormalize_state(u) - s).cwiseAbs().maxCoeff(), 1e-15);
    }
    EXPECT_NEAR(mc.normalized_reward().goal[0], 2.0 * (0.45 + 1.1) / 1.65 - 1.0, 1e-15);
    EXPECT_EQ(mc.normalized_reward().goal[1], 0.0);

    const CartPole cp;
    EXPECT_EQ(cp.normalize_action(Vector::Constant(1, 5.0))[0], 0.5);
    const WindFarmRow wf;
    const auto space = wf.normalized_action_space();
    EXPECT_TRUE(space.discrete);
    EXPECT_EQ(space.choices, *wf.discrete_actions());
}

TEST(Normalization, BatchMapsIntoUnitBox)
{
    const CartPole cp(0.2);
    const TransitionBatch b = sample_batch(cp, 30, 19);
    Matrix X, Y;
    normalize_batch(cp, b, X, Y);
    EXPECT_EQ(X.cols(), 5);
    EXPECT_EQ(Y.cols(), 4);
    EXPECT_LE(X.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
    EXPECT_LE(Y.cwiseAbs().maxCoeff(), 1.0 + 1e-12);
}

TEST(Environments, GoalDistanceUsesRewardDimensions)
{
    const MountainCar mc;
    EXPECT_EQ(mc.squared_goal_distance(mc.goal()), 0.0);
    const WindFarmRow wf;
    Vector s = wf.goal();
    s[0] = 30.0;
    EXPECT_EQ(wf.squared_goal_distance(s), 0.0);
}
