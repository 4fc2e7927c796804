#pragma once

#include <fleetgp/envs/environment.hpp>

#include <algorithm>
#include <cmath>

namespace fleetgp::envs {

struct MountainCarParams {
    double power = 1.5e-3;
    double gravity = 0.0025;
    double min_position = -1.1;
    double max_position = 0.55;
    double max_speed = 0.07;
};

/// Continuous mountain car; state (position, velocity), action in [-1, 1].
inline Vector mountain_car_step(const Vector& state, double action, const MountainCarParams& p)
{
    detail::require(state.size() == 2, "mountain_car_step: state must be (position, velocity)");
    detail::require(p.power > 0.0, "mountain_car_step: power must be positive");
    const double a = std::clamp(action, -1.0, 1.0);
    double v = state[1] + a * p.power - p.gravity * std::cos(3.0 * state[0]);
    v = std::clamp(v, -p.max_speed, p.max_speed);
    const double x = std::clamp(state[0] + v, p.min_position, p.max_position);
    Vector next(2);
    next << x, v;
    return next;
}

class MountainCar final : public Environment {
public:
    explicit MountainCar(MountainCarParams p = {}) : p_(p) { detail::require(p_.power > 0.0, "MountainCar: power must be positive"); }
    explicit MountainCar(double power) : MountainCar(MountainCarParams{power}) {}

    const MountainCarParams& params() const { return p_; }

    std::string name() const override { return "mountain_car"; }
    Box state_box() const override
    {
        return Box(Vector(Eigen::Vector2d(p_.min_position, -p_.max_speed)), Vector(Eigen::Vector2d(p_.max_position, p_.max_speed)));
    }
    Box action_box() const override { return Box::symmetric(1); }
    Vector start() const override { return Vector(Eigen::Vector2d(-0.5, 0.0)); }
    Vector goal() const override { return Vector(Eigen::Vector2d(0.45, 0.0)); }
    double reward_sigma() const override { return 0.05; }
    Vector step(const Vector& state, const Vector& action) const override { return mountain_car_step(state, action[0], p_); }

private:
    MountainCarParams p_;
};

} // namespace fleetgp::envs
