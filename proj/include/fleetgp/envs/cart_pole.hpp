#pragma once

#include <fleetgp/envs/environment.hpp>

#include <cmath>

namespace fleetgp::envs {

struct CartPoleParams {
    double pole_mass = 0.1;
    double cart_mass = 1.0;
    double half_length = 0.5;
    double gravity = 9.8;
    double dt = 0.02;
    double max_force = 10.0;
};

/// Bounds of (x, theta, x_dot, theta_dot).
inline Box cart_pole_bounds()
{
    Vector hi(4);
    hi << 4.8, 0.42, 2.0, 2.0;
    return Box(-hi, hi);
}

/// Barto cart-pole, explicit Euler. State (x, theta, x_dot, theta_dot).
inline Vector cart_pole_step(const Vector& state, double force, const CartPoleParams& p)
{
    detail::require(state.size() == 4, "cart_pole_step: state must have 4 entries");
    detail::require(p.pole_mass > 0.0, "cart_pole_step: pole mass must be positive");
    const double f = std::clamp(force, -p.max_force, p.max_force);
    const double x = state[0], th = state[1], xd = state[2], thd = state[3];
    const double total = p.cart_mass + p.pole_mass;
    const double pml = p.pole_mass * p.half_length;
    const double c = std::cos(th), s = std::sin(th);
    const double temp = (f + pml * thd * thd * s) / total;
    const double thacc = (p.gravity * s - c * temp) / (p.half_length * (4.0 / 3.0 - p.pole_mass * c * c / total));
    const double xacc = temp - pml * thacc * c / total;
    Vector next(4);
    next << x + p.dt * xd, th + p.dt * thd, xd + p.dt * xacc, thd + p.dt * thacc;
    const Box b = cart_pole_bounds();
    return b.clamp(next);
}

class CartPole final : public Environment {
public:
    explicit CartPole(CartPoleParams p = {}) : p_(p) { detail::require(p_.pole_mass > 0.0, "CartPole: pole mass must be positive"); }
    explicit CartPole(double pole_mass) : CartPole(CartPoleParams{pole_mass}) {}

    const CartPoleParams& params() const { return p_; }

    std::string name() const override { return "cart_pole"; }
    Box state_box() const override { return cart_pole_bounds(); }
    Box action_box() const override { return Box::symmetric(1, p_.max_force); }
    Vector start() const override { return Vector::Zero(4); }
    Vector goal() const override { return Vector::Zero(4); }
    double reward_sigma() const override { return 0.2; }
    Vector step(const Vector& state, const Vector& action) const override { return cart_pole_step(state, action[0], p_); }

private:
    CartPoleParams p_;
};

} // namespace fleetgp::envs
