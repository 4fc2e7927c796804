#pragma once

#include <fleetgp/envs/environment.hpp>

#include <cmath>
#include <numbers>

namespace fleetgp::envs {

/// Analytic two-turbine wake model at a fixed 6 m/s inflow. The downstream
/// rotor sees a velocity deficit with a Gaussian lateral profile whose centre
/// is deflected by the upstream yaw:
///   offset  = spacing * deflection_gain * sin(yaw1)
///   deficit = max_deficit * exp(-(offset / wake_width)^2 / 2)
///   P       = efficiency * rated * (cos^3(yaw1) + cos^3(yaw2) (1 - deficit)^3)
struct WakeSurrogate {
    double rated_mw = 0.6;      // single-turbine output at 6 m/s, aligned, free stream
    double spacing_m = 100.0;
    double max_deficit = 0.25;  // centreline velocity deficit at the downstream rotor
    double deflection_gain = 0.3;
    double wake_width_m = 5.0;
    double min_power_mw = 0.5;
    double max_power_mw = 1.05;
    double max_yaw_deg = 45.0;

    double deficit(double yaw1_deg) const
    {
        const double offset = spacing_m * deflection_gain * std::sin(yaw1_deg * std::numbers::pi / 180.0);
        const double z = offset / wake_width_m;
        return max_deficit * std::exp(-0.5 * z * z);
    }

    double upstream_power(double yaw1_deg, double efficiency) const
    {
        const double c = std::cos(yaw1_deg * std::numbers::pi / 180.0);
        return efficiency * rated_mw * c * c * c;
    }

    double downstream_power(double yaw1_deg, double yaw2_deg, double efficiency) const
    {
        const double c = std::cos(yaw2_deg * std::numbers::pi / 180.0);
        const double u = 1.0 - deficit(yaw1_deg);
        return efficiency * rated_mw * c * c * c * u * u * u;
    }

    /// Total row power, clipped to the reported power range.
    double total_power(double yaw1_deg, double yaw2_deg, double efficiency) const
    {
        const double p = upstream_power(yaw1_deg, efficiency) + downstream_power(yaw1_deg, yaw2_deg, efficiency);
        return std::clamp(p, min_power_mw, max_power_mw);
    }
};

/// Row state (yaw1, yaw2, power) after applying yaw changes (degrees).
inline Vector wind_farm_step(const Vector& state, const Vector& action, double efficiency, const WakeSurrogate& w = {})
{
    detail::require(state.size() == 3 && action.size() == 2, "wind_farm_step: state (yaw1, yaw2, power), action (dyaw1, dyaw2)");
    detail::require(efficiency > 0.0, "wind_farm_step: efficiency must be positive");
    const double y1 = std::clamp(state[0] + action[0], -w.max_yaw_deg, w.max_yaw_deg);
    const double y2 = std::clamp(state[1] + action[1], -w.max_yaw_deg, w.max_yaw_deg);
    Vector next(3);
    next << y1, y2, w.total_power(y1, y2, efficiency);
    return next;
}

struct WindOptimum {
    double yaw1_deg = 0.0;
    double yaw2_deg = 0.0;
    double power_mw = 0.0;
};

/// Best joint yaw on the integer-degree grid.
inline WindOptimum wind_grid_optimum(double efficiency, const WakeSurrogate& w = {})
{
    WindOptimum best{0.0, 0.0, -1.0};
    const int m = static_cast<int>(w.max_yaw_deg);
    for (int a = -m; a <= m; ++a)
        for (int b = -m; b <= m; ++b) {
            const double p = w.total_power(a, b, efficiency);
            if (p > best.power_mw)
                best = {static_cast<double>(a), static_cast<double>(b), p};
        }
    return best;
}

class WindFarmRow final : public Environment {
public:
    explicit WindFarmRow(double efficiency = 1.0, WakeSurrogate w = {}) : eff_(efficiency), w_(w)
    {
        detail::require(eff_ > 0.0, "WindFarmRow: efficiency must be positive");
    }

    double efficiency() const { return eff_; }
    const WakeSurrogate& surrogate() const { return w_; }

    std::string name() const override { return "wind_farm"; }
    Box state_box() const override
    {
        return Box(Vector(Eigen::Vector3d(-w_.max_yaw_deg, -w_.max_yaw_deg, w_.min_power_mw)),
                   Vector(Eigen::Vector3d(w_.max_yaw_deg, w_.max_yaw_deg, w_.max_power_mw)));
    }
    Box action_box() const override { return Box::symmetric(2); }
    std::optional<Matrix> discrete_actions() const override
    {
        Matrix A(9, 2);
        int k = 0;
        for (int a = -1; a <= 1; ++a)
            for (int b = -1; b <= 1; ++b)
                A.row(k++) << a, b;
        return A;
    }
    Vector start() const override { return Vector(Eigen::Vector3d(0.0, 0.0, w_.total_power(0.0, 0.0, eff_))); }
    Vector goal() const override { return Vector(Eigen::Vector3d(0.0, 0.0, 1.07)); }
    double reward_sigma() const override { return 0.05; }
    std::vector<int> reward_dims() const override { return {2}; }
    Vector step(const Vector& state, const Vector& action) const override { return wind_farm_step(state, action, eff_, w_); }

    /// Yaws uniform on the box; the power entry is the one this row produces at those yaws.
    Vector sample_state(std::mt19937_64& rng) const override
    {
        std::uniform_real_distribution<double> u(-w_.max_yaw_deg, w_.max_yaw_deg);
        const double y1 = u(rng), y2 = u(rng);
        return Vector(Eigen::Vector3d(y1, y2, w_.total_power(y1, y2, eff_)));
    }

private:
    double eff_;
    WakeSurrogate w_;
};

} // namespace fleetgp::envs
