#pragma once

#include <fleetgp/types.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace fleetgp::gp {

struct RpropOptions {
    int max_iterations = 300;
    double initial_step = 0.1;
    double min_step = 1e-8;
    double max_step = 1.0;
    double gradient_tolerance = 1e-6;
    Vector lower_bound; // empty: unbounded
    Vector upper_bound;
};

struct RpropResult {
    Vector x;
    double value = -std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool diverged = false;
};

/// Objective returning f(x) and writing df/dx into the second argument.
using GradientObjective = std::function<double(const Vector&, Vector&)>;

/// Maximizes f with iRprop+ (sign-based steps with weight backtracking).
/// Returns the best point seen; a non-finite value at the start point marks
/// the run as diverged.
inline RpropResult rprop_maximize(const GradientObjective& f, Vector x, const RpropOptions& opt = {})
{
    const Eigen::Index n = x.size();
    RpropResult best;
    const auto clamp = [&](Vector& v) {
        if (opt.lower_bound.size() == n)
            v = v.cwiseMax(opt.lower_bound);
        if (opt.upper_bound.size() == n)
            v = v.cwiseMin(opt.upper_bound);
    };
    clamp(x);

    Vector grad(n), prev_grad = Vector::Zero(n), step = Vector::Constant(n, opt.initial_step), last_move = Vector::Zero(n);
    double prev_value = -std::numeric_limits<double>::infinity();

    for (int it = 0; it < opt.max_iterations; ++it) {
        double value;
        try {
            value = f(x, grad);
        } catch (const NumericalError&) {
            value = std::numeric_limits<double>::quiet_NaN();
        }
        best.iterations = it + 1;
        if (!std::isfinite(value) || !grad.allFinite()) {
            if (it == 0) {
                best.diverged = true;
                return best;
            }
            // back off to the best point and shrink the steps
            x = best.x;
            step *= 0.5;
            prev_grad.setZero();
            if (step.maxCoeff() < opt.min_step)
                break;
            continue;
        }
        if (value > best.value) {
            best.value = value;
            best.x = x;
        }
        Vector projected = grad;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (opt.lower_bound.size() == n && x[i] <= opt.lower_bound[i] && grad[i] < 0.0)
                projected[i] = 0.0;
            if (opt.upper_bound.size() == n && x[i] >= opt.upper_bound[i] && grad[i] > 0.0)
                projected[i] = 0.0;
        }
        if (projected.cwiseAbs().maxCoeff() < opt.gradient_tolerance)
            break;

        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = grad[i] * prev_grad[i];
            if (s > 0.0) {
                step[i] = std::min(step[i] * 1.2, opt.max_step);
                last_move[i] = (grad[i] > 0.0 ? 1.0 : -1.0) * step[i];
                x[i] += last_move[i];
            } else if (s < 0.0) {
                step[i] = std::max(step[i] * 0.5, opt.min_step);
                if (value < prev_value)
                    x[i] -= last_move[i];
                grad[i] = 0.0;
                last_move[i] = 0.0;
            } else {
                last_move[i] = (grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0)) * step[i];
                x[i] += last_move[i];
            }
        }
        clamp(x);
        prev_grad = grad;
        prev_value = value;
        if (step.maxCoeff() <= opt.min_step)
            break;
    }
    return best;
}

} // namespace fleetgp::gp
