#pragma once

#include <fleetgp/gp/gp.hpp>
#include <fleetgp/gp/rprop.hpp>

#include <cmath>
#include <cstdint>
#include <random>

namespace fleetgp::gp {

/// Range (on normalized inputs) from which restart lengthscales are drawn log-uniformly.
inline constexpr double kRestartLengthscaleLo = 0.1;
inline constexpr double kRestartLengthscaleHi = 2.0;

struct HyperoptOptions {
    int restarts = 5;
    std::uint64_t seed = 0;
    bool fit_signal_variance = false;
    double min_lengthscale = 1e-2;
    double max_lengthscale = 1e2;
    double min_signal_variance = 1e-6;
    double max_signal_variance = 1e10;
    RpropOptions rprop{};
};

struct HyperoptResult {
    SeKernel kernel;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    int successful_restarts = 0;
};

namespace hyperopt_detail {

inline Vector to_log(const SeKernel& k, bool with_sf2)
{
    Vector x(k.dim() + (with_sf2 ? 1 : 0));
    x.head(k.dim()) = k.params.lengthscales.array().log().matrix();
    if (with_sf2)
        x[k.dim()] = std::log(k.signal_variance);
    return x;
}

inline SeKernel from_log(const Vector& x, Eigen::Index dim, bool with_sf2, double fixed_sf2)
{
    SeKernel k(SeKernelParams(x.head(dim).array().exp().matrix()), with_sf2 ? std::exp(x[dim]) : fixed_sf2);
    return k;
}

} // namespace hyperopt_detail

/// Evidence maximization for an SE-kernel GP: multi-start Rprop in log-parameter
/// space. Restart 0 starts from `init`; the others draw lengthscales
/// log-uniformly from [0.1, 2]. Restarts that diverge are discarded. The result
/// is never worse than `init`.
inline HyperoptResult optimize_hyperparameters_full(const GpDataset& data, const SeKernel& init, const HyperoptOptions& opt = {})
{
    detail::require(opt.restarts >= 1, "optimize_hyperparameters: restarts must be >= 1");
    detail::require(!data.empty(), "optimize_hyperparameters: empty dataset");
    init.params.validate();
    const Eigen::Index D = init.dim();
    const bool sf2 = opt.fit_signal_variance;

    RpropOptions ropt = opt.rprop;
    ropt.lower_bound = Vector::Constant(D + (sf2 ? 1 : 0), std::log(opt.min_lengthscale));
    ropt.upper_bound = Vector::Constant(D + (sf2 ? 1 : 0), std::log(opt.max_lengthscale));
    if (sf2) {
        ropt.lower_bound[D] = std::log(opt.min_signal_variance);
        ropt.upper_bound[D] = std::log(opt.max_signal_variance);
    }

    const GradientObjective objective = [&](const Vector& x, Vector& g) {
        const SeKernel k = hyperopt_detail::from_log(x, D, sf2, init.signal_variance);
        LmlGradient r = lml_with_gradient(data, k, sf2);
        g = std::move(r.gradient);
        return r.value;
    };

    HyperoptResult result;
    result.kernel = init;
    try {
        result.log_likelihood = log_marginal_likelihood(data, init);
    } catch (const NumericalError&) {
        result.log_likelihood = -std::numeric_limits<double>::infinity();
    }

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> log_l(std::log(kRestartLengthscaleLo), std::log(kRestartLengthscaleHi));
    for (int r = 0; r < opt.restarts; ++r) {
        Vector x0 = hyperopt_detail::to_log(init, sf2);
        if (r > 0)
            for (Eigen::Index d = 0; d < D; ++d)
                x0[d] = log_l(rng);
        const RpropResult run = rprop_maximize(objective, x0, ropt);
        if (run.diverged || !std::isfinite(run.value))
            continue;
        ++result.successful_restarts;
        if (run.value > result.log_likelihood) {
            result.log_likelihood = run.value;
            result.kernel = hyperopt_detail::from_log(run.x, D, sf2, init.signal_variance);
        }
    }
    if (result.successful_restarts == 0)
        throw NumericalError("optimize_hyperparameters: every restart diverged");
    return result;
}

/// Unit-amplitude variant returning only the lengthscales.
inline SeKernelParams optimize_hyperparameters(const GpDataset& data, const SeKernelParams& init, int restarts, std::uint64_t seed = 0)
{
    HyperoptOptions opt;
    opt.restarts = restarts;
    opt.seed = seed;
    return optimize_hyperparameters_full(data, SeKernel(init), opt).kernel.params;
}

} // namespace fleetgp::gp
