#pragma once

#include <fleetgp/coreg/fleet_gp.hpp>
#include <fleetgp/gp/hyperopt.hpp>

#include <memory>

namespace fleetgp::gprl {

/// Mean and diagonal covariance of a predicted next state.
struct GaussianState {
    Vector mean;
    Vector variance;

    Eigen::Index dim() const { return mean.size(); }

    void validate() const
    {
        detail::require(mean.size() == variance.size(), "GaussianState: mean/variance size mismatch");
        detail::require((variance.array() >= 0.0).all(), "GaussianState: negative variance");
    }
};

/// One independent GP per next-state dimension over inputs [state, action].
class TransitionModel {
public:
    virtual ~TransitionModel() = default;

    virtual Eigen::Index input_dim() const = 0;
    virtual Eigen::Index output_dim() const = 0;

    /// Row i of `mean`/`variance` holds the prediction for row i of `inputs`.
    virtual void predict(const Matrix& inputs, Matrix& mean, Matrix& variance) const = 0;
};

using TransitionModelPtr = std::shared_ptr<const TransitionModel>;

/// Single-member model: plain SE-kernel GPs.
class SeTransitionModel final : public TransitionModel {
public:
    explicit SeTransitionModel(std::vector<gp::GpModel> dims) : dims_(std::move(dims))
    {
        detail::require(!dims_.empty(), "SeTransitionModel: no output dimensions");
        for (const auto& m : dims_)
            detail::require(m.dim() == dims_.front().dim(), "SeTransitionModel: inconsistent input dimension");
    }

    Eigen::Index input_dim() const override { return dims_.front().dim(); }
    Eigen::Index output_dim() const override { return static_cast<Eigen::Index>(dims_.size()); }
    const gp::GpModel& dimension(std::size_t e) const { return dims_.at(e); }

    void predict(const Matrix& inputs, Matrix& mean, Matrix& variance) const override
    {
        detail::require(inputs.cols() == input_dim(), "SeTransitionModel: input dimension mismatch");
        mean.resize(inputs.rows(), output_dim());
        variance.resize(inputs.rows(), output_dim());
        Vector m, v;
        for (std::size_t e = 0; e < dims_.size(); ++e) {
            dims_[e].predict(inputs, m, v);
            mean.col(static_cast<Eigen::Index>(e)) = m;
            variance.col(static_cast<Eigen::Index>(e)) = v;
        }
    }

private:
    std::vector<gp::GpModel> dims_;
};

/// Target-specific coregionalized model.
class FleetTransitionModel final : public TransitionModel {
public:
    explicit FleetTransitionModel(std::vector<coreg::FleetGpModel> dims) : dims_(std::move(dims))
    {
        detail::require(!dims_.empty(), "FleetTransitionModel: no output dimensions");
    }

    Eigen::Index input_dim() const override { return dims_.front().dim(); }
    Eigen::Index output_dim() const override { return static_cast<Eigen::Index>(dims_.size()); }
    const coreg::FleetGpModel& dimension(std::size_t e) const { return dims_.at(e); }

    void predict(const Matrix& inputs, Matrix& mean, Matrix& variance) const override
    {
        detail::require(inputs.cols() == input_dim(), "FleetTransitionModel: input dimension mismatch");
        mean.resize(inputs.rows(), output_dim());
        variance.resize(inputs.rows(), output_dim());
        Vector m, v;
        for (std::size_t e = 0; e < dims_.size(); ++e) {
            dims_[e].predict(inputs, m, v);
            mean.col(static_cast<Eigen::Index>(e)) = m;
            variance.col(static_cast<Eigen::Index>(e)) = v;
        }
    }

private:
    std::vector<coreg::FleetGpModel> dims_;
};

/// Wraps a model of state changes s' - s: the mean gains the input state,
/// the variance is unchanged.
class DifferenceTransitionModel final : public TransitionModel {
public:
    explicit DifferenceTransitionModel(TransitionModelPtr inner) : inner_(std::move(inner))
    {
        detail::require(inner_ != nullptr, "DifferenceTransitionModel: missing model");
        detail::require(inner_->input_dim() >= inner_->output_dim(), "DifferenceTransitionModel: inputs must start with the state");
    }

    Eigen::Index input_dim() const override { return inner_->input_dim(); }
    Eigen::Index output_dim() const override { return inner_->output_dim(); }
    const TransitionModel& inner() const { return *inner_; }

    void predict(const Matrix& inputs, Matrix& mean, Matrix& variance) const override
    {
        inner_->predict(inputs, mean, variance);
        mean += inputs.leftCols(output_dim());
    }

private:
    TransitionModelPtr inner_;
};

/// Same samples with targets s' - s; inputs must start with the state.
inline coreg::FleetDataset to_differences(coreg::FleetDataset data)
{
    for (auto& m : data.data) {
        detail::require(m.inputs.cols() >= m.targets.cols(), "to_differences: inputs must start with the state");
        m.targets -= m.inputs.leftCols(m.targets.cols());
    }
    return data;
}

struct TransitionFitOptions {
    int restarts = 5;
    std::uint64_t seed = 0;
    double noise = gp::kDeterministicNoise;
    double initial_lengthscale = 1.0;
};

/// Fits one unit-amplitude SE GP per column of `next_states`.
inline std::shared_ptr<SeTransitionModel> fit_se_transition_model(const Matrix& inputs, const Matrix& next_states,
                                                                  const TransitionFitOptions& opt = {})
{
    detail::require(inputs.rows() == next_states.rows(), "fit_se_transition_model: row count mismatch");
    detail::require(inputs.rows() > 0, "fit_se_transition_model: no samples");
    std::vector<gp::GpModel> dims;
    for (Eigen::Index e = 0; e < next_states.cols(); ++e) {
        gp::GpDataset data(inputs, next_states.col(e), opt.noise);
        gp::HyperoptOptions h;
        h.restarts = opt.restarts;
        h.seed = opt.seed + static_cast<std::uint64_t>(e);
        const auto fit = gp::optimize_hyperparameters_full(
            data, gp::SeKernel(gp::SeKernelParams::isotropic(inputs.cols(), opt.initial_lengthscale)), h);
        dims.emplace_back(std::move(data), fit.kernel);
    }
    return std::make_shared<SeTransitionModel>(std::move(dims));
}

/// Fits one fleet GP per output dimension of `data` for member `target`.
inline std::shared_ptr<FleetTransitionModel> fit_fleet_transition_model(const coreg::FleetDataset& data, int target,
                                                                        const TransitionFitOptions& opt = {},
                                                                        std::vector<coreg::FleetFitResult>* fits = nullptr)
{
    std::vector<coreg::FleetGpModel> dims;
    for (Eigen::Index e = 0; e < data.output_dim(); ++e) {
        coreg::FleetFitOptions f;
        f.restarts = opt.restarts;
        f.seed = opt.seed + static_cast<std::uint64_t>(e);
        f.noise = opt.noise;
        f.initial_lengthscale = opt.initial_lengthscale;
        auto fit = coreg::fit_fleet_hyperparameters_full(data, static_cast<int>(e), target, f);
        dims.emplace_back(data, static_cast<int>(e), fit.params, opt.noise);
        if (fits)
            fits->push_back(std::move(fit));
    }
    return std::make_shared<FleetTransitionModel>(std::move(dims));
}

/// Builds a fleet model from fixed per-dimension parameters (no fitting).
inline std::shared_ptr<FleetTransitionModel> make_fleet_transition_model(const coreg::FleetDataset& data,
                                                                         const std::vector<coreg::FleetKernelParams>& params,
                                                                         double noise = gp::kDeterministicNoise)
{
    detail::require(static_cast<Eigen::Index>(params.size()) == data.output_dim(),
                    "make_fleet_transition_model: one parameter set per output dimension");
    std::vector<coreg::FleetGpModel> dims;
    for (std::size_t e = 0; e < params.size(); ++e)
        dims.emplace_back(data, static_cast<int>(e), params[e], noise);
    return std::make_shared<FleetTransitionModel>(std::move(dims));
}

/// Predicted next-state distribution at [state, action].
inline GaussianState propagate(const Vector& state, const Vector& action, const TransitionModel& model)
{
    detail::require(state.size() + action.size() == model.input_dim(), "propagate: state/action dimension mismatch");
    Matrix x(1, model.input_dim());
    x << state.transpose(), action.transpose();
    Matrix m, v;
    model.predict(x, m, v);
    return {m.row(0).transpose(), v.row(0).transpose()};
}

} // namespace fleetgp::gprl
