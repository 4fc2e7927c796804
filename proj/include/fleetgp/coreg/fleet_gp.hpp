#pragma once

#include <fleetgp/coreg/block_arrow.hpp>
#include <fleetgp/coreg/fleet_kernel.hpp>
#include <fleetgp/gp/gp.hpp>
#include <fleetgp/gp/hyperopt.hpp>

#include <cstdint>
#include <numbers>
#include <random>

namespace fleetgp::coreg {

/// Pooled fleet samples of one output dimension laid out for the block-arrow
/// solver: sources in ascending member id, the target block last.
struct FleetLayout {
    std::vector<int> order;      // member id per block
    std::vector<Eigen::Index> offsets;
    std::vector<Eigen::Index> sizes;
    std::vector<int> member_of;  // member id per stacked row
    Matrix inputs;
    Vector targets;

    FleetLayout() = default;

    FleetLayout(const FleetDataset& data, int target, int output)
    {
        data.validate();
        detail::require(target >= 0 && target < data.members, "FleetLayout: target index out of range");
        detail::require(output >= 0 && output < data.output_dim(), "FleetLayout: output index out of range");
        for (int m = 0; m < data.members; ++m)
            if (m != target)
                order.push_back(m);
        order.push_back(target);
        const Eigen::Index n = data.total_size();
        inputs.resize(n, data.input_dim());
        targets.resize(n);
        member_of.reserve(n);
        Eigen::Index off = 0;
        for (int m : order) {
            const MemberData& d = data.member(m);
            offsets.push_back(off);
            sizes.push_back(d.size());
            inputs.middleRows(off, d.size()) = d.inputs;
            targets.segment(off, d.size()) = d.targets.col(output);
            for (Eigen::Index i = 0; i < d.size(); ++i)
                member_of.push_back(m);
            off += d.size();
        }
    }

    Eigen::Index size() const { return targets.size(); }
    std::size_t blocks() const { return order.size(); }
};

/// Assembles the noisy fleet covariance C = K^SE .* G[m_i, m_j] + s2 I in block-arrow form.
inline BlockArrowMatrix fleet_covariance(const FleetLayout& layout, const FleetKernelParams& params, const CoregionalizationMatrix& G,
                                         double noise)
{
    BlockArrowMatrix C;
    const std::size_t last = layout.blocks() - 1;
    const int t = layout.order[last];
    const Matrix Xt = layout.inputs.middleRows(layout.offsets[last], layout.sizes[last]);
    C.target_block = G(t, t) * gp::gram_matrix(Xt, Xt, params.se);
    C.target_block.diagonal().array() += noise;
    for (std::size_t b = 0; b < last; ++b) {
        const int s = layout.order[b];
        const Matrix Xs = layout.inputs.middleRows(layout.offsets[b], layout.sizes[b]);
        Matrix A = G(s, s) * gp::gram_matrix(Xs, Xs, params.se);
        A.diagonal().array() += noise;
        C.source_blocks.push_back(std::move(A));
        C.couplings.push_back(G(s, t) * gp::gram_matrix(Xs, Xt, params.se));
    }
    return C;
}

/// Target-specific fleet GP for a single output dimension, conditioned on the
/// whole annotated fleet dataset and factorized with the block-arrow solver.
class FleetGpModel {
public:
    FleetGpModel() = default;

    FleetGpModel(const FleetDataset& data, int output, FleetKernelParams params, double noise = gp::kDeterministicNoise)
        : params_(std::move(params)), noise_(noise)
    {
        params_.validate();
        detail::require(params_.members() == data.members, "FleetGpModel: parameter/fleet size mismatch");
        detail::require(params_.se.dim() == data.input_dim(), "FleetGpModel: lengthscale dimension mismatch");
        G_ = build_g_matrix(params_);
        layout_ = FleetLayout(data, params_.target, output);
        if (layout_.size() == 0)
            return;
        chol_ = BlockArrowCholesky(fleet_covariance(layout_, params_, G_, noise_));
        alpha_ = chol_.solve(layout_.targets);
    }

    const FleetKernelParams& params() const { return params_; }
    const CoregionalizationMatrix& g_matrix() const { return G_; }
    const FleetLayout& layout() const { return layout_; }
    Eigen::Index dim() const { return params_.se.dim(); }
    double prior_variance() const { return G_(params_.target, params_.target); }

    /// k^F between target queries and the stacked training rows.
    Matrix cross_covariance(const Matrix& queries) const
    {
        Matrix K = gp::gram_matrix(queries, layout_.inputs, params_.se);
        const int t = params_.target;
        for (std::size_t b = 0; b < layout_.blocks(); ++b)
            K.middleCols(layout_.offsets[b], layout_.sizes[b]) *= G_(t, layout_.order[b]);
        return K;
    }

    void predict(const Matrix& queries, Vector& mean, Vector& variance) const
    {
        const Eigen::Index q = queries.rows();
        if (layout_.size() == 0) {
            mean = Vector::Zero(q);
            variance = Vector::Constant(q, prior_variance());
            return;
        }
        const Matrix Kq = cross_covariance(queries);
        mean = Kq * alpha_;
        const Matrix V = chol_.half_solve(Kq.transpose());
        variance = (prior_variance() - V.colwise().squaredNorm().transpose().array()).cwiseMax(0.0).matrix();
    }

    gp::PosteriorStats posterior(const Matrix& queries) const
    {
        gp::PosteriorStats post;
        const Matrix Kqq = prior_variance() * gp::gram_matrix(queries, queries, params_.se);
        if (layout_.size() == 0) {
            post.mean = Vector::Zero(queries.rows());
            post.covariance = Kqq;
            return post;
        }
        const Matrix Kq = cross_covariance(queries);
        post.mean = Kq * alpha_;
        const Matrix V = chol_.half_solve(Kq.transpose());
        post.covariance = Kqq - V.transpose() * V;
        post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
        return post;
    }

    double log_marginal_likelihood() const
    {
        const double n = static_cast<double>(layout_.size());
        return -0.5 * layout_.targets.dot(alpha_) - 0.5 * chol_.log_det() - 0.5 * n * std::log(2.0 * std::numbers::pi);
    }

private:
    FleetKernelParams params_;
    double noise_ = gp::kDeterministicNoise;
    CoregionalizationMatrix G_;
    FleetLayout layout_;
    BlockArrowCholesky chol_;
    Vector alpha_;
};

/// Posterior of tau_t at `queries` (all interpreted as target inputs) given the
/// annotated fleet data of output dimension `output`.
inline gp::PosteriorStats fleet_posterior(const Matrix& queries, const FleetDataset& data, int output, const FleetKernelParams& params,
                                          double noise = gp::kDeterministicNoise)
{
    detail::require(queries.rows() > 0, "fleet_posterior: no query points");
    return FleetGpModel(data, output, params, noise).posterior(queries);
}

// ---------------------------------------------------------------------------
// Evidence maximization

/// Packs theta^(t) as [log l_1..D, w_{t,s} (M-1), w_{s,s} (M-1), alpha (M)].
inline Vector pack_fleet_params(const FleetKernelParams& p)
{
    const Eigen::Index D = p.se.dim();
    const Eigen::Index S = static_cast<Eigen::Index>(p.sources.size());
    Vector x(D + 2 * S + p.members());
    x.head(D) = p.se.lengthscales.array().log().matrix();
    for (Eigen::Index i = 0; i < S; ++i) {
        x[D + i] = p.sources[i].w_target;
        x[D + S + i] = p.sources[i].w_source;
    }
    x.tail(p.members()) = p.alphas;
    return x;
}

inline FleetKernelParams unpack_fleet_params(const Vector& x, const FleetKernelParams& shape)
{
    FleetKernelParams p = shape;
    const Eigen::Index D = shape.se.dim();
    const Eigen::Index S = static_cast<Eigen::Index>(shape.sources.size());
    p.se.lengthscales = x.head(D).array().exp().matrix();
    for (Eigen::Index i = 0; i < S; ++i) {
        p.sources[i].w_target = x[D + i];
        p.sources[i].w_source = x[D + S + i];
    }
    p.alphas = x.tail(shape.members());
    return p;
}

/// Log evidence of the fleet GP and its gradient w.r.t. pack_fleet_params().
inline gp::LmlGradient fleet_lml_with_gradient(const FleetDataset& data, int output, const FleetKernelParams& params,
                                               double noise = gp::kDeterministicNoise)
{
    params.validate();
    const FleetLayout layout(data, params.target, output);
    const Eigen::Index n = layout.size();
    detail::require(n > 0, "fleet_lml_with_gradient: empty fleet dataset");
    const CoregionalizationMatrix G = build_g_matrix(params);
    const BlockArrowCholesky chol(fleet_covariance(layout, params, G, noise));
    const Vector alpha = chol.solve(layout.targets);

    gp::LmlGradient out;
    out.value = -0.5 * layout.targets.dot(alpha) - 0.5 * chol.log_det() - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    const Matrix A = alpha * alpha.transpose() - chol.solve(Matrix(Matrix::Identity(n, n)));
    const Matrix K = gp::gram_matrix(layout.inputs, layout.inputs, params.se);
    const Matrix AK = A.cwiseProduct(K);

    // S_{mm'} = sum over rows of member m and columns of member m' of A .* K
    const int M = params.members();
    Matrix S = Matrix::Zero(M, M);
    for (std::size_t a = 0; a < layout.blocks(); ++a)
        for (std::size_t b = 0; b < layout.blocks(); ++b)
            S(layout.order[a], layout.order[b]) =
                AK.block(layout.offsets[a], layout.offsets[b], layout.sizes[a], layout.sizes[b]).sum();

    const Eigen::Index D = params.se.dim();
    const Eigen::Index NS = static_cast<Eigen::Index>(params.sources.size());
    out.gradient = Vector::Zero(D + 2 * NS + M);

    Matrix AKG = AK;
    for (std::size_t a = 0; a < layout.blocks(); ++a)
        for (std::size_t b = 0; b < layout.blocks(); ++b)
            AKG.block(layout.offsets[a], layout.offsets[b], layout.sizes[a], layout.sizes[b]) *= G(layout.order[a], layout.order[b]);
    for (Eigen::Index d = 0; d < D; ++d) {
        const double l = params.se.lengthscales[d];
        const Vector col = layout.inputs.col(d);
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index i = 0; i < n; ++i) {
                const double r = col[i] - col[j];
                acc += AKG(i, j) * r * r;
            }
        out.gradient[d] = 0.5 * acc / (l * l);
    }
    const int t = params.target;
    for (Eigen::Index i = 0; i < NS; ++i) {
        const auto& w = params.sources[i];
        const int s = w.source;
        out.gradient[D + i] = S(t, t) * w.w_target + S(t, s) * w.w_source;
        out.gradient[D + NS + i] = S(s, s) * w.w_source + S(t, s) * w.w_target;
    }
    for (int m = 0; m < M; ++m)
        out.gradient[D + 2 * NS + m] = S(m, m) * params.alphas[m];
    return out;
}

struct FleetFitOptions {
    int restarts = 5;
    std::uint64_t seed = 0;
    double noise = gp::kDeterministicNoise;
    double initial_weight = 0.5;
    double initial_lengthscale = 1.0;
    double min_lengthscale = 1e-2;
    double max_lengthscale = 1e2;
    double max_abs_weight = 10.0;
    gp::RpropOptions rprop{};
};

struct FleetFitResult {
    FleetKernelParams params;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    double initial_log_likelihood = -std::numeric_limits<double>::infinity();
    int successful_restarts = 0;
};

/// Jointly optimizes theta_SE, every (w_{t,s}, w_{s,s}) pair and alpha by
/// evidence maximization over the annotated fleet data of one output dimension.
/// Restart 0 starts from w = alpha = 0.5; later restarts resample lengthscales
/// log-uniformly and flip weight signs at random.
inline FleetFitResult fit_fleet_hyperparameters_full(const FleetDataset& data, int output, int target, const FleetFitOptions& opt = {})
{
    data.validate();
    detail::require(opt.restarts >= 1, "fit_fleet_hyperparameters: restarts must be >= 1");
    detail::require(target >= 0 && target < data.members, "fit_fleet_hyperparameters: target index out of range");
    detail::require(data.member(target).size() >= 1, "fit_fleet_hyperparameters: target has no samples");
    const Eigen::Index D = data.input_dim();

    const FleetKernelParams init =
        FleetKernelParams::uniform(data.members, target, gp::SeKernelParams::isotropic(D, opt.initial_lengthscale), opt.initial_weight);
    const Eigen::Index P = pack_fleet_params(init).size();

    gp::RpropOptions ropt = opt.rprop;
    ropt.lower_bound = Vector::Constant(P, -opt.max_abs_weight);
    ropt.upper_bound = Vector::Constant(P, opt.max_abs_weight);
    ropt.lower_bound.head(D).setConstant(std::log(opt.min_lengthscale));
    ropt.upper_bound.head(D).setConstant(std::log(opt.max_lengthscale));

    const gp::GradientObjective objective = [&](const Vector& x, Vector& g) {
        gp::LmlGradient r = fleet_lml_with_gradient(data, output, unpack_fleet_params(x, init), opt.noise);
        g = std::move(r.gradient);
        return r.value;
    };

    FleetFitResult result;
    result.params = init;
    try {
        result.initial_log_likelihood = FleetGpModel(data, output, init, opt.noise).log_marginal_likelihood();
    } catch (const NumericalError&) {
    }
    result.log_likelihood = result.initial_log_likelihood;

    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> log_l(std::log(gp::kRestartLengthscaleLo), std::log(gp::kRestartLengthscaleHi));
    std::bernoulli_distribution flip(0.5);
    for (int r = 0; r < opt.restarts; ++r) {
        Vector x0 = pack_fleet_params(init);
        if (r > 0) {
            for (Eigen::Index d = 0; d < D; ++d)
                x0[d] = log_l(rng);
            for (Eigen::Index i = D; i < P; ++i)
                x0[i] = flip(rng) ? -opt.initial_weight : opt.initial_weight;
        }
        const gp::RpropResult run = gp::rprop_maximize(objective, x0, ropt);
        if (run.diverged || !std::isfinite(run.value))
            continue;
        ++result.successful_restarts;
        if (run.value > result.log_likelihood) {
            result.log_likelihood = run.value;
            result.params = unpack_fleet_params(run.x, init);
        }
    }
    if (result.successful_restarts == 0)
        throw NumericalError("fit_fleet_hyperparameters: every restart diverged");
    return result;
}

inline FleetKernelParams fit_fleet_hyperparameters(const FleetDataset& data, int output, int target, int restarts, std::uint64_t seed = 0)
{
    FleetFitOptions opt;
    opt.restarts = restarts;
    opt.seed = seed;
    return fit_fleet_hyperparameters_full(data, output, target, opt).params;
}

} // namespace fleetgp::coreg
