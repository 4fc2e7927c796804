#pragma once

#include <fleetgp/gp/se_kernel.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace fleetgp::coreg {

using gp::SeKernelParams;

/// Weights of the latent function g_s shared between the target and source s.
struct SourceWeights {
    int source = 0;
    double w_target = 0.0; // w_{t,s}
    double w_source = 0.0; // w_{s,s}
};

/// Hyperparameters theta^(t) of the fleet kernel for one target member.
struct FleetKernelParams {
    SeKernelParams se;
    int target = 0;
    std::vector<SourceWeights> sources; // ascending source id, one per member != target
    Vector alphas;                      // one per member

    int members() const { return static_cast<int>(alphas.size()); }

    /// Default initialization: every w and alpha set to `value`.
    static FleetKernelParams uniform(int members, int target, SeKernelParams se, double value = 0.5)
    {
        FleetKernelParams p;
        p.se = std::move(se);
        p.target = target;
        p.alphas = Vector::Constant(members, value);
        for (int m = 0; m < members; ++m)
            if (m != target)
                p.sources.push_back({m, value, value});
        return p;
    }

    const SourceWeights& weights_for(int source) const
    {
        for (const auto& s : sources)
            if (s.source == source)
                return s;
        throw std::invalid_argument("FleetKernelParams: no weights for member");
    }

    void validate() const
    {
        se.validate();
        const int M = members();
        detail::require(M >= 1, "FleetKernelParams: fleet needs at least one member");
        detail::require(target >= 0 && target < M, "FleetKernelParams: target index out of range");
        detail::require(static_cast<int>(sources.size()) == M - 1, "FleetKernelParams: need exactly M-1 source weight pairs");
        std::vector<bool> seen(M, false);
        for (const auto& s : sources) {
            detail::require(s.source >= 0 && s.source < M && s.source != target, "FleetKernelParams: invalid source index");
            detail::require(!seen[s.source], "FleetKernelParams: duplicate source index");
            seen[s.source] = true;
            detail::require(std::isfinite(s.w_target) && std::isfinite(s.w_source), "FleetKernelParams: non-finite weight");
        }
        detail::require(alphas.allFinite(), "FleetKernelParams: non-finite alpha");
    }
};

/// G = sum_{s != t} w_s w_s^T + diag(alpha^2)
struct CoregionalizationMatrix {
    Matrix g;

    int members() const { return static_cast<int>(g.rows()); }
    double operator()(int m, int m2) const { return g(m, m2); }

    double min_eigenvalue() const
    {
        Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }
};

inline CoregionalizationMatrix build_g_matrix(const FleetKernelParams& p)
{
    p.validate();
    const int M = p.members();
    const int t = p.target;
    Matrix G = Matrix::Zero(M, M);
    for (const auto& s : p.sources) {
        G(t, t) += s.w_target * s.w_target;
        G(s.source, s.source) += s.w_source * s.w_source;
        G(t, s.source) += s.w_target * s.w_source;
        G(s.source, t) += s.w_target * s.w_source;
    }
    G.diagonal() += p.alphas.cwiseAbs2();
    return {std::move(G)};
}

/// k^F([x, m], [x2, m2]) = k^SE(x, x2) G_{m, m2}
inline double fleet_kernel(const Eigen::Ref<const Vector>& x, int m, const Eigen::Ref<const Vector>& x2, int m2, const FleetKernelParams& p)
{
    const int M = p.members();
    if (m < 0 || m >= M || m2 < 0 || m2 >= M)
        throw std::out_of_range("fleet_kernel: member id out of range");
    const CoregionalizationMatrix G = build_g_matrix(p);
    if (G(m, m2) == 0.0)
        return 0.0;
    return gp::se_kernel(x, x2, p.se) * G(m, m2);
}

/// corr(G) = diag(G)^-1/2 G diag(G)^-1/2
inline Matrix correlation_matrix(const CoregionalizationMatrix& G)
{
    detail::require(G.g.rows() == G.g.cols(), "correlation_matrix: G must be square");
    const Vector d = G.g.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i)
        detail::require(d[i] > 0.0 && std::isfinite(d[i]), "correlation_matrix: diagonal of G must be strictly positive");
    const Vector s = d.cwiseSqrt().cwiseInverse();
    Matrix corr = s.asDiagonal() * G.g * s.asDiagonal();
    corr = corr.cwiseMax(-1.0).cwiseMin(1.0);
    corr.diagonal().setOnes();
    return corr;
}

/// Samples of one fleet member: inputs [s, a] and one target column per output dimension.
struct MemberData {
    int member = 0;
    Matrix inputs;  // N_m x D
    Matrix targets; // N_m x E

    Eigen::Index size() const { return inputs.rows(); }
};

/// Transition samples of the whole fleet annotated with member ids.
struct FleetDataset {
    int members = 0;
    std::vector<MemberData> data; // indexed by member id

    FleetDataset() = default;
    explicit FleetDataset(int m, Eigen::Index input_dim = 0, Eigen::Index output_dim = 0) : members(m), data(m)
    {
        for (int i = 0; i < m; ++i) {
            data[i].member = i;
            data[i].inputs.resize(0, input_dim);
            data[i].targets.resize(0, output_dim);
        }
    }

    const MemberData& member(int m) const
    {
        detail::require(m >= 0 && m < members, "FleetDataset: member index out of range");
        return data[m];
    }

    MemberData& member(int m)
    {
        detail::require(m >= 0 && m < members, "FleetDataset: member index out of range");
        return data[m];
    }

    Eigen::Index input_dim() const { return data.empty() ? 0 : data.front().inputs.cols(); }
    Eigen::Index output_dim() const { return data.empty() ? 0 : data.front().targets.cols(); }

    Eigen::Index total_size() const
    {
        Eigen::Index n = 0;
        for (const auto& d : data)
            n += d.size();
        return n;
    }

    void validate() const
    {
        detail::require(static_cast<int>(data.size()) == members, "FleetDataset: member count mismatch");
        for (int m = 0; m < members; ++m) {
            detail::require(data[m].member == m, "FleetDataset: member index mismatch");
            detail::require(data[m].inputs.rows() == data[m].targets.rows(), "FleetDataset: inputs/targets length mismatch");
            detail::require(data[m].inputs.cols() == input_dim() && data[m].targets.cols() == output_dim(),
                            "FleetDataset: inconsistent dimensions across members");
        }
    }

    /// All samples stacked in member order, ignoring identity.
    void pooled(Matrix& X, Matrix& Y) const
    {
        X.resize(total_size(), input_dim());
        Y.resize(total_size(), output_dim());
        Eigen::Index row = 0;
        for (const auto& d : data) {
            X.middleRows(row, d.size()) = d.inputs;
            Y.middleRows(row, d.size()) = d.targets;
            row += d.size();
        }
    }
};

} // namespace fleetgp::coreg
