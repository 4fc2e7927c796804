#pragma once

#include <fleetgp/types.hpp>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>

namespace fleetgp::gprl {

/// Axis-aligned box [lower, upper].
struct Box {
    Vector lower;
    Vector upper;

    Box() = default;
    Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {}

    static Box symmetric(Eigen::Index dim, double half_width = 1.0)
    {
        return Box(Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width));
    }

    Eigen::Index dim() const { return lower.size(); }

    void validate() const
    {
        detail::require(lower.size() == upper.size(), "Box: lower/upper dimension mismatch");
        detail::require(lower.size() > 0, "Box: zero-dimensional box");
        for (Eigen::Index d = 0; d < lower.size(); ++d)
            detail::require(std::isfinite(lower[d]) && std::isfinite(upper[d]) && lower[d] < upper[d],
                            "Box: each interval needs finite lo < hi");
    }

    bool contains(const Vector& x) const
    {
        return x.size() == dim() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
    }

    Vector clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
    Vector width() const { return upper - lower; }
};

/// n points in `bounds`, one per stratum of each axis, with a random position
/// inside each stratum. Deterministic for a given seed.
inline Matrix latin_hypercube(int n, const Box& bounds, std::uint64_t seed)
{
    detail::require(n >= 1, "latin_hypercube: n must be >= 1");
    bounds.validate();
    const Eigen::Index D = bounds.dim();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix X(n, D);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (Eigen::Index d = 0; d < D; ++d) {
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const double lo = bounds.lower[d], w = bounds.upper[d] - lo;
        for (int i = 0; i < n; ++i) {
            const double cell = (perm[static_cast<std::size_t>(i)] + u(rng)) / n;
            X(i, d) = std::min(lo + w * cell, bounds.upper[d]);
        }
    }
    return X;
}

} // namespace fleetgp::gprl
