#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fleetgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// Raised when a covariance matrix cannot be factorized even after jitter
/// escalation. Carries the diagonal jitter levels that were attempted.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, std::vector<double> jitters)
        : std::runtime_error(format(what, jitters)), jitters_(std::move(jitters)) {}

    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}

    /// Re-raises `cause` with `context` prepended, keeping its jitter record.
    NumericalError(const std::string& context, const NumericalError& cause)
        : std::runtime_error(context + ": " + cause.what()), jitters_(cause.jitters_) {}

    const std::vector<double>& attempted_jitters() const noexcept { return jitters_; }

private:
    static std::string format(const std::string& what, const std::vector<double>& jitters)
    {
        std::ostringstream os;
        os << what << " (attempted jitter:";
        for (double j : jitters)
            os << ' ' << j;
        os << ')';
        return os.str();
    }

    std::vector<double> jitters_;
};

namespace detail {

inline void require(bool cond, const char* msg)
{
    if (!cond)
        throw std::invalid_argument(msg);
}

} // namespace detail

/// Derives an independent stream seed from (seed, salt) with a splitmix64 step.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt)
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace fleetgp
