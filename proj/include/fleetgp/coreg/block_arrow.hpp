#pragma once

#include <fleetgp/gp/cholesky.hpp>

#include <numeric>

namespace fleetgp::coreg {

/// Symmetric block-arrow matrix
///
///   [ A_1            B_1 ]
///   [      A_2       B_2 ]
///   [           ...  ... ]
///   [ B_1^T B_2^T ...  A_t ]
///
/// Source blocks come first in ascending member id, the target block last.
/// Sources only couple to the target, never to each other.
struct BlockArrowMatrix {
    std::vector<Matrix> source_blocks; // A_s, N_s x N_s
    std::vector<Matrix> couplings;     // B_s, N_s x N_t
    Matrix target_block;               // A_t, N_t x N_t

    Eigen::Index target_size() const { return target_block.rows(); }

    Eigen::Index size() const
    {
        Eigen::Index n = target_size();
        for (const auto& A : source_blocks)
            n += A.rows();
        return n;
    }

    void validate() const
    {
        detail::require(source_blocks.size() == couplings.size(), "BlockArrowMatrix: one coupling per source block");
        detail::require(target_block.rows() == target_block.cols(), "BlockArrowMatrix: target block must be square");
        for (std::size_t s = 0; s < source_blocks.size(); ++s) {
            detail::require(source_blocks[s].rows() == source_blocks[s].cols(), "BlockArrowMatrix: source block must be square");
            detail::require(couplings[s].rows() == source_blocks[s].rows() && couplings[s].cols() == target_size(),
                            "BlockArrowMatrix: coupling block has wrong shape");
        }
    }

    Matrix to_dense() const
    {
        validate();
        const Eigen::Index n = size(), nt = target_size(), t0 = n - nt;
        Matrix C = Matrix::Zero(n, n);
        Eigen::Index off = 0;
        for (std::size_t s = 0; s < source_blocks.size(); ++s) {
            const Eigen::Index ns = source_blocks[s].rows();
            C.block(off, off, ns, ns) = source_blocks[s];
            C.block(off, t0, ns, nt) = couplings[s];
            C.block(t0, off, nt, ns) = couplings[s].transpose();
            off += ns;
        }
        C.block(t0, t0, nt, nt) = target_block;
        return C;
    }
};

/// Cholesky factorization that keeps the arrow sparsity: with C = L L^T,
///
///   L = [ L_1                ]
///       [      L_2           ]
///       [ R_1  R_2  ...  L_S ]
///
/// where L_s = chol(A_s), R_s = B_s^T L_s^-T and L_S = chol(A_t - sum_s R_s R_s^T)
/// factors the Schur complement on the target block. Factorization cost is
/// O(sum_s N_s^3 + N_t^2 sum_s N_s + N_t^3) instead of O((sum N)^3).
class BlockArrowCholesky {
public:
    BlockArrowCholesky() = default;

    explicit BlockArrowCholesky(const BlockArrowMatrix& C)
    {
        C.validate();
        nt_ = C.target_size();
        offsets_.resize(C.source_blocks.size());
        Eigen::Index off = 0;
        for (std::size_t s = 0; s < C.source_blocks.size(); ++s) {
            offsets_[s] = off;
            off += C.source_blocks[s].rows();
        }
        n_ = off + nt_;

        std::vector<double> tried;
        for (double jitter : gp::kJitterLadder) {
            tried.push_back(jitter);
            if (factorize(C, jitter)) {
                jitter_ = jitter;
                return;
            }
        }
        throw NumericalError("block-arrow covariance is not positive definite", std::move(tried));
    }

    Eigen::Index size() const { return n_; }
    double jitter() const { return jitter_; }

    /// L^{-1} B
    Matrix half_solve(const Matrix& B) const
    {
        detail::require(B.rows() == n_, "BlockArrowCholesky: right-hand side has wrong row count");
        Matrix Z(n_, B.cols());
        const Eigen::Index t0 = n_ - nt_;
        Matrix zt = B.bottomRows(nt_);
        for (std::size_t s = 0; s < source_.size(); ++s) {
            const Eigen::Index ns = source_[s].rows();
            auto zs = Z.middleRows(offsets_[s], ns);
            zs = source_[s].matrixL().solve(B.middleRows(offsets_[s], ns));
            if (nt_ > 0)
                zt.noalias() -= R_[s] * zs;
        }
        if (nt_ > 0)
            Z.middleRows(t0, nt_) = schur_.matrixL().solve(zt);
        return Z;
    }

    /// C^{-1} B
    Matrix solve(const Matrix& B) const
    {
        Matrix X = half_solve(B);
        const Eigen::Index t0 = n_ - nt_;
        if (nt_ > 0)
            X.middleRows(t0, nt_) = schur_.matrixU().solve(X.middleRows(t0, nt_));
        for (std::size_t s = 0; s < source_.size(); ++s) {
            const Eigen::Index ns = source_[s].rows();
            Matrix zs = X.middleRows(offsets_[s], ns);
            if (nt_ > 0)
                zs.noalias() -= R_[s].transpose() * X.middleRows(t0, nt_);
            X.middleRows(offsets_[s], ns) = source_[s].matrixU().solve(zs);
        }
        return X;
    }

    Vector solve(const Vector& b) const { return solve(Matrix(b)).col(0); }

    double log_det() const
    {
        double ld = 0.0;
        for (const auto& L : source_)
            ld += 2.0 * L.matrixLLT().diagonal().array().log().sum();
        if (nt_ > 0)
            ld += 2.0 * schur_.matrixLLT().diagonal().array().log().sum();
        return ld;
    }

private:
    static bool ok(const Eigen::LLT<Matrix>& llt)
    {
        if (llt.info() != Eigen::Success)
            return false;
        const auto d = llt.matrixLLT().diagonal();
        return d.allFinite() && (d.array() > 0.0).all();
    }

    bool factorize(const BlockArrowMatrix& C, double jitter)
    {
        source_.assign(C.source_blocks.size(), {});
        R_.assign(C.source_blocks.size(), {});
        Matrix S = C.target_block;
        S.diagonal().array() += jitter;
        for (std::size_t s = 0; s < C.source_blocks.size(); ++s) {
            Matrix A = C.source_blocks[s];
            A.diagonal().array() += jitter;
            source_[s].compute(A);
            if (!ok(source_[s]))
                return false;
            if (nt_ > 0) {
                R_[s] = source_[s].matrixL().solve(C.couplings[s]).transpose();
                S.noalias() -= R_[s] * R_[s].transpose();
            }
        }
        if (nt_ > 0) {
            schur_.compute(S);
            if (!ok(schur_))
                return false;
        }
        return true;
    }

    Eigen::Index n_ = 0;
    Eigen::Index nt_ = 0;
    double jitter_ = 0.0;
    std::vector<Eigen::Index> offsets_;
    std::vector<Eigen::LLT<Matrix>> source_;
    std::vector<Matrix> R_; // N_t x N_s
    Eigen::LLT<Matrix> schur_;
};

/// C^{-1} B for a block-arrow C.
inline Matrix block_arrow_solve(const BlockArrowMatrix& C, const Matrix& B)
{
    return BlockArrowCholesky(C).solve(B);
}

} // namespace fleetgp::coreg
