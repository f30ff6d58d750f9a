#pragma once

#include <Eigen/Core>

#include "gsdnet/errors.hpp"

namespace gsdnet {

// Dense real symmetric matrix. Construction symmetrizes via (M + M^T)/2 and
// rejects non-finite entries, so every instance satisfies the type invariant.
class SymmetricMatrix {
public:
    explicit SymmetricMatrix(const Eigen::MatrixXd& m);

    static SymmetricMatrix zero(Eigen::Index n);

    Eigen::Index size() const { return m_.rows(); }
    const Eigen::MatrixXd& entries() const { return m_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }

    double frobenius_norm() const { return m_.norm(); }
    double trace() const { return m_.trace(); }

private:
    Eigen::MatrixXd m_;
};

// Eigendecomposition A = U diag(eigvals) U^T with eigvals ascending and
// the sign of each column fixed (largest-magnitude entry non-negative).
struct SpectralDecomposition {
    Eigen::VectorXd eigvals;
    Eigen::MatrixXd eigvecs;  // columns are eigenvectors

    Eigen::Index size() const { return eigvals.size(); }
};

struct EighOptions {
    int max_sweeps = 100;
    // stop when the off-diagonal Frobenius norm falls below rel_tol * ||A||_F
    double rel_tol = 1e-14;
};

// Cyclic Jacobi eigensolver for dense symmetric matrices. Deterministic:
// fixed row-major sweep order, fixed sign convention, stable ascending sort.
// Throws convergence_error if the off-diagonal norm is still above tolerance
// after max_sweeps sweeps.
SpectralDecomposition eigh(const SymmetricMatrix& m, const EighOptions& opts = {});

// U diag(eigvals) U^T. Symmetric by construction.
SymmetricMatrix reconstruct(const SpectralDecomposition& d);

double frobenius_distance(const SymmetricMatrix& a, const SymmetricMatrix& b);

}  // namespace gsdnet
