#include "gsdnet/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace gsdnet {

SymmetricMatrix::SymmetricMatrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("SymmetricMatrix: matrix must be square");
    if (m.rows() < 1) throw std::invalid_argument("SymmetricMatrix: n must be >= 1");
    if (!m.allFinite())
        throw std::invalid_argument("SymmetricMatrix: entries must be finite");
    m_ = 0.5 * (m + m.transpose());
}

SymmetricMatrix SymmetricMatrix::zero(Eigen::Index n) {
    return SymmetricMatrix(Eigen::MatrixXd::Zero(n, n));
}

namespace {

// One cyclic sweep of Jacobi rotations over the strict upper triangle.
void jacobi_sweep(Eigen::MatrixXd& a, Eigen::MatrixXd& v, double small) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index p = 0; p < n - 1; ++p) {
        for (Eigen::Index q = p + 1; q < n; ++q) {
            const double apq = a(p, q);
            if (std::abs(apq) <= small) continue;

            const double diff = a(q, q) - a(p, p);
            double t;
            if (std::abs(apq) < 1e-300 * std::abs(diff)) {
                t = apq / diff;
            } else {
                const double theta = diff / (2.0 * apq);
                t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                if (theta < 0.0) t = -t;
            }
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;
            const double tau = s / (1.0 + c);

            const double app = a(p, p), aqq = a(q, q);
            a(p, p) = app - t * apq;
            a(q, q) = aqq + t * apq;
            a(p, q) = 0.0;
            a(q, p) = 0.0;

            for (Eigen::Index i = 0; i < n; ++i) {
                if (i == p || i == q) continue;
                const double aip = a(i, p), aiq = a(i, q);
                a(i, p) = aip - s * (aiq + tau * aip);
                a(p, i) = a(i, p);
                a(i, q) = aiq + s * (aip - tau * aiq);
                a(q, i) = a(i, q);
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                const double vip = v(i, p), viq = v(i, q);
                v(i, p) = vip - s * (viq + tau * vip);
                v(i, q) = viq + s * (vip - tau * viq);
            }
        }
    }
}

double offdiag_norm(const Eigen::MatrixXd& a) {
    double sum = 0.0;
    const Eigen::Index n = a.rows();
    for (Eigen::Index p = 0; p < n - 1; ++p)
        for (Eigen::Index q = p + 1; q < n; ++q) sum += a(p, q) * a(p, q);
    return std::sqrt(2.0 * sum);
}

}  // namespace

SpectralDecomposition eigh(const SymmetricMatrix& m, const EighOptions& opts) {
    const Eigen::Index n = m.size();
    Eigen::MatrixXd a = m.entries();
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);

    const double scale = a.norm();
    const double tol = opts.rel_tol * std::max(scale, 1e-300);

    if (n > 1) {
        bool converged = false;
        for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
            if (offdiag_norm(a) <= tol) {
                converged = true;
                break;
            }
            jacobi_sweep(a, v, 0.0);
        }
        if (!converged && offdiag_norm(a) > tol) {
            std::ostringstream os;
            os << "eigh: cyclic Jacobi did not converge after " << opts.max_sweeps
               << " sweeps, residual off-diagonal norm " << offdiag_norm(a);
            throw convergence_error(os.str());
        }
    }

    // ascending stable sort of the diagonal, ties keep original index order
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&a](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

    SpectralDecomposition d;
    d.eigvals.resize(n);
    d.eigvecs.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        d.eigvals[k] = a(src, src);
        d.eigvecs.col(k) = v.col(src);
    }

    // sign convention: largest-magnitude component non-negative (first index on ties)
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index arg = 0;
        double best = std::abs(d.eigvecs(0, k));
        for (Eigen::Index i = 1; i < n; ++i) {
            const double mag = std::abs(d.eigvecs(i, k));
            if (mag > best) {
                best = mag;
                arg = i;
            }
        }
        if (d.eigvecs(arg, k) < 0.0) d.eigvecs.col(k) = -d.eigvecs.col(k);
    }
    return d;
}

SymmetricMatrix reconstruct(const SpectralDecomposition& d) {
    if (d.eigvals.size() != d.eigvecs.cols() || d.eigvecs.rows() != d.eigvecs.cols())
        throw std::invalid_argument("reconstruct: inconsistent decomposition shapes");
    Eigen::MatrixXd a =
        d.eigvecs * d.eigvals.asDiagonal() * d.eigvecs.transpose();
    return SymmetricMatrix(a);
}

double frobenius_distance(const SymmetricMatrix& a, const SymmetricMatrix& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("frobenius_distance: shape mismatch");
    return (a.entries() - b.entries()).norm();
}

}  // namespace gsdnet
