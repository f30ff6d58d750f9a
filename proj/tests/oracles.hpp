// Test-only oracles, independent of the library implementations they check.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace oracles {

// Determinant via LU with partial pivoting (hand-rolled; not the Jacobi path).
inline double determinant(Eigen::MatrixXd m) {
    const Eigen::Index n = m.rows();
    double det = 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index pivot = k;
        for (Eigen::Index i = k + 1; i < n; ++i)
            if (std::abs(m(i, k)) > std::abs(m(pivot, k))) pivot = i;
        if (pivot != k) {
            m.row(pivot).swap(m.row(k));
            det = -det;
        }
        const double p = m(k, k);
        if (p == 0.0) return 0.0;
        det *= p;
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const double f = m(i, k) / p;
            for (Eigen::Index j = k; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return det;
}

// Roots of det(A - lambda I) by sign scanning over a fine grid inside the
// Gershgorin interval, refined by bisection. Assumes simple roots.
inline std::vector<double> char_poly_roots(const Eigen::MatrixXd& a, int grid_points = 8000,
                                           int bisect_iters = 100) {
    const Eigen::Index n = a.rows();
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double radius = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) radius += std::abs(a(i, j));
        lo = std::min(lo, a(i, i) - radius);
        hi = std::max(hi, a(i, i) + radius);
    }
    lo -= 1e-3;
    hi += 1e-3;
    auto f = [&](double lam) {
        return determinant(a - lam * Eigen::MatrixXd::Identity(n, n));
    };
    std::vector<double> roots;
    double prev_x = lo, prev_f = f(lo);
    for (int g = 1; g <= grid_points; ++g) {
        const double x = lo + (hi - lo) * g / grid_points;
        const double fx = f(x);
        if (prev_f == 0.0) {
            roots.push_back(prev_x);
        } else if ((prev_f < 0.0) != (fx < 0.0)) {
            double a0 = prev_x, b0 = x, fa = prev_f;
            for (int it = 0; it < bisect_iters; ++it) {
                const double mid = 0.5 * (a0 + b0);
                const double fm = f(mid);
                if (fm == 0.0) {
                    a0 = b0 = mid;
                    break;
                }
                if ((fa < 0.0) != (fm < 0.0))
                    b0 = mid;
                else {
                    a0 = mid;
                    fa = fm;
                }
            }
            roots.push_back(0.5 * (a0 + b0));
        }
        prev_x = x;
        prev_f = fx;
    }
    return roots;
}

// Central finite difference of a scalar function of one coordinate.
inline double central_diff(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central finite difference of f() w.r.t. an external coordinate.
inline double fd_grad(const std::function<double()>& f, double* coord, double h = 1e-4) {
    const double orig = *coord;
    *coord = orig + h;
    const double fp = f();
    *coord = orig - h;
    const double fm = f();
    *coord = orig;
    return (fp - fm) / (2.0 * h);
}

// Gradcheck comparison: 1e-4 relative, floored for near-zero gradients.
inline bool grad_close(double analytic, double fd, double rel_tol = 1e-4) {
    return std::abs(analytic - fd) <= rel_tol * std::max({0.01, std::abs(analytic),
                                                          std::abs(fd)});
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
    const double mu = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace oracles
