// Shared numerical routines: Gaussian distribution functions, adaptive
// Simpson quadrature, golden-section search, Gauss-Hermite rules, a
// self-contained cyclic Jacobi eigenvalue routine (used as the independent
// second opinion on certificates), and the Wilson score interval.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fsopoint/errors.hpp"

namespace fso::num {

// =============================================================================
// Gaussian distribution
// =============================================================================

/// Standard normal density.
inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Standard normal CDF, accurate in both tails (erfc-based).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Standard normal tail probability Q(x) = 1 - Phi(x).
inline double normal_q(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

/**
 * @brief Inverse standard normal CDF.
 *
 * Rational initial guess (relative error < 1.15e-9 everywhere) polished by
 * one Halley step against the erfc-based CDF; the result is accurate to a
 * few ulp across (0,1).
 */
inline double normal_cdf_inv(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("normal_cdf_inv: p must lie strictly inside (0,1)");

    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // One Halley refinement: f = Phi(x) - p.
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x = x - u / (1.0 + 0.5 * x * u);
    return x;
}

// =============================================================================
// Quadrature
// =============================================================================

namespace detail {
inline double simpson(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)> &f, double a, double fa,
                                   double b, double fb, double m, double fm, double whole,
                                   double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(a, fa, m, fm, flm);
    double right = simpson(m, fm, b, fb, frm);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
} // namespace detail

/**
 * @brief Adaptive Simpson quadrature of f over [a, b].
 *
 * Classic recursive scheme with Richardson correction; `tol` is an absolute
 * target on the integral.
 */
inline double adaptive_simpson(const std::function<double(double)> &f, double a, double b,
                               double tol = 1e-12, int max_depth = 60) {
    if (!(b > a))
        throw DomainError("adaptive_simpson: requires b > a");
    double fa = f(a), fb = f(b), m = 0.5 * (a + b), fm = f(m);
    double whole = detail::simpson(a, fa, b, fb, fm);
    return detail::adaptive_simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// =============================================================================
// Golden-section search
// =============================================================================

/**
 * @brief Golden-section maximization of a unimodal function on [a, b].
 *
 * @return (argmax, max value). Tolerance is on the argument interval width.
 */
inline std::pair<double, double> golden_max(const std::function<double(double)> &f, double a,
                                            double b, double xtol = 1e-10) {
    if (!(b >= a))
        throw DomainError("golden_max: requires b >= a");
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > xtol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    double xm = 0.5 * (a + b);
    return {xm, f(xm)};
}

/// Golden-section minimization (argmin, min value).
inline std::pair<double, double> golden_min(const std::function<double(double)> &f, double a,
                                            double b, double xtol = 1e-10) {
    auto neg = [&](double x) { return -f(x); };
    auto [xm, fm] = golden_max(neg, a, b, xtol);
    return {xm, -fm};
}

// =============================================================================
// Gauss-Hermite quadrature (physicists' convention)
// =============================================================================

/**
 * @brief Nodes and weights for the n-point Gauss-Hermite rule.
 *
 * Golub-Welsch construction: eigen-decomposition of the symmetric Jacobi
 * matrix with off-diagonal sqrt(k/2). Approximates
 *   integral exp(-t^2) f(t) dt  ≈  sum_i w_i f(t_i).
 */
struct GaussHermiteRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(int n) {
    if (n < 2 || n > 256)
        throw ValidationError("gauss_hermite: order must be in [2, 256]");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        double off = std::sqrt(0.5 * k);
        J(k, k - 1) = off;
        J(k - 1, k) = off;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussHermiteRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double sqrt_pi = std::sqrt(M_PI);
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = es.eigenvalues()(i);
        double v0 = es.eigenvectors()(0, i);
        rule.weights[i] = sqrt_pi * v0 * v0;
    }
    return rule;
}

// =============================================================================
// Cyclic Jacobi eigenvalues (independent of Eigen's solvers)
// =============================================================================

/**
 * @brief All eigenvalues of a dense symmetric matrix by cyclic Jacobi sweeps.
 *
 * Deliberately implemented from scratch (rotations only, no external solver)
 * so it can serve as an independent check on certificates produced elsewhere
 * with Eigen. Returns eigenvalues sorted ascending.
 */
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd A, double tol = 1e-14,
                                              int max_sweeps = 100) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n)
        throw ValidationError("jacobi_eigenvalues: matrix must be square");
    if (((A - A.transpose()).cwiseAbs().maxCoeff()) > 1e-10 * (1.0 + A.cwiseAbs().maxCoeff()))
        throw ValidationError("jacobi_eigenvalues: matrix must be symmetric");
    A = 0.5 * (A + A.transpose().eval());

    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += A(p, q) * A(p, q);
        if (std::sqrt(off) <= tol * scale)
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                double apq = A(p, q);
                if (std::abs(apq) <= 1e-300)
                    continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        ev[static_cast<std::size_t>(i)] = A(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Largest eigenvalue via the Jacobi routine.
inline double jacobi_lambda_max(const Eigen::MatrixXd &A) { return jacobi_eigenvalues(A).back(); }

/// Smallest eigenvalue via the Jacobi routine.
inline double jacobi_lambda_min(const Eigen::MatrixXd &A) { return jacobi_eigenvalues(A).front(); }

// =============================================================================
// Wilson score interval
// =============================================================================

/**
 * @brief Wilson score interval for a binomial proportion.
 *
 * @param successes number of successes
 * @param trials    number of trials (> 0)
 * @param z         normal quantile (1.959964 for 95%)
 * @return (low, high)
 */
inline std::pair<double, double> wilson_interval(std::size_t successes, std::size_t trials,
                                                 double z = 1.959963984540054) {
    if (trials == 0)
        throw ValidationError("wilson_interval: trials must be > 0");
    double n = static_cast<double>(trials);
    double phat = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double centre = (phat + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Spectral radius of a small dense (possibly non-symmetric) matrix.
inline double spectral_radius(const Eigen::MatrixXd &M) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace fso::num
