// Communication-performance metrics for the lognormal fading channel:
// outage probability, power margin (Chernoff approximation and the exact
// inverse), and average OOK bit-error rate via Gauss-Hermite quadrature, an
// adaptive-quadrature reference, and a Monte-Carlo cross-check.
//
// Conventions recorded in report metadata:
//  - SNR(dB) = 10 log10(eta^2 I0^2 / N0): electrical SNR at the mean
//    irradiance. Only this ratio enters the analytic BER.
//  - OOK detection: threshold at half the faded "one" level (perfect
//    channel-state knowledge per draw); noise std sqrt(N0/2).
//  - Q-function: standard Gaussian tail (with the 1/sqrt(2pi) normalization);
//    the unnormalized variant is available behind the q_norm switch and can
//    exceed 1 by design.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fsopoint/errors.hpp"
#include "fsopoint/noise.hpp"
#include "fsopoint/numerics.hpp"
#include "fsopoint/turbulence.hpp"

namespace fso::metrics {

// =============================================================================
// Types and conventions
// =============================================================================

/// Q-function normalization convention.
enum class QNorm {
    Standard,    ///< Q(x) = 0.5 erfc(x / sqrt 2)
    Unnormalized ///< integral of exp(-t^2/2) without 1/sqrt(2pi): sqrt(2pi) * Q
};

/// Link-budget parameters around the fading model.
struct LinkBudget {
    double sigma2 = 0.0380; ///< scintillation index
    double i0 = 1.0;        ///< mean irradiance
    double eta = 0.5;       ///< optical-to-electrical conversion coefficient
    double n0 = 1e-2;       ///< noise power spectral density

    void validate() const {
        if (!(sigma2 > 0.0) || !(i0 > 0.0) || !(eta > 0.0) || !(n0 > 0.0))
            throw ValidationError("LinkBudget: all parameters must be > 0");
    }
    double snr_db() const { return 10.0 * std::log10(eta * eta * i0 * i0 / n0); }
};

/// One metric curve for serialization.
struct MetricCurve {
    std::string metric;   ///< "outage" | "ber"
    std::string method;   ///< "closed-form" | "quadrature" | "gauss-hermite" | "monte-carlo"
    double sigma2 = 0.0;
    std::vector<double> axis_db;
    std::vector<double> values;
};

inline double q_tail(double x, QNorm qn = QNorm::Standard) {
    const double q = num::normal_q(x);
    return qn == QNorm::Standard ? q : q * std::sqrt(2.0 * M_PI);
}

// =============================================================================
// Outage probability and power margin
// =============================================================================

enum class OutageMethod { ClosedForm, Quadrature };

/**
 * @brief Probability that the irradiance falls below i0 / m.
 *
 * Closed form Phi((-ln m + sigma^2/2) / sigma); the quadrature path
 * integrates the lognormal density on the log axis (where it is a plain
 * Gaussian) and must agree to 1e-10 absolute.
 */
inline double outage_probability(double m, const turb::TurbulenceParams &p,
                                 OutageMethod method = OutageMethod::ClosedForm) {
    if (!(m > 0.0))
        throw ValidationError("outage_probability: margin must be > 0");
    const double sigma = std::sqrt(p.sigma2);
    const double zc = (-std::log(m) + 0.5 * p.sigma2) / sigma;
    if (method == OutageMethod::ClosedForm)
        return num::normal_cdf(zc);
    // ln I is Gaussian with mean ln i0 - sigma^2/2, std sigma; integrate its
    // density from -infinity (truncated at 14 sigma) to ln(i0/m).
    const double mu = std::log(p.i0) - 0.5 * p.sigma2;
    const double hi = std::log(p.i0 / m);
    const double lo = mu - 14.0 * sigma;
    if (hi <= lo)
        return 0.0;
    auto dens = [&](double v) { return num::normal_pdf((v - mu) / sigma) / sigma; };
    return num::adaptive_simpson(dens, lo, hi, 1e-13);
}

enum class MarginMethod { Chernoff, Exact };

/**
 * @brief Power margin needed to hold outage at p_o.
 *
 * Chernoff-style approximation m = exp(sqrt(-2 sigma^2 ln(2 p_o)) + sigma^2/2);
 * the exact method inverts the closed-form outage by bisection.
 */
inline double power_margin(double p_o, const turb::TurbulenceParams &p,
                           MarginMethod method = MarginMethod::Chernoff) {
    if (!(p_o > 0.0) || !(p_o < 0.5))
        throw ValidationError("power_margin: target outage must lie in (0, 0.5)");
    if (method == MarginMethod::Chernoff)
        return std::exp(std::sqrt(-2.0 * p.sigma2 * std::log(2.0 * p_o)) + 0.5 * p.sigma2);
    // Exact inverse: outage(m) is strictly decreasing in m.
    double lo = 1e-6, hi = 1.0;
    while (outage_probability(hi, p) > p_o && hi < 1e9)
        hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (outage_probability(mid, p) > p_o)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 1e-14 * hi)
            break;
    }
    return 0.5 * (lo + hi);
}

/// Decibel helpers for margins and SNR axes.
inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

// =============================================================================
// Bit-error rate
// =============================================================================

/**
 * @brief Average OOK BER over lognormal fading by Gauss-Hermite quadrature.
 *
 * With S = 10^(snr_db/10) = eta^2 i0^2 / N0, the conditional error rate is
 * Q(sqrt(S/2) * I/i0); averaging over I = i0 exp(sigma sqrt2 t - sigma^2/2)
 * with t Gauss-Hermite-distributed gives BER = (1/sqrt pi) sum w_i Q(arg_i).
 */
inline double ber_lognormal(double snr_db, const turb::TurbulenceParams &p, int quad_order = 32,
                            QNorm qn = QNorm::Standard) {
    if (quad_order < 8 || quad_order > 64)
        throw ValidationError("ber_lognormal: quadrature order must lie in [8, 64]");
    const double S = from_db(snr_db);
    const double amp = std::sqrt(0.5 * S);
    const double sigma = std::sqrt(p.sigma2);
    const num::GaussHermiteRule rule = num::gauss_hermite(quad_order);
    double acc = 0.0;
    for (int i = 0; i < quad_order; ++i) {
        const double ratio = std::exp(sigma * std::sqrt(2.0) * rule.nodes[static_cast<std::size_t>(i)] -
                                      0.5 * p.sigma2);
        acc += rule.weights[static_cast<std::size_t>(i)] * q_tail(amp * ratio, qn);
    }
    return acc / std::sqrt(M_PI);
}

/**
 * @brief Reference BER by adaptive quadrature on the Gaussian axis.
 *
 * Integrates phi(t) Q(sqrt(S/2) exp(sigma t - sigma^2/2)) dt over t in
 * [-12, 12]; used to cross-validate the Gauss-Hermite path to <= 1e-8
 * relative.
 */
inline double ber_reference(double snr_db, const turb::TurbulenceParams &p,
                            QNorm qn = QNorm::Standard) {
    const double S = from_db(snr_db);
    const double amp = std::sqrt(0.5 * S);
    const double sigma = std::sqrt(p.sigma2);
    auto f = [&](double t) {
        return num::normal_pdf(t) * q_tail(amp * std::exp(sigma * t - 0.5 * p.sigma2), qn);
    };
    return num::adaptive_simpson(f, -12.0, 12.0, 1e-15);
}

/// Monte-Carlo OOK estimate with a Wilson 95% interval.
struct BerEstimate {
    double ber = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    bool width_warning = false; ///< fewer than 10 observed errors
};

/**
 * @brief Simulate equiprobable OOK bits over i.i.d. lognormal fades.
 *
 * Received sample r = b * eta * I + n with n ~ N(0, N0/2); threshold at
 * eta*I/2 (per-draw channel knowledge). Only the SNR ratio matters, so the
 * simulation normalizes eta = i0 = 1, N0 = 1/S.
 */
inline BerEstimate ber_monte_carlo(double snr_db, const turb::TurbulenceParams &p,
                                   std::uint64_t n_bits, std::uint64_t seed,
                                   QNorm qn = QNorm::Standard) {
    if (n_bits < 100000)
        throw ValidationError("ber_monte_carlo: n_bits must be >= 1e5");
    if (qn != QNorm::Standard)
        throw ValidationError("ber_monte_carlo: only the standard Q convention is simulable "
                              "(probabilities)");
    const double S = from_db(snr_db);
    const double sigma = std::sqrt(p.sigma2);
    const double sigma_n = std::sqrt(0.5 / S);
    noise::NoiseSource fade(seed, 5), bits(seed, 6), awgn(seed, 7);
    std::uint64_t errors = 0;
    for (std::uint64_t i = 0; i < n_bits; ++i) {
        const double I = std::exp(sigma * fade.next_normal() - 0.5 * p.sigma2);
        const bool one = bits.next_uniform() < 0.5;
        const double r = (one ? I : 0.0) + sigma_n * awgn.next_normal();
        const bool decided_one = r > 0.5 * I;
        if (decided_one != one)
            ++errors;
    }
    BerEstimate est;
    est.errors = errors;
    est.bits = n_bits;
    est.ber = static_cast<double>(errors) / static_cast<double>(n_bits);
    auto [lo, hi] = num::wilson_interval(errors, n_bits);
    est.ci_lo = lo;
    est.ci_hi = hi;
    est.width_warning = errors < 10;
    return est;
}

// =============================================================================
// Curve sweeps
// =============================================================================

enum class Metric { Outage, Ber };

/**
 * @brief Evaluate a metric over an axis for each parameter set.
 *
 * Outage: axis is margin in dB. BER: axis is SNR in dB (Gauss-Hermite path).
 */
inline std::vector<MetricCurve> sweep(Metric metric, const std::vector<double> &axis_db,
                                      const std::vector<turb::TurbulenceParams> &params,
                                      int quad_order = 32, QNorm qn = QNorm::Standard) {
    if (axis_db.empty())
        throw ValidationError("sweep: axis range must be nonempty");
    if (params.empty())
        throw ValidationError("sweep: parameter list must be nonempty");
    std::vector<MetricCurve> out;
    out.reserve(params.size());
    for (const auto &p : params) {
        MetricCurve c;
        c.sigma2 = p.sigma2;
        c.axis_db = axis_db;
        c.values.reserve(axis_db.size());
        if (metric == Metric::Outage) {
            c.metric = "outage";
            c.method = "closed-form";
            for (double db : axis_db)
                c.values.push_back(outage_probability(from_db(db), p));
        } else {
            c.metric = "ber";
            c.method = "gauss-hermite";
            for (double db : axis_db)
                c.values.push_back(ber_lognormal(db, p, quad_order, qn));
        }
        out.push_back(std::move(c));
    }
    return out;
}

/**
 * @brief Horizontal gap (dB) between two curves at a target level.
 *
 * Linear interpolation on the axis of the level crossing; both curves must
 * be monotone nonincreasing and bracket the level. Returns axis_a - axis_b
 * at the crossing (positive when curve a needs more dB).
 */
inline double horizontal_gap_db(const MetricCurve &a, const MetricCurve &b, double level) {
    auto crossing = [&](const MetricCurve &c) {
        for (std::size_t i = 1; i < c.values.size(); ++i) {
            const double v0 = c.values[i - 1], v1 = c.values[i];
            if ((v0 >= level && v1 <= level) || (v0 <= level && v1 >= level)) {
                if (v0 == v1)
                    return c.axis_db[i - 1];
                const double t = (level - v0) / (v1 - v0);
                return c.axis_db[i - 1] + t * (c.axis_db[i] - c.axis_db[i - 1]);
            }
        }
        throw DomainError("horizontal_gap_db: curve never crosses the requested level");
    };
    return crossing(a) - crossing(b);
}

} // namespace fso::metrics
