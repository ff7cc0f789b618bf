// Lognormal optical channel: stationary PDF, mean-reverting log-drift
// recursion, parameter estimation from samples, and histogram fit reporting.
//
// Model summary. The received irradiance I under weak scintillation is
// lognormal:
//   p(I) = 1/sqrt(2 pi s2) * 1/I * exp( -(ln(I/I0) + s2/2)^2 / (2 s2) ),
// i.e. ln I ~ N(ln I0 - s2/2, s2), so that E[I] = I0. The channel state is
// simulated as a discrete-time mean-reverting process
//   x+ = a_p x + phi(x) dt + b_p u + r_p w,     r_p = sqrt(K dt),
//   phi(x) = -K/(2 s2 x) * ( ln(x/I0) + lambda ),
// whose continuous-time limit is an Ornstein-Uhlenbeck process in ln x.
// The anchor lambda selects the stationary law:
//   lambda = 1.5 s2  ("stationary", default): stationary ln x matches the
//            PDF above exactly (mean-log = ln I0 - s2/2, variance s2).
//   lambda = 0       ("paper"): the literal printed drift; its stationary
//            mean-log is ln I0 + s2 (E[I] = I0 e^{1.5 s2}), kept as a
//            comparison variant.
// See README "Model conventions" for the derivation sketch and measurements.
#pragma once

#include <cmath>
#include <limits>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fsopoint/errors.hpp"
#include "fsopoint/noise.hpp"
#include "fsopoint/numerics.hpp"

namespace fso::turb {

// =============================================================================
// Parameters and state
// =============================================================================

/// How the drift term enters the recursion.
enum class DriftScaling {
    Dt,  ///< x+ += phi(x) * dt (default; stationary variance independent of dt)
    None ///< x+ += phi(x) (literal printed recursion)
};

/// Which stationary law the drift is anchored to (see file header).
enum class DriftAnchor {
    Stationary, ///< lambda = 1.5 s2: stationary law equals the lognormal PDF
    Paper       ///< lambda = 0: literal drift
};

/**
 * @brief Scintillation channel parameters.
 *
 * Invariants: sigma2 > 0, i0 > 0, tau_c > 0, 0 < dt < tau_c. The
 * weak-turbulence regime flag is sigma2 <= 0.1.
 */
struct TurbulenceParams {
    double sigma2 = 0.0380; ///< scintillation index (log-irradiance variance)
    double i0 = 1.0;        ///< turbulence-free irradiance (normalized)
    double tau_c = 0.1;     ///< correlation time [s]
    double dt = 1e-3;       ///< sampling time [s]
    double a_p = 1.0;       ///< state coefficient
    double b_p = 1.0;       ///< control gain
    double c_p = 1.0;       ///< beam-position output gain
    DriftScaling drift_scaling = DriftScaling::Dt;
    DriftAnchor drift_anchor = DriftAnchor::Stationary;

    void validate() const {
        if (!(sigma2 > 0.0))
            throw ValidationError("TurbulenceParams: sigma2 must be > 0");
        if (!(i0 > 0.0))
            throw ValidationError("TurbulenceParams: i0 must be > 0");
        if (!(tau_c > 0.0))
            throw ValidationError("TurbulenceParams: tau_c must be > 0");
        if (!(dt > 0.0))
            throw ValidationError("TurbulenceParams: dt must be > 0");
        if (!(dt < tau_c))
            throw ValidationError("TurbulenceParams: dt must be < tau_c "
                                  "(resolve the correlation structure)");
    }

    /// Weak-turbulence regime indicator (sigma2 in (0, 0.1]).
    bool weak_regime() const { return sigma2 > 0.0 && sigma2 <= 0.1; }

    /// Drift anchor offset lambda (see file header).
    double anchor_lambda() const {
        return drift_anchor == DriftAnchor::Stationary ? 1.5 * sigma2 : 0.0;
    }

    /// Effective multiplier the drift term carries in the recursion.
    double drift_dt() const { return drift_scaling == DriftScaling::Dt ? dt : 1.0; }

    /// Positivity floor for the reflection policy.
    double positivity_floor() const { return 1e-6 * i0; }
};

/// Channel state: strictly positive intensity and the beam position it maps to.
struct ChannelState {
    double x_p = 1.0;   ///< channel state (normalized intensity, > 0)
    double theta = 1.0; ///< transmitter beam position, theta = c_p * x_p
};

// =============================================================================
// Core functions
// =============================================================================

/**
 * @brief Lognormal irradiance density p(i).
 *
 * p(i) = 1/sqrt(2 pi s2) * 1/i * exp(-(ln(i/I0)+s2/2)^2/(2 s2));
 * integrates to 1 on (0, inf) and has mean I0.
 */
inline double lognormal_pdf(double i, const TurbulenceParams &p) {
    p.validate();
    if (!(i > 0.0))
        throw DomainError("lognormal_pdf: intensity must be > 0");
    double s2 = p.sigma2;
    double z = std::log(i / p.i0) + 0.5 * s2;
    return 1.0 / std::sqrt(2.0 * M_PI * s2) / i * std::exp(-z * z / (2.0 * s2));
}

/// Diffusion strength K = 2 I0^2 exp(s2) (exp(s2) - 1) / tau_c.
inline double k_coefficient(const TurbulenceParams &p) {
    p.validate();
    return 2.0 * p.i0 * p.i0 * std::exp(p.sigma2) * std::expm1(p.sigma2) / p.tau_c;
}

/// Noise gain r_p = sqrt(K dt).
inline double r_p(const TurbulenceParams &p) { return std::sqrt(k_coefficient(p) * p.dt); }

/**
 * @brief Mean-reverting drift phi(x) = -K/(2 s2 x) * (ln(x/I0) + lambda).
 *
 * lambda is 0 for the paper anchor and 1.5*sigma2 for the stationary anchor
 * (see file header). Strictly positive x required; never clamped silently.
 */
inline double drift(double x, const TurbulenceParams &p) {
    if (!(x > 0.0))
        throw DomainError("drift: state must be > 0 (log drift is singular at 0)");
    double k = k_coefficient(p);
    return -k / (2.0 * p.sigma2 * x) * (std::log(x / p.i0) + p.anchor_lambda());
}

/// Result of one channel step: next state plus whether the positivity
/// reflection fired.
struct ChannelStepResult {
    ChannelState state;
    bool reflected = false;
};

/**
 * @brief One step of the channel recursion with the positivity policy.
 *
 * x+ = a_p x + phi(x)*drift_dt + b_p u + r_p w; if x+ falls below the floor
 * x_f = 1e-6*I0 it is reflected: x+ <- 2 x_f - x+. Non-finite results throw.
 */
inline ChannelStepResult channel_step(const ChannelState &s, double u_p, double w_p,
                                      const TurbulenceParams &p) {
    if (!(s.x_p > 0.0))
        throw SimulationError("channel_step: state must be > 0");
    double xn = p.a_p * s.x_p + drift(s.x_p, p) * p.drift_dt() + p.b_p * u_p + r_p(p) * w_p;
    bool refl = false;
    double floor = p.positivity_floor();
    if (xn < floor) {
        xn = 2.0 * floor - xn;
        refl = true;
    }
    if (!std::isfinite(xn))
        throw SimulationError("channel_step: non-finite state produced");
    return {ChannelState{xn, p.c_p * xn}, refl};
}

// =============================================================================
// Trajectory simulation
// =============================================================================

/// Uncontrolled channel trajectory record.
struct ChannelTrajectory {
    std::vector<double> x_p;   ///< states x_0 .. x_{n}
    std::vector<double> w_p;   ///< noise samples used for steps 0 .. n-1
    std::size_t reflections = 0;
};

/**
 * @brief Simulate n steps of the uncontrolled channel (u = 0).
 *
 * Noise is consumed from `src` in step order. The trajectory stores the
 * visited states including the initial one.
 */
inline ChannelTrajectory simulate_channel(const TurbulenceParams &p, double x0, std::size_t n,
                                          noise::NoiseSource &src) {
    p.validate();
    if (!(x0 > 0.0))
        throw ValidationError("simulate_channel: x0 must be > 0");
    ChannelTrajectory tr;
    tr.x_p.reserve(n + 1);
    tr.w_p.reserve(n);
    ChannelState s{x0, p.c_p * x0};
    tr.x_p.push_back(s.x_p);
    // Step kernel inlined: drift() revalidates params per call, far too slow
    // for 1e6-step runs; constants are hoisted here instead.
    const double k = k_coefficient(p);
    const double rp = r_p(p);
    const double lam = p.anchor_lambda();
    const double ddt = p.drift_dt();
    const double floor = p.positivity_floor();
    const double cdrift = -k / (2.0 * p.sigma2) * ddt;
    for (std::size_t i = 0; i < n; ++i) {
        double w = src.next_normal();
        double x = s.x_p;
        double xn = p.a_p * x + cdrift / x * (std::log(x / p.i0) + lam) + rp * w;
        if (xn < floor) {
            xn = 2.0 * floor - xn;
            ++tr.reflections;
        }
        if (!std::isfinite(xn))
            throw SimulationError("simulate_channel: non-finite state at step " +
                                  std::to_string(i));
        s.x_p = xn;
        tr.x_p.push_back(xn);
        tr.w_p.push_back(w);
    }
    return tr;
}

// =============================================================================
// Estimation and goodness of fit
// =============================================================================

/**
 * @brief Log-moment parameter estimates from positive samples.
 *
 * sigma2_hat = sample variance of ln(samples) (unbiased);
 * i0_hat = exp(mean(ln samples) + sigma2_hat/2), consistent with the PDF's
 * parameterization (mean-log = ln I0 - s2/2).
 */
struct LognormalEstimate {
    double sigma2_hat = 0.0;
    double i0_hat = 0.0;
};

inline LognormalEstimate estimate_lognormal(const std::vector<double> &samples) {
    if (samples.size() < 100)
        throw ValidationError("estimate_lognormal: need at least 100 samples");
    double mean = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i] > 0.0))
            throw ValidationError("estimate_lognormal: non-positive sample at index " +
                                  std::to_string(i));
        mean += std::log(samples[i]);
    }
    mean /= static_cast<double>(samples.size());
    double ss = 0.0;
    for (double v : samples) {
        double d = std::log(v) - mean;
        ss += d * d;
    }
    double var = ss / static_cast<double>(samples.size() - 1);
    return {var, std::exp(mean + 0.5 * var)};
}

/// Density histogram over [min, max] of the samples.
struct Histogram {
    std::vector<double> edges;   ///< bin edges, size bins+1
    std::vector<double> density; ///< normalized density per bin
    std::vector<std::size_t> counts;
    std::size_t total = 0;
};

inline Histogram histogram(const std::vector<double> &samples, std::size_t bins) {
    if (bins < 10)
        throw ValidationError("histogram: need at least 10 bins");
    if (samples.empty())
        throw ValidationError("histogram: empty sample set");
    double lo = samples[0], hi = samples[0];
    for (double v : samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo))
        throw ValidationError("histogram: degenerate sample range");
    Histogram h;
    h.edges.resize(bins + 1);
    h.counts.assign(bins, 0);
    h.density.assign(bins, 0.0);
    for (std::size_t i = 0; i <= bins; ++i)
        h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    for (double v : samples) {
        auto idx = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
        if (idx >= bins)
            idx = bins - 1;
        ++h.counts[idx];
    }
    h.total = samples.size();
    double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i)
        h.density[i] =
            static_cast<double>(h.counts[i]) / (static_cast<double>(h.total) * width);
    return h;
}

/**
 * @brief Chi-square goodness of fit of a histogram against the lognormal PDF.
 *
 * Expected bin probabilities come from the Gaussian CDF of ln(i) under the
 * given parameters. Bins with expected count < 5 are excluded (counted in
 * `bins_excluded`); dof = used bins - 1 - 2 (two parameters estimated from
 * the data). Accepted when chi2/dof < 1.5.
 *
 * Note on correlated inputs: a chi-square on serially correlated trajectory
 * samples is mis-calibrated; callers thin to roughly independent samples
 * first (stride ~ tau_c/dt). See README "Statistics conventions".
 */
struct FitReport {
    double chi2 = 0.0;
    std::size_t dof = 0;
    double chi2_per_dof = 0.0;
    std::size_t bins_used = 0;
    std::size_t bins_excluded = 0;
    bool accepted = false;
};

inline FitReport fit_report(const Histogram &h, const TurbulenceParams &p) {
    p.validate();
    const double mu = std::log(p.i0) - 0.5 * p.sigma2;
    const double sd = std::sqrt(p.sigma2);
    FitReport rep;
    double chi2 = 0.0;
    std::size_t used = 0, excluded = 0;
    for (std::size_t i = 0; i + 1 < h.edges.size(); ++i) {
        double a = h.edges[i], b = h.edges[i + 1];
        if (!(a > 0.0))
            a = std::numeric_limits<double>::min();
        double prob = num::normal_cdf((std::log(b) - mu) / sd) -
                      num::normal_cdf((std::log(a) - mu) / sd);
        double expected = prob * static_cast<double>(h.total);
        if (expected < 5.0) {
            ++excluded;
            continue;
        }
        double diff = static_cast<double>(h.counts[i]) - expected;
        chi2 += diff * diff / expected;
        ++used;
    }
    if (used < 4)
        throw ValidationError("fit_report: too few usable bins for a chi-square fit");
    rep.chi2 = chi2;
    rep.bins_used = used;
    rep.bins_excluded = excluded;
    rep.dof = used - 1 - 2;
    rep.chi2_per_dof = chi2 / static_cast<double>(rep.dof);
    rep.accepted = rep.chi2_per_dof < 1.5;
    return rep;
}

/**
 * @brief Sample autocorrelation time by exponential fit.
 *
 * Computes the empirical autocorrelation of the series at lags 1..max_lag
 * and fits exp(-lag*dt/tau) by least squares on the log of the positive
 * head of the curve; returns tau in seconds.
 */
inline double autocorrelation_time(const std::vector<double> &x, double dt,
                                   std::size_t max_lag = 400) {
    if (x.size() < 10 * max_lag)
        throw ValidationError("autocorrelation_time: series too short");
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x)
        var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    // Least squares of ln rho(lag) = -lag*dt/tau over the head of the curve.
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i)
            acc += (x[i] - mean) * (x[i + lag] - mean);
        double rho = acc / (static_cast<double>(n - lag) * var);
        if (rho < 0.05)
            break; // fit only the reliable exponential head
        double t = static_cast<double>(lag) * dt;
        sxx += t * t;
        sxy += t * std::log(rho);
    }
    if (sxx == 0.0)
        throw SimulationError("autocorrelation_time: no usable autocorrelation head");
    return -sxx / sxy;
}

} // namespace fso::turb
