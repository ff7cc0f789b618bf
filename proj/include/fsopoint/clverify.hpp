// Independent verification of a synthesized controller, exercising only the
// raw closed-loop dynamics (never the solver's own matrices):
//  - frequency sweep of the linearized disturbance-to-error transfer row,
//  - per-step dissipation-inequality spot checks along nonlinear simulations,
//  - matched-noise open/closed Monte-Carlo ensembles for variance reduction.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fsopoint/errors.hpp"
#include "fsopoint/noise.hpp"
#include "fsopoint/numerics.hpp"
#include "fsopoint/plant.hpp"
#include "fsopoint/turbulence.hpp"

namespace fso::clv {

// =============================================================================
// Closed loop
// =============================================================================

/// Closed-loop pairing of a plant and a state-feedback gain. Acl is always
/// recomputed from (A, B, K); nothing is trusted from the synthesis run.
struct ClosedLoop {
    plant::AugmentedPlant plant;
    Eigen::RowVector2d K;
    Eigen::Matrix2d Acl;
    double rho = 0.0; ///< spectral radius of Acl
};

inline ClosedLoop make_closed_loop(const plant::AugmentedPlant &pl,
                                   const Eigen::RowVector2d &K) {
    ClosedLoop cl;
    cl.plant = pl;
    cl.K = K;
    cl.Acl = pl.A - pl.B * K;
    cl.rho = num::spectral_radius(cl.Acl);
    return cl;
}

// =============================================================================
// Linear frequency sweep
// =============================================================================

namespace detail {

/// 2-norm of the row Ceff (e^{j om} I - Acl)^{-1} R at one frequency.
inline double transfer_norm(const ClosedLoop &cl, double om) {
    const std::complex<double> z(std::cos(om), std::sin(om));
    Eigen::Matrix2cd M = z * Eigen::Matrix2cd::Identity() - cl.Acl.cast<std::complex<double>>();
    Eigen::Matrix2cd Minv = M.inverse();
    Eigen::RowVector2cd row = cl.plant.Ceff().cast<std::complex<double>>() * Minv;
    Eigen::RowVectorXcd T = row * cl.plant.R.cast<std::complex<double>>();
    return T.norm();
}

} // namespace detail

/**
 * @brief Supremum over the unit circle of the linearized w -> y gain.
 *
 * Uniform grid on [0, pi] (the response is conjugate-symmetric) followed by
 * golden-section refinement around the grid maximum. Requires a Schur-stable
 * closed loop.
 */
inline double linear_gain_sweep(const ClosedLoop &cl, int n_points = 720) {
    if (n_points < 720)
        throw ValidationError("linear_gain_sweep: n_points must be >= 720");
    if (!(cl.rho < 1.0))
        throw ValidationError("linear_gain_sweep: closed loop is not Schur stable (rho = " +
                              std::to_string(cl.rho) + ")");
    const double pi = 3.14159265358979323846;
    double best = -1.0;
    int best_i = 0;
    for (int i = 0; i <= n_points; ++i) {
        double om = pi * static_cast<double>(i) / static_cast<double>(n_points);
        double g = detail::transfer_norm(cl, om);
        if (g > best) {
            best = g;
            best_i = i;
        }
    }
    const double h = pi / static_cast<double>(n_points);
    const double lo = std::max(0.0, h * (best_i - 1));
    const double hi = std::min(pi, h * (best_i + 1));
    auto [arg, val] = num::golden_max([&](double om) { return detail::transfer_norm(cl, om); },
                                      lo, hi, 1e-12);
    (void)arg;
    return std::max(best, val);
}

// =============================================================================
// Dissipation spot checks
// =============================================================================

/// Channel positivity policy inside the dissipation integrator.
enum class Positivity {
    Reflect, ///< reflect at the positivity floor (matches the simulator)
    None     ///< leave the state untouched; the drift is gated to 0 for x <= 0
};

struct DissipationOptions {
    int n_seeds = 1000;
    int n_steps = 10000;
    std::uint64_t seed0 = 20240801;
    double tol = 1e-9;                  ///< violation threshold on the step quantity
    Positivity positivity = Positivity::Reflect;
    bool zero_noise = false;            ///< w == 0 (origin-equilibrium check)
    std::optional<Eigen::Vector2d> x0;  ///< default [i0, 0]
};

struct DissipationReport {
    long long checked = 0;        ///< in-domain, non-reflected steps evaluated
    long long violations = 0;     ///< checked steps with quantity > tol
    long long out_of_domain = 0;  ///< steps excluded: x_p outside the Lipschitz domain
    long long reflections = 0;    ///< steps excluded: positivity reflection fired
    double worst_checked = -std::numeric_limits<double>::infinity(); ///< max quantity, checked steps
    double worst_overall = -std::numeric_limits<double>::infinity(); ///< max quantity, all steps
};

/**
 * @brief Count violations of the per-step dissipation inequality
 *        y^2 - eps^2 w'w + V(x+) - V(x) <= tol,  V(x) = x' P x,
 * along nonlinear closed-loop trajectories with u = -K x.
 *
 * Steps where the channel state sits outside the certified Lipschitz domain,
 * or where the positivity reflection altered the dynamics, are excluded from
 * the count and reported separately: the certificate is only claimed on the
 * domain, under the unmodified recursion. The drift is gated to zero at
 * x <= 0 so the origin is an exact equilibrium under zero noise.
 */
inline DissipationReport dissipation_check(const ClosedLoop &cl, const Eigen::Matrix2d &P,
                                           double eps, const DissipationOptions &opts = {}) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(P);
    if (!(es.eigenvalues()(0) > 0.0))
        throw ValidationError("dissipation_check: P must be positive definite");
    if (opts.n_seeds < 1 || opts.n_steps < 1)
        throw ValidationError("dissipation_check: n_seeds and n_steps must be >= 1");

    const plant::AugmentedPlant &pl = cl.plant;
    const turb::TurbulenceParams &tp = pl.tp;
    const Eigen::Index nw = pl.n_w();
    const double eps2 = eps * eps;
    const double ddt = tp.drift_dt();
    const double floor = tp.positivity_floor();

    DissipationReport rep;
    Eigen::Vector2d x0 = opts.x0.value_or(Eigen::Vector2d(tp.i0, 0.0));

    for (int s = 0; s < opts.n_seeds; ++s) {
        noise::NoiseSource src(opts.seed0 + static_cast<std::uint64_t>(s), 2);
        Eigen::Vector2d x = x0;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(nw);
        for (int k = 0; k < opts.n_steps; ++k) {
            if (!opts.zero_noise)
                for (Eigen::Index j = 0; j < nw; ++j)
                    w(j) = src.next_normal();
            const double u = -(cl.K * x)(0);
            const double phi = x(0) > 0.0 ? turb::drift(x(0), tp) * ddt : 0.0;
            Eigen::Vector2d xn = pl.A * x + pl.B * u + pl.R * w;
            xn(0) += phi;
            bool refl = false;
            if (opts.positivity == Positivity::Reflect && xn(0) < floor) {
                xn(0) = 2.0 * floor - xn(0);
                refl = true;
            }
            const double y = (pl.Ceff() * x)(0);
            const double lhs = y * y - eps2 * w.squaredNorm() +
                               (xn.transpose() * P * xn)(0) - (x.transpose() * P * x)(0);
            rep.worst_overall = std::max(rep.worst_overall, lhs);
            const bool in_dom = pl.in_domain(x(0));
            if (!in_dom)
                ++rep.out_of_domain;
            if (refl)
                ++rep.reflections;
            if (in_dom && !refl) {
                ++rep.checked;
                rep.worst_checked = std::max(rep.worst_checked, lhs);
                if (lhs > opts.tol)
                    ++rep.violations;
            }
            x = xn;
            if (!x.allFinite() || std::abs(x(0)) > 1e12 || std::abs(x(1)) > 1e12)
                break; // diverging loops (deliberately bad gains) stop early
        }
    }
    return rep;
}

// =============================================================================
// Matched-noise ensembles
// =============================================================================

struct StatsOptions {
    int n_seeds = 100;
    int n_steps = 10000;
    int burn_in = 1000;       ///< leading steps excluded from the variance
    std::uint64_t seed0 = 2026;
};

/// Per-seed result of one matched open/closed pair.
struct SeedStats {
    std::uint64_t seed = 0;
    double var_open = 0.0;
    double var_closed = 0.0;
    double max_abs_y_open = 0.0;
    double max_abs_y_closed = 0.0;
};

/// Ensemble verification report.
struct VerificationReport {
    double gain_freq = 0.0;       ///< filled by the caller (linear_gain_sweep)
    long long dissipation_violations = -1; ///< filled by the caller; -1 = not run
    double var_open = 0.0;        ///< mean over seeds of per-seed variances
    double var_closed = 0.0;
    double reduction = 0.0;       ///< 1 - var_closed / var_open
    double reduction_min = 0.0;   ///< worst per-seed reduction
    double max_abs_y_open = 0.0;  ///< max over the whole ensemble
    double max_abs_y_closed = 0.0;
    std::vector<SeedStats> per_seed;
};

namespace detail {

struct RunOut {
    double var = 0.0;
    double max_abs_y = 0.0;
};

/// Simulate the nonlinear loop under u = -K x for a fixed pre-drawn noise
/// table; returns the post-burn-in variance and peak |y|.
inline RunOut run_loop(const plant::AugmentedPlant &pl, const Eigen::RowVector2d &K,
                       const std::vector<Eigen::VectorXd> &wtab, int burn_in,
                       const Eigen::Vector2d &x0) {
    plant::PlantState st = plant::make_state(pl, x0(0), x0(1));
    RunOut out;
    double sum = 0.0, sumsq = 0.0;
    long long n = 0;
    for (std::size_t k = 0; k < wtab.size(); ++k) {
        const double u = -(K * st.x)(0);
        st = plant::plant_step(st, u, wtab[k], pl).state;
        if (static_cast<long long>(k) >= burn_in) {
            sum += st.y;
            sumsq += st.y * st.y;
            out.max_abs_y = std::max(out.max_abs_y, std::abs(st.y));
            ++n;
        }
    }
    if (n > 1) {
        const double mean = sum / static_cast<double>(n);
        out.var = std::max(0.0, (sumsq - static_cast<double>(n) * mean * mean) /
                                    static_cast<double>(n - 1));
    }
    return out;
}

} // namespace detail

/**
 * @brief Matched-noise open-loop (u = 0) vs closed-loop (u = -K x) ensembles.
 *
 * Both loops consume the identical pre-drawn noise table per seed, so the
 * controller is the only difference; K = 0 yields reduction = 0 exactly.
 */
inline VerificationReport closed_loop_stats(const ClosedLoop &cl, const StatsOptions &opts = {}) {
    if (opts.n_seeds < 100)
        throw ValidationError("closed_loop_stats: n_seeds must be >= 100");
    if (opts.n_steps <= opts.burn_in + 1)
        throw ValidationError("closed_loop_stats: n_steps must exceed burn_in + 1");
    const plant::AugmentedPlant &pl = cl.plant;
    const Eigen::Index nw = pl.n_w();
    const Eigen::Vector2d x0(pl.tp.i0, 0.0);
    const Eigen::RowVector2d K0 = Eigen::RowVector2d::Zero();

    VerificationReport rep;
    rep.per_seed.reserve(static_cast<std::size_t>(opts.n_seeds));
    double sum_vo = 0.0, sum_vc = 0.0;
    double red_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < opts.n_seeds; ++s) {
        const std::uint64_t seed = opts.seed0 + static_cast<std::uint64_t>(s);
        noise::NoiseSource chan(seed, 0), aper(seed, 1);
        std::vector<Eigen::VectorXd> wtab(static_cast<std::size_t>(opts.n_steps));
        for (auto &w : wtab) {
            w = Eigen::VectorXd(nw);
            w(0) = chan.next_normal();
            if (nw > 1)
                w(1) = aper.next_normal();
        }
        const auto open = detail::run_loop(pl, K0, wtab, opts.burn_in, x0);
        const auto closed = detail::run_loop(pl, cl.K, wtab, opts.burn_in, x0);
        SeedStats ss;
        ss.seed = seed;
        ss.var_open = open.var;
        ss.var_closed = closed.var;
        ss.max_abs_y_open = open.max_abs_y;
        ss.max_abs_y_closed = closed.max_abs_y;
        rep.per_seed.push_back(ss);
        sum_vo += open.var;
        sum_vc += closed.var;
        red_min = std::min(red_min, 1.0 - closed.var / open.var);
        rep.max_abs_y_open = std::max(rep.max_abs_y_open, open.max_abs_y);
        rep.max_abs_y_closed = std::max(rep.max_abs_y_closed, closed.max_abs_y);
    }
    rep.var_open = sum_vo / static_cast<double>(opts.n_seeds);
    rep.var_closed = sum_vc / static_cast<double>(opts.n_seeds);
    rep.reduction = 1.0 - rep.var_closed / rep.var_open;
    rep.reduction_min = red_min;
    return rep;
}

} // namespace fso::clv
