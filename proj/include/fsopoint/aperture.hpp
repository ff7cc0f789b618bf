// Receiving-aperture displacement model: trapped Brownian motion discretized
// to a stationary AR(1) recursion
//   x+ = a_l x + r_l w,   alpha = c_l x,
// with a_l = 1 - k1*dT/gamma1 from the overdamped friction/stiffness pair.
#pragma once

#include <cmath>
#include <limits>
#include <cstddef>
#include <string>
#include <vector>

#include "fsopoint/errors.hpp"
#include "fsopoint/noise.hpp"

namespace fso::apert {

/// Noise-gain convention for the physics constructor (see README):
/// Physical = sqrt(2*(kbt/gamma1)*dT) (consistent overdamped discretization),
/// Paper    = sqrt(2*kbt*gamma1) (literal printed formula, inconsistent units).
enum class ApertureNoise { Physical, Paper };

/**
 * @brief AR(1) aperture parameters.
 *
 * Constructed either directly from (a_l, r_l, c_l) or from the physical
 * friction/stiffness/thermal quantities via aperture_params_from_physics.
 * |a_l| < 1 is required for a stationary variance; a_l == 1 (zero stiffness,
 * pure random walk) is permitted but flagged non-stationary.
 */
struct ApertureParams {
    double a_l = 0.98;
    double r_l = 0.099498743710662; ///< default: stationary std 0.5 at a_l=0.98
    double c_l = 1.0;
    bool non_stationary = false; ///< set when a_l == 1 (random walk)

    void validate() const {
        if (std::abs(a_l) > 1.0)
            throw ValidationError("ApertureParams: |a_l| must be <= 1 (stability)");
        if (!(r_l >= 0.0))
            throw ValidationError("ApertureParams: r_l must be >= 0");
    }

    /// Stationary variance r_l^2 / (1 - a_l^2); infinite for |a_l| = 1.
    double stationary_var() const {
        if (std::abs(a_l) >= 1.0)
            return std::numeric_limits<double>::infinity();
        return r_l * r_l / (1.0 - a_l * a_l);
    }
};

/// Aperture state: source position and the measured output it maps to.
struct ApertureState {
    double x_l = 0.0;   ///< source position (mm)
    double alpha = 0.0; ///< measured aperture position, alpha = c_l * x_l
};

/**
 * @brief Map physical trap parameters to AR(1) coefficients.
 *
 * a_l = 1 - k1*dT/gamma1; r_l per the ApertureNoise convention; c_l = 1.
 * k1 = 0 yields a_l = 1 (random walk) which is allowed but flagged;
 * |a_l| > 1 is rejected.
 */
inline ApertureParams aperture_params_from_physics(double gamma1, double k1, double kbt,
                                                   double dT,
                                                   ApertureNoise conv = ApertureNoise::Physical) {
    if (!(gamma1 > 0.0))
        throw ValidationError("aperture_params_from_physics: gamma1 must be > 0");
    if (!(k1 >= 0.0))
        throw ValidationError("aperture_params_from_physics: k1 must be >= 0");
    if (!(kbt > 0.0))
        throw ValidationError("aperture_params_from_physics: kbt must be > 0");
    if (!(dT > 0.0))
        throw ValidationError("aperture_params_from_physics: dT must be > 0");
    ApertureParams p;
    p.a_l = 1.0 - k1 * dT / gamma1;
    if (std::abs(p.a_l) > 1.0)
        throw ValidationError("aperture_params_from_physics: |1 - k1*dT/gamma1| > 1, unstable "
                              "discretization (reduce dT or stiffness)");
    p.non_stationary = (p.a_l == 1.0);
    p.r_l = conv == ApertureNoise::Physical ? std::sqrt(2.0 * (kbt / gamma1) * dT)
                                            : std::sqrt(2.0 * kbt * gamma1);
    p.c_l = 1.0;
    return p;
}

/// One AR(1) step: x+ = a_l x + r_l w.
inline ApertureState aperture_step(const ApertureState &s, double w_l, const ApertureParams &p) {
    double xn = p.a_l * s.x_l + p.r_l * w_l;
    if (!std::isfinite(xn))
        throw SimulationError("aperture_step: non-finite state produced");
    return {xn, p.c_l * xn};
}

/// Aperture trajectory record.
struct ApertureTrajectory {
    std::vector<double> x_l;
    std::vector<double> w_l;
};

/// Simulate n steps from x0, consuming noise from src in step order.
inline ApertureTrajectory simulate_aperture(const ApertureParams &p, double x0, std::size_t n,
                                            noise::NoiseSource &src) {
    p.validate();
    ApertureTrajectory tr;
    tr.x_l.reserve(n + 1);
    tr.w_l.reserve(n);
    ApertureState s{x0, p.c_l * x0};
    tr.x_l.push_back(s.x_l);
    for (std::size_t i = 0; i < n; ++i) {
        double w = src.next_normal();
        s = aperture_step(s, w, p);
        tr.x_l.push_back(s.x_l);
        tr.w_l.push_back(w);
    }
    return tr;
}

} // namespace fso::apert
