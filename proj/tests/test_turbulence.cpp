// Unit tests for the lognormal channel model: PDF values and integrals, the
// diffusion coefficient, both drift anchors, stepping with the positivity
// policy, trajectory statistics, estimation, goodness of fit, and the
// autocorrelation-time estimator.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fsopoint/errors.hpp"
#include "fsopoint/noise.hpp"
#include "fsopoint/numerics.hpp"
#include "fsopoint/turbulence.hpp"

using namespace fso;

namespace {
turb::TurbulenceParams weak_defaults() {
    turb::TurbulenceParams p; // sigma2 = 0.0380, i0 = 1, tau_c = 0.1, dt = 1e-3
    return p;
}
} // namespace

// =============================================================================
// Densities and coefficients
// =============================================================================

TEST_CASE("lognormal pdf reference value, normalization, and mean") {
    turb::TurbulenceParams p = weak_defaults();
    p.sigma2 = 0.04;
    // 1/(0.2 sqrt(2 pi)) * exp(-0.04/8) at i = i0 = 1.
    CHECK(turb::lognormal_pdf(1.0, p) == doctest::Approx(1.9847625).epsilon(1e-6));

    p.sigma2 = 0.0380;
    auto dens = [&](double i) { return turb::lognormal_pdf(i, p); };
    CHECK(num::adaptive_simpson(dens, 1e-8, 8.0, 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
    auto mean = [&](double i) { return i * turb::lognormal_pdf(i, p); };
    CHECK(num::adaptive_simpson(mean, 1e-8, 8.0, 1e-12) == doctest::Approx(p.i0).epsilon(1e-9));

    CHECK_THROWS_AS((void)turb::lognormal_pdf(0.0, p), DomainError);
    CHECK_THROWS_AS((void)turb::lognormal_pdf(-1.0, p), DomainError);
}

TEST_CASE("diffusion coefficient and noise gain at the weak-turbulence point") {
    turb::TurbulenceParams p = weak_defaults();
    CHECK(turb::k_coefficient(p) == doctest::Approx(0.804624).epsilon(1e-5));
    CHECK(turb::r_p(p) == doctest::Approx(0.0283659).epsilon(1e-5));
    // K scales as i0^2 and 1/tau_c.
    p.i0 = 2.0;
    CHECK(turb::k_coefficient(p) == doctest::Approx(4.0 * 0.804624).epsilon(1e-5));
    p.i0 = 1.0;
    p.tau_c = 0.2;
    CHECK(turb::k_coefficient(p) == doctest::Approx(0.5 * 0.804624).epsilon(1e-5));
}

TEST_CASE("drift anchors: literal zero at i0, stationary zero at the shifted point") {
    turb::TurbulenceParams p = weak_defaults();
    p.drift_anchor = turb::DriftAnchor::Paper;
    CHECK(p.anchor_lambda() == 0.0);
    CHECK(turb::drift(p.i0, p) == 0.0);
    CHECK(turb::drift(p.i0 * std::exp(1.0), p) == doctest::Approx(-3.8948).epsilon(2e-4));

    p.drift_anchor = turb::DriftAnchor::Stationary;
    CHECK(p.anchor_lambda() == doctest::Approx(1.5 * p.sigma2).epsilon(1e-15));
    const double x_zero = p.i0 * std::exp(-1.5 * p.sigma2);
    CHECK(std::abs(turb::drift(x_zero, p)) < 1e-10);
    // Mean reversion: positive below the zero, negative above it.
    CHECK(turb::drift(0.5 * x_zero, p) > 0.0);
    CHECK(turb::drift(2.0 * x_zero, p) < 0.0);

    CHECK_THROWS_AS((void)turb::drift(0.0, p), DomainError);
    CHECK_THROWS_AS((void)turb::drift(-0.3, p), DomainError);
}

TEST_CASE("parameter validation and regime flags") {
    turb::TurbulenceParams p = weak_defaults();
    CHECK(p.weak_regime());
    p.sigma2 = 0.2;
    CHECK_FALSE(p.weak_regime());
    p.sigma2 = -0.1;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = weak_defaults();
    p.dt = p.tau_c; // must resolve the correlation structure
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p = weak_defaults();
    p.drift_scaling = turb::DriftScaling::None;
    CHECK(p.drift_dt() == 1.0);
    p.drift_scaling = turb::DriftScaling::Dt;
    CHECK(p.drift_dt() == p.dt);
}

// =============================================================================
// Stepping
// =============================================================================

TEST_CASE("channel step applies control and reflects at the positivity floor") {
    turb::TurbulenceParams p = weak_defaults();
    turb::ChannelState s{1.0, 1.0};
    // Unforced small step stays near 1.
    auto r0 = turb::channel_step(s, 0.0, 0.0, p);
    CHECK_FALSE(r0.reflected);
    CHECK(r0.state.x_p == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(r0.state.theta == doctest::Approx(p.c_p * r0.state.x_p).epsilon(1e-15));
    // A large negative control drives past the floor and reflects back above it.
    auto r1 = turb::channel_step(s, -2.0, 0.0, p);
    CHECK(r1.reflected);
    CHECK(r1.state.x_p >= p.positivity_floor());
    CHECK_THROWS_AS((void)turb::channel_step(turb::ChannelState{0.0, 0.0}, 0.0, 0.0, p),
                    SimulationError);
}

TEST_CASE("simulate_channel agrees with repeated channel_step") {
    turb::TurbulenceParams p = weak_defaults();
    noise::NoiseSource s1(11, 0), s2(11, 0);
    auto tr = turb::simulate_channel(p, 1.0, 200, s1);
    turb::ChannelState st{1.0, 1.0};
    for (std::size_t k = 0; k < 200; ++k) {
        st = turb::channel_step(st, 0.0, s2.next_normal(), p).state;
        REQUIRE(tr.x_p[k + 1] == doctest::Approx(st.x_p).epsilon(1e-9));
    }
    CHECK_THROWS_AS((void)turb::simulate_channel(p, 0.0, 10, s1), ValidationError);
}

TEST_CASE("trajectory statistics reproduce the stationary lognormal") {
    turb::TurbulenceParams p = weak_defaults();
    noise::NoiseSource src(12345, 0);
    auto tr = turb::simulate_channel(p, 1.0, 500000, src);
    CHECK(tr.reflections == 0);

    // Thin to roughly independent samples (stride ~ tau_c / dt).
    const std::size_t stride = 100;
    std::vector<double> thin;
    for (std::size_t i = 0; i < tr.x_p.size(); i += stride)
        thin.push_back(tr.x_p[i]);
    auto est = turb::estimate_lognormal(thin);
    CHECK(est.sigma2_hat == doctest::Approx(p.sigma2).epsilon(0.10));
    CHECK(est.i0_hat == doctest::Approx(p.i0).epsilon(0.02));

    double mean = 0.0;
    for (double v : tr.x_p)
        mean += v;
    mean /= static_cast<double>(tr.x_p.size());
    CHECK(mean == doctest::Approx(p.i0).epsilon(0.02));

    auto fit = turb::fit_report(turb::histogram(thin, 40), p);
    CHECK(fit.chi2_per_dof < 1.5);
    CHECK(fit.accepted);
    CHECK(fit.dof == fit.bins_used - 3);
}

// =============================================================================
// Estimation and fit machinery
// =============================================================================

TEST_CASE("estimator recovers parameters from exact lognormal draws") {
    const double sigma2 = 0.05, i0 = 1.7;
    noise::NoiseSource src(555, 9);
    std::vector<double> samples;
    samples.reserve(50000);
    for (int i = 0; i < 50000; ++i)
        samples.push_back(i0 * std::exp(std::sqrt(sigma2) * src.next_normal() - 0.5 * sigma2));
    auto est = turb::estimate_lognormal(samples);
    CHECK(est.sigma2_hat == doctest::Approx(sigma2).epsilon(0.03));
    CHECK(est.i0_hat == doctest::Approx(i0).epsilon(0.01));

    CHECK_THROWS_AS((void)turb::estimate_lognormal(std::vector<double>(50, 1.0)),
                    ValidationError);
    std::vector<double> bad(200, 1.0);
    bad[17] = 0.0;
    CHECK_THROWS_AS((void)turb::estimate_lognormal(bad), ValidationError);
}

TEST_CASE("histogram partitions the samples and normalizes the density") {
    std::vector<double> s;
    noise::NoiseSource src(8, 8);
    for (int i = 0; i < 5000; ++i)
        s.push_back(src.next_uniform());
    auto h = turb::histogram(s, 25);
    REQUIRE(h.edges.size() == 26);
    std::size_t total = 0;
    double mass = 0.0;
    for (std::size_t i = 0; i < 25; ++i) {
        total += h.counts[i];
        mass += h.density[i] * (h.edges[i + 1] - h.edges[i]);
    }
    CHECK(total == s.size());
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)turb::histogram(s, 5), ValidationError);
    CHECK_THROWS_AS((void)turb::histogram({}, 20), ValidationError);
    CHECK_THROWS_AS((void)turb::histogram(std::vector<double>(100, 2.0), 20), ValidationError);
}

TEST_CASE("chi-square rejects samples from the wrong distribution") {
    turb::TurbulenceParams p = weak_defaults();
    // Uniform(0.5, 1.5) is visibly not lognormal(0.038).
    std::vector<double> s;
    noise::NoiseSource src(31, 0);
    for (int i = 0; i < 20000; ++i)
        s.push_back(0.5 + src.next_uniform());
    auto fit = turb::fit_report(turb::histogram(s, 40), p);
    CHECK(fit.chi2_per_dof > 1.5);
    CHECK_FALSE(fit.accepted);
}

TEST_CASE("autocorrelation time recovers the AR(1) constant") {
    // x+ = a x + w with a = exp(-dt/tau): correlation time tau by construction.
    const double tau = 0.05, dt = 1e-3;
    const double a = std::exp(-dt / tau);
    noise::NoiseSource src(77, 0);
    std::vector<double> x;
    x.reserve(100000);
    double v = 0.0;
    for (int i = 0; i < 100000; ++i) {
        v = a * v + src.next_normal();
        x.push_back(v);
    }
    double tau_hat = turb::autocorrelation_time(x, dt);
    CHECK(tau_hat == doctest::Approx(tau).epsilon(0.25));
    CHECK_THROWS_AS((void)turb::autocorrelation_time(std::vector<double>(100, 0.0), dt),
                    ValidationError);
}
