#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spinline/noise.hpp"
#include "spinline/rng.hpp"

#include <cmath>
#include <numeric>

using namespace spinline;

TEST_CASE("sigma from T2*: documented mapping") {
    CHECK(sigma_from_t2star(41e-6) ==
          doctest::Approx(1.0 / (std::sqrt(2.0) * kPi * 41e-6)));
}

TEST_CASE("sample_noise: zero sigmas give identically zero traces") {
    NoiseModel m;
    m.backend = NoiseBackend::stochastic;
    m.sigma_quasistatic_hz = 0;
    m.ou_sigma_hz = 0;
    auto traces = sample_noise(m, 16, {0, 1e-6, 2e-6, 5e-3});
    for (const auto& tr : traces)
        for (double v : tr) CHECK(v == 0.0);

    m.backend = NoiseBackend::analytic;
    CHECK_THROWS_AS(sample_noise(m, 1, {0.0}), UsageError);
}

TEST_CASE("quasi-static ensemble variance matches sigma^2 within 3 sigma") {
    NoiseModel m;
    m.sigma_quasistatic_hz = 5e3;
    m.ou_sigma_hz = 0;
    m.seed = 42;
    const int n = 10000;
    auto traces = sample_noise(m, n, {0.0});
    double mean = 0, var = 0;
    for (const auto& tr : traces) mean += tr[0];
    mean /= n;
    for (const auto& tr : traces) var += (tr[0] - mean) * (tr[0] - mean);
    var /= (n - 1);
    // Var of the sample variance of a Gaussian: 2 sigma^4/(n-1).
    double s2 = m.sigma_quasistatic_hz * m.sigma_quasistatic_hz;
    double bound = 3.0 * std::sqrt(2.0 / (n - 1)) * s2;
    CHECK(std::abs(var - s2) < bound);
}

TEST_CASE("OU autocorrelation at lag tau is e^-1 sigma^2") {
    NoiseModel m;
    m.sigma_quasistatic_hz = 0;
    m.ou_sigma_hz = 2e3;
    m.ou_tau_s = 1e-3;
    m.seed = 3;
    const int n = 20000;
    auto traces = sample_noise(m, n, {0.0, m.ou_tau_s});
    double acc = 0, var0 = 0;
    for (const auto& tr : traces) {
        acc += tr[0] * tr[1];
        var0 += tr[0] * tr[0];
    }
    acc /= n;
    var0 /= n;
    double s2 = m.ou_sigma_hz * m.ou_sigma_hz;
    CHECK(var0 == doctest::Approx(s2).epsilon(0.05));
    CHECK(acc == doctest::Approx(std::exp(-1.0) * s2).epsilon(0.08));
}

TEST_CASE("integrated-OU sampler matches the closed-form phase variance") {
    PairNoiseParams p;
    p.backend = NoiseBackend::stochastic;
    p.sigma_quasistatic_hz = {0, 0};
    p.ou_sigma_hz = 2e3;
    p.ou_tau_s = 100e-6;
    const double t = 50e-6;
    const int n = 20000;
    double acc2 = 0;
    for (int i = 0; i < n; ++i) {
        NoiseRealization nr(p, make_rng(9, Stream::noise, 0, static_cast<std::uint64_t>(i)));
        double integral = nr.advance_phase_integral(0, t);
        double phi = 2.0 * kPi * integral;
        acc2 += phi * phi;
    }
    acc2 /= n;
    double expect = ou_phase_variance_free(p.ou_sigma_hz, p.ou_tau_s, t);
    CHECK(acc2 == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("Hahn calibration maps are mutually inverse and echo variance is exact") {
    double tau = 0.01;
    double sigma = ou_sigma_for_hahn_t2(1.31e-3, tau);
    CHECK(ou_hahn_t2(sigma, tau) == doctest::Approx(1.31e-3).epsilon(1e-6));
    CHECK(ou_phase_variance_echo(sigma, tau, 1.31e-3) == doctest::Approx(2.0).epsilon(1e-9));

    // Echo refocusing removes the quasi-static limit: for t << tau the echo
    // variance is far below the free variance.
    double t = tau / 100;
    CHECK(ou_phase_variance_echo(sigma, tau, t) < 0.05 * ou_phase_variance_free(sigma, tau, t));
}

TEST_CASE("stochastic Ramsey ensemble reproduces the Gaussian envelope (chi^2)") {
    const double t2 = 41e-6;
    PairNoiseParams p;
    p.backend = NoiseBackend::stochastic;
    p.sigma_quasistatic_hz = {sigma_from_t2star(t2), 0};
    p.ou_sigma_hz = 0;

    const int shots = 10000;
    const int delays = 12;
    double chi2 = 0;
    for (int d = 0; d < delays; ++d) {
        double t = 5e-6 + 70e-6 * d / (delays - 1);
        // <cos phi> over the quasi-static ensemble estimates the envelope.
        double acc = 0;
        for (int s = 0; s < shots; ++s) {
            NoiseRealization nr(p, make_rng(17, Stream::noise,
                                            static_cast<std::uint64_t>(d),
                                            static_cast<std::uint64_t>(s)));
            acc += std::cos(2.0 * kPi * nr.advance_phase_integral(0, t));
        }
        acc /= shots;
        double expect = std::exp(-std::pow(t / t2, 2.0));
        // Var(cos phi) = (1 + W(2t)^... bounded by (1 - W^2); use the exact
        // Gaussian moment: E[cos^2] = (1 + exp(-2 sigma_phi^2))/2.
        double sphi2 = std::pow(2.0 * kPi * p.sigma_quasistatic_hz[0] * t, 2.0);
        double var = 0.5 * (1.0 + std::exp(-2.0 * sphi2)) - expect * expect;
        chi2 += (acc - expect) * (acc - expect) / (var / shots);
    }
    // 12 bins: chi^2 below the 99.9% quantile (32.9).
    CHECK(chi2 < 32.9);
}

TEST_CASE("analytic envelopes") {
    PairNoiseParams p;
    p.backend = NoiseBackend::analytic;
    p.t2_star_s = {41e-6, 30e-6};
    p.t2_hahn_s = {1.31e-3, 1.0e-3};
    NoiseRealization nr(p, make_rng(1, Stream::noise));
    CHECK(nr.ramsey_envelope(0, 41e-6) == doctest::Approx(std::exp(-1.0)));
    CHECK(nr.hahn_envelope(0, 1.31e-3) == doctest::Approx(std::exp(-1.0)));
    CHECK(nr.ramsey_envelope(1, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("make_pair_noise derives per-qubit sigmas per the documented mapping") {
    NoiseModel m;
    m.derive_sigma_from_t2 = true;
    QubitParams a, b;
    a.t2_star_s = 41e-6;
    b.t2_star_s = 20e-6;
    PairNoiseParams p = make_pair_noise(m, a, b);
    CHECK(p.sigma_quasistatic_hz[0] == doctest::Approx(sigma_from_t2star(41e-6)));
    CHECK(p.sigma_quasistatic_hz[1] == doctest::Approx(sigma_from_t2star(20e-6)));

    m.derive_sigma_from_t2 = false;
    m.sigma_quasistatic_hz = 123.0;
    PairNoiseParams q = make_pair_noise(m, a, b);
    CHECK(q.sigma_quasistatic_hz[0] == doctest::Approx(123.0));
}
