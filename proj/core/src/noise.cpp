#include "spinline/noise.hpp"

#include "spinline/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinline {

namespace {

// f(x) = x - 1 + e^-x, the OU phase-variance kernel.
double ou_kernel(double x) {
    if (x < 1e-4) return x * x / 2.0 - x * x * x / 6.0; // series, avoids cancellation
    return x - 1.0 + std::exp(-x);
}

} // namespace

double sigma_from_t2star(double t2_star_s) {
    return 1.0 / (std::sqrt(2.0) * kPi * t2_star_s);
}

double ou_phase_variance_free(double sigma_hz, double tau_s, double t_s) {
    double sw = 2.0 * kPi * sigma_hz; // rad/s
    return 2.0 * sw * sw * tau_s * tau_s * ou_kernel(t_s / tau_s);
}

double ou_phase_variance_echo(double sigma_hz, double tau_s, double t_s) {
    // phi = int_0^{t/2} dw - int_{t/2}^t dw for OU frequency noise dw.
    double sw = 2.0 * kPi * sigma_hz;
    double tau_half = t_s / 2.0;
    double x = tau_half / tau_s;
    double var_half = 2.0 * sw * sw * tau_s * tau_s * ou_kernel(x);
    double one_minus_a = -std::expm1(-x);
    double cov = sw * sw * tau_s * tau_s * one_minus_a * one_minus_a;
    return 2.0 * var_half - 2.0 * cov;
}

double ou_hahn_t2(double sigma_hz, double tau_s) {
    if (sigma_hz <= 0) return std::numeric_limits<double>::infinity();
    // Solve ou_phase_variance_echo(t)/2 = 1 by bisection; the variance is
    // strictly increasing in t.
    double lo = 0.0, hi = tau_s;
    while (ou_phase_variance_echo(sigma_hz, tau_s, hi) < 2.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (ou_phase_variance_echo(sigma_hz, tau_s, mid) < 2.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double ou_sigma_for_hahn_t2(double t2_hahn_s, double tau_s) {
    // <phi^2> scales as sigma^2 at fixed t, so one reference evaluation
    // inverts the map exactly.
    double ref = ou_phase_variance_echo(1.0, tau_s, t2_hahn_s);
    return std::sqrt(2.0 / ref);
}

PairNoiseParams make_pair_noise(const NoiseModel& model, const QubitParams& q_left,
                                const QubitParams& q_right) {
    PairNoiseParams p;
    p.backend = model.backend;
    if (model.derive_sigma_from_t2) {
        p.sigma_quasistatic_hz = {sigma_from_t2star(q_left.t2_star_s),
                                  sigma_from_t2star(q_right.t2_star_s)};
    } else {
        p.sigma_quasistatic_hz = {model.sigma_quasistatic_hz, model.sigma_quasistatic_hz};
    }
    p.ou_sigma_hz = model.ou_sigma_hz;
    p.ou_tau_s = model.ou_tau_s;
    p.t2_star_s = {q_left.t2_star_s, q_right.t2_star_s};
    p.t2_hahn_s = {q_left.t2_hahn_s, q_right.t2_hahn_s};
    p.exponent_ramsey = model.envelope_exponent_ramsey;
    p.exponent_hahn = model.envelope_exponent_hahn;
    return p;
}

NoiseRealization::NoiseRealization(const PairNoiseParams& p, std::mt19937_64 rng)
    : p_(p), rng_(rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int q = 0; q < 2; ++q) {
        quasistatic_[static_cast<std::size_t>(q)] =
            p_.sigma_quasistatic_hz[static_cast<std::size_t>(q)] * n01(rng_);
        ou_[static_cast<std::size_t>(q)] = p_.ou_sigma_hz * n01(rng_); // stationary start
    }
}

double NoiseRealization::offset_hz(int qubit) const {
    auto q = static_cast<std::size_t>(qubit);
    return quasistatic_[q] + ou_[q];
}

double NoiseRealization::advance_phase_integral(int qubit, double dt_s) {
    auto q = static_cast<std::size_t>(qubit);
    double integral = quasistatic_[q] * dt_s;
    if (p_.ou_sigma_hz <= 0) return integral;

    // Exact joint sampling of (int_0^dt X ds, X_dt) for the OU process X
    // conditioned on the current value. All second moments are closed form.
    double tau = p_.ou_tau_s;
    double s2 = p_.ou_sigma_hz * p_.ou_sigma_hz;
    double x = dt_s / tau;
    double a = std::exp(-x);
    double one_minus_a = -std::expm1(-x);

    double mean_i = ou_[q] * tau * one_minus_a;
    double mean_x = ou_[q] * a;
    double var_i = 2.0 * s2 * tau * tau * ou_kernel(x) -
                   s2 * tau * tau * one_minus_a * one_minus_a;
    double var_x = s2 * (1.0 - a * a);
    double cov = s2 * tau * one_minus_a * one_minus_a;

    std::normal_distribution<double> n01(0.0, 1.0);
    double z1 = n01(rng_), z2 = n01(rng_);
    double l11 = std::sqrt(std::max(var_i, 0.0));
    double l21 = l11 > 0 ? cov / l11 : 0.0;
    double l22 = std::sqrt(std::max(var_x - l21 * l21, 0.0));

    double i_ou = mean_i + l11 * z1;
    ou_[q] = mean_x + l21 * z1 + l22 * z2;
    return integral + i_ou;
}

void NoiseRealization::advance(double dt_s) {
    if (p_.ou_sigma_hz <= 0) return;
    double a = std::exp(-dt_s / p_.ou_tau_s);
    double sd = p_.ou_sigma_hz * std::sqrt(std::max(1.0 - a * a, 0.0));
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int q = 0; q < 2; ++q)
        ou_[static_cast<std::size_t>(q)] = a * ou_[static_cast<std::size_t>(q)] + sd * n01(rng_);
}

int NoiseRealization::substeps(double duration_s) const {
    if (p_.ou_sigma_hz <= 0) return 1;
    double dt_max = p_.ou_tau_s / 50.0;
    return static_cast<int>(std::clamp(std::ceil(duration_s / dt_max), 1.0, 1024.0));
}

double NoiseRealization::ramsey_envelope(int qubit, double t_s) const {
    auto q = static_cast<std::size_t>(qubit);
    if (p_.t2_star_s[q] <= 0) return 1.0;
    return std::exp(-std::pow(t_s / p_.t2_star_s[q], p_.exponent_ramsey));
}

double NoiseRealization::hahn_envelope(int qubit, double t_total_s) const {
    auto q = static_cast<std::size_t>(qubit);
    if (p_.t2_hahn_s[q] <= 0) return 1.0;
    return std::exp(-std::pow(t_total_s / p_.t2_hahn_s[q], p_.exponent_hahn));
}

std::vector<std::vector<double>> sample_noise(const NoiseModel& model, int n_shots,
                                              const std::vector<double>& timeline,
                                              std::uint64_t seed_override) {
    if (model.backend != NoiseBackend::stochastic)
        throw UsageError("sample_noise requires the stochastic backend");
    std::uint64_t seed = model.seed ^ seed_override;
    std::vector<std::vector<double>> traces(static_cast<std::size_t>(n_shots));
    for (int s = 0; s < n_shots; ++s) {
        auto rng = make_rng(seed, Stream::noise, 0, static_cast<std::uint64_t>(s));
        std::normal_distribution<double> n01(0.0, 1.0);
        double qs = model.sigma_quasistatic_hz * n01(rng);
        double ou = model.ou_sigma_hz * n01(rng);
        auto& trace = traces[static_cast<std::size_t>(s)];
        trace.reserve(timeline.size());
        double t_prev = timeline.empty() ? 0.0 : timeline.front();
        for (std::size_t k = 0; k < timeline.size(); ++k) {
            double dt = timeline[k] - t_prev;
            if (dt > 0 && model.ou_sigma_hz > 0) {
                double a = std::exp(-dt / model.ou_tau_s);
                ou = a * ou + model.ou_sigma_hz * std::sqrt(1.0 - a * a) * n01(rng);
            }
            t_prev = timeline[k];
            trace.push_back(qs + ou);
        }
    }
    return traces;
}

} // namespace spinline
