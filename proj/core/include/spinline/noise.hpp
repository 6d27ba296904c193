#pragma once

#include "spinline/spin.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace spinline {

enum class NoiseBackend { analytic, stochastic };

/// Larmor-noise model: per-qubit quasi-static Gaussian offset plus a slow
/// Ornstein-Uhlenbeck drift, or the analytic-envelope shortcut.
struct NoiseModel {
    NoiseBackend backend = NoiseBackend::stochastic;
    /// Explicit quasi-static sigma (Hz); used when derive_sigma_from_t2 is
    /// false. When true, sigma = 1/(sqrt(2)*pi*T2*) per qubit so that the
    /// quasi-static ensemble average is exp(-(t/T2*)^2).
    double sigma_quasistatic_hz = 0.0;
    bool derive_sigma_from_t2 = true;
    double ou_sigma_hz = 0.0; // stationary OU deviation
    double ou_tau_s = 0.1;    // OU mean-reversion time
    double envelope_exponent_ramsey = 2.0;
    double envelope_exponent_hahn = 2.0;
    std::uint64_t seed = 0;

    void check() const {
        if (!(ou_tau_s > 0)) throw ConfigError("ou_tau_s must be > 0");
        if (sigma_quasistatic_hz < 0 || ou_sigma_hz < 0)
            throw ConfigError("noise sigmas must be >= 0");
    }
};

/// sigma = 1/(sqrt(2)*pi*T2*): quasi-static Gaussian dephasing that averages
/// to the Ramsey envelope exp(-(t/T2*)^2).
double sigma_from_t2star(double t2_star_s);

/// Closed-form phase variance <phi^2> (rad^2) accumulated from OU frequency
/// noise of stationary deviation sigma (Hz) and correlation time tau over a
/// free evolution of length t.
double ou_phase_variance_free(double sigma_hz, double tau_s, double t_s);

/// Same for a Hahn echo of total length t (pi pulse at t/2). The echo
/// amplitude is exp(-<phi^2>/2).
double ou_phase_variance_echo(double sigma_hz, double tau_s, double t_s);

/// Calibration map: total echo time at which the OU-limited Hahn amplitude
/// has decayed to 1/e.
double ou_hahn_t2(double sigma_hz, double tau_s);

/// Inverse calibration map: OU sigma that yields a given 1/e Hahn time.
double ou_sigma_for_hahn_t2(double t2_hahn_s, double tau_s);

/// Noise parameters bound to one DQD pair.
struct PairNoiseParams {
    NoiseBackend backend = NoiseBackend::stochastic;
    std::array<double, 2> sigma_quasistatic_hz{0, 0};
    double ou_sigma_hz = 0;
    double ou_tau_s = 0.1;
    std::array<double, 2> t2_star_s{41e-6, 41e-6}; // analytic envelopes
    std::array<double, 2> t2_hahn_s{1.31e-3, 1.31e-3};
    double exponent_ramsey = 2.0;
    double exponent_hahn = 2.0;
};

PairNoiseParams make_pair_noise(const NoiseModel& model, const QubitParams& q_left,
                                const QubitParams& q_right);

/// One shot's noise trajectory for a DQD pair. Holds the quasi-static offsets
/// drawn at construction and the live OU state per qubit. Free-evolution
/// phase integrals are sampled from the exact joint distribution of
/// (integral, endpoint), so statistics do not depend on a step size.
class NoiseRealization {
public:
    NoiseRealization(const PairNoiseParams& p, std::mt19937_64 rng);

    bool analytic() const { return p_.backend == NoiseBackend::analytic; }
    const PairNoiseParams& params() const { return p_; }

    /// Instantaneous frequency offset (quasi-static + OU) of one qubit.
    double offset_hz(int qubit) const;

    /// Advance the OU state by dt and return the exact time integral of the
    /// total offset over the step (Hz*s), for dephasing-only segments.
    double advance_phase_integral(int qubit, double dt_s);

    /// Advance the OU state by dt without sampling the integral (driven
    /// segments use piecewise-constant offsets).
    void advance(double dt_s);

    /// Number of piecewise-constant substeps for a driven segment.
    int substeps(double duration_s) const;

    double ramsey_envelope(int qubit, double t_s) const;
    double hahn_envelope(int qubit, double t_total_s) const;

private:
    PairNoiseParams p_;
    std::mt19937_64 rng_;
    std::array<double, 2> quasistatic_{0, 0};
    std::array<double, 2> ou_{0, 0};
};

/// Per-shot frequency-offset traces sampled at the given timeline (seconds,
/// ascending). Stochastic backend only. traces[shot][k] is the offset at
/// timeline[k]; shot streams derive from (model.seed XOR seed_override, shot).
std::vector<std::vector<double>> sample_noise(const NoiseModel& model, int n_shots,
                                              const std::vector<double>& timeline,
                                              std::uint64_t seed_override = 0);

} // namespace spinline
