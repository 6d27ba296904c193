#pragma once

#include "spinline/spin.hpp"

#include <optional>
#include <random>
#include <vector>

namespace spinline {

/// Two-spin parity: odd = antiparallel (unblockaded, charge moves under PSB),
/// even = parallel (blockaded).
enum class Parity { even, odd };

enum class SenseMode { direct, cascaded };

/// SET signal model. Lateral DQDs are sensed directly with the full
/// separation; central DQDs directly with a smaller one, or cascaded with the
/// central separation amplified by cascade_gain.
struct SensorModel {
    double mu_blocked = 0.0;
    double mu_unblocked = 1.0;
    double mu_blocked_central = 0.0;
    double mu_unblocked_central = 0.3;
    double cascade_gain = 3.3;          // >= 1
    double sigma_signal = 0.12;
    std::optional<double> threshold;    // default: midpoint of the mode's means
    int integration_shots = 1;          // signal averages over this many draws

    void check() const {
        if (mu_unblocked == mu_blocked)
            throw ConfigError("sensor means for blocked/unblocked must differ");
        if (mu_unblocked_central == mu_blocked_central)
            throw ConfigError("central sensor means must differ");
        if (cascade_gain < 1.0) throw ConfigError("cascade_gain must be >= 1");
        if (sigma_signal < 0) throw ConfigError("sigma_signal must be >= 0");
        if (integration_shots < 1) throw ConfigError("integration_shots must be >= 1");
    }

    /// Mean signal for a parity in a given mode (lateral direct when
    /// `lateral`). Cascaded separation = cascade_gain x central separation,
    /// widened symmetrically about the central midpoint.
    double mean(Parity parity, SenseMode mode, bool lateral) const;
    double threshold_for(SenseMode mode, bool lateral) const;
    /// True when larger signals mean odd/unblocked in this mode.
    bool odd_above_threshold(SenseMode mode, bool lateral) const;
};

struct ReadoutOutcome {
    double raw_signal = 0;
    Parity label = Parity::even;
    int dqd = 0; // pair index 0..3
    SenseMode mode = SenseMode::direct;
};

struct PsbOutcome {
    Parity parity;
    SpinState state; // normalized post-measurement state
};

/// Projective parity measurement: {du, ud} -> odd, {dd, uu} -> even, Born
/// sampling, state collapsed onto the measured subspace.
PsbOutcome psb_project(const SpinState& state, std::mt19937_64& rng);

/// Gaussian SET signal for a parity outcome. Cascaded mode is only defined
/// for the central DQDs (pairs 1 and 2).
ReadoutOutcome sense(Parity parity, int pair, const SensorModel& sensor, SenseMode mode,
                     std::mt19937_64& rng);

/// Cascade arming window for a lateral DQD near its anticrossing.
struct CascadeConfig {
    double eps_anticrossing_v = 0.010;
    double window_halfwidth_v = 0.004;
};

struct CascadeArming {
    bool armed = false;
    double gain = 1.0;
};

/// The cascade fires only when the lateral pair sits inside the arming window
/// and its spin state is odd (unblockaded); electron numbers per DQD are
/// unchanged either way, the cascade just moves charge within the lateral DQD.
CascadeArming cascade_armed(Parity lateral_parity, double eps_lateral_v,
                            const CascadeConfig& window, double cascade_gain);

enum class InitKind { mixed_odd, heralded_down_down };

struct InitResult {
    SpinState state;
    bool heralded = false;  // success flag of the heralding protocol
    int attempts = 0;       // heralding attempts consumed
    double model_time_s = 0; // wall time the protocol models (decay waits etc.)
};

/// Parity-state initialization. mixed_odd detunes to the even-even charge
/// region, waits 100 us for the pair to decay, and ramps back diabatically:
/// an equal mixture of |du> and |ud>. heralded_down_down samples the herald
/// until success, up to `retry_limit` attempts.
InitResult initialize_parity(InitKind kind, std::mt19937_64& rng,
                             double herald_probability = 0.5, int retry_limit = 20);

/// Readout visibility V = P(odd|odd prepared) + P(even|even prepared) - 1.
double visibility(const std::vector<Parity>& labels_even_prepared,
                  const std::vector<Parity>& labels_odd_prepared);

/// Same from raw signal histograms at a given threshold.
double visibility_from_signals(const std::vector<double>& signals_even_prepared,
                               const std::vector<double>& signals_odd_prepared,
                               double threshold, bool odd_above);

} // namespace spinline
