#pragma once

#include "spinline/configfile.hpp"
#include "spinline/noise.hpp"
#include "spinline/readout.hpp"
#include "spinline/spin.hpp"

#include <Eigen/Dense>

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace spinline {

/// Gate voltages in volts, keyed by gate name (P1..P8, J1..J7, SET1, SET2).
struct GateVoltages {
    std::map<std::string, double> volts;

    double at(const std::string& gate) const;
    void set(const std::string& gate, double v) { volts[gate] = v; }
    bool contains(const std::string& gate) const { return volts.count(gate) > 0; }
};

/// Integer electron occupation of the eight dots, with the per-DQD pair view.
struct ChargeConfiguration {
    std::array<int, 8> occupation{};

    std::pair<int, int> pair_occupation(int pair) const {
        return {occupation[static_cast<std::size_t>(2 * pair)],
                occupation[static_cast<std::size_t>(2 * pair + 1)]};
    }
    int pair_total(int pair) const {
        auto [l, r] = pair_occupation(pair);
        return l + r;
    }
    static bool is_even(int n) { return n % 2 == 0; }
    bool pair_is_even_even(int pair) const {
        auto [l, r] = pair_occupation(pair);
        return is_even(l) && is_even(r);
    }
    bool pair_is_odd_odd(int pair) const {
        auto [l, r] = pair_occupation(pair);
        return !is_even(l) && !is_even(r);
    }
    bool operator==(const ChargeConfiguration&) const = default;
};

/// Antisymmetric plunger detuning axis of one DQD: eps tilts the double well,
/// +eps/2 on the left plunger and -eps/2 on the right one.
struct DetuningAxis {
    int pair = 0;
    GateVoltages origin;
};

/// Monotone loading-voltage calibration per DQD: the higher the loading
/// plunger during the loading stage, the more electrons stay trapped.
struct LoadingCalibration {
    struct Level {
        double voltage = 0;
        int count = 0;
    };
    std::array<std::string, 4> loading_gate; // P2, P4, P5, P7
    std::array<std::vector<Level>, 4> levels; // ascending in voltage and count

    double flood_plunger_v = 2.4;
    double flood_barrier_v = 1.8;
    double reduce_barrier_v = 0.9;
    double block_barrier_v = -0.6;
    double pushout_sensor_v = 0.2;

    /// Exact calibrated voltage for a target count; throws LoadingError naming
    /// the DQD when the target is outside the table.
    double voltage_for_count(int pair, int count) const;
    /// Electrons captured when loading at voltage v (largest level <= v).
    int count_for_voltage(int pair, double v) const;
};

/// One stage of the seven-stage loading sequence (A..G).
struct LoadingStage {
    char label = 'A';
    GateVoltages preset;
    std::set<int> extent_2deg; // dots covered by the 2DEG, 0-based
};

struct LoadingStageTrace {
    LoadingStage stage;
    std::array<int, 4> pair_totals{};
    std::array<bool, 4> flooded{};
};

struct LoadingResult {
    ChargeConfiguration final_occupation;
    std::vector<LoadingStageTrace> stages;
};

/// A rectangle of (x, y) sweep coordinates declared unsupported in the
/// device config (charge-instability regions the model does not reproduce).
struct ExclusionWindow {
    std::string name;
    std::string x_axis; // e.g. "vj"
    std::string y_axis; // e.g. "eps"
    double x_lo = 0, x_hi = 0;
    double y_lo = 0, y_hi = 0;

    bool contains(double x, double y) const {
        return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
    }
};

/// Sensor proxy for stability maps: sum of occupations weighted by a
/// distance decay from both SETs, plus a linear cross-capacitance background.
struct SensorProxyModel {
    double decay = 0.55;
    double background_per_volt = 0.02;
};

struct Diagnostic {
    enum class Severity { warning, error };
    Severity severity = Severity::warning;
    std::string message;
};

/// Full electrostatic + qubit description of the eight-dot device.
struct DeviceConfig {
    int n_dots = 8;
    std::vector<std::string> plunger_gates; // P1..P8
    std::vector<std::string> barrier_gates; // J1..J7
    std::vector<std::string> sensor_gates;  // SET1, SET2

    /// n_dots x n_gates dimensionless couplings, gate order: plungers,
    /// barriers, sensors. Diagonal (own plunger) strictly largest per row.
    Eigen::MatrixXd lever_arms;
    std::array<double, 8> charging_energy_mev{};
    std::array<double, 4> mutual_charging_mev{}; // per DQD pair
    /// Per-dot chemical-potential offset (meV); fixes the absolute electron
    /// numbers of the constant-interaction model at the operating point.
    std::array<double, 8> reference_potential_mev{};
    std::array<int, 8> occupancy_min{};
    std::array<int, 8> occupancy_max{};

    GateVoltages operating_point;
    std::array<QubitParams, 8> qubits;
    FieldConfig field;
    ExchangeModel exchange;
    NoiseModel noise;
    SensorModel sensor;
    CascadeConfig cascade;
    SensorProxyModel proxy;
    LoadingCalibration loading;
    std::vector<ExclusionWindow> exclusions;
    double herald_probability = 0.5;
    int herald_retry_limit = 20;

    static constexpr int kPairs = 4;
    static bool pair_is_lateral(int pair) { return pair == 0 || pair == 3; }
    static std::pair<int, int> pair_dots(int pair) { return {2 * pair, 2 * pair + 1}; }
    std::string pair_name(int pair) const;
    /// Lateral DQD whose cascade senses a central pair (1 -> 0, 2 -> 3).
    static int cascade_partner(int central_pair) { return central_pair == 1 ? 0 : 3; }

    int n_gates() const;
    /// Canonical gate order: plungers, barriers, sensors.
    std::vector<std::string> all_gates() const;
    int gate_index(const std::string& name) const; // throws ConfigError
    /// Zeeman (Larmor) difference of a pair's qubits in Hz.
    double zeeman_difference_hz(int pair) const;

    static DeviceConfig from_config(const ConfigFile& file);
    static DeviceConfig from_file(const std::string& path);
    static DeviceConfig from_text(const std::string& text);

    /// Invariant checks and physical-plausibility warnings.
    std::vector<Diagnostic> validate() const;
};

/// Per-pair constant-interaction energy (meV) of occupation (n_left, n_right)
/// at the given voltages; the brute-force oracle in the tests enumerates this.
double pair_energy(const DeviceConfig& cfg, const GateVoltages& v, int pair, int n_left,
                   int n_right);

/// Minimum-energy pair occupation. With `total`, the search is restricted to
/// n_left + n_right == total (isolated mode). Ties break toward the
/// lexicographically smallest (n_left, n_right).
std::pair<int, int> ground_state_pair(const DeviceConfig& cfg, const GateVoltages& v,
                                      int pair, std::optional<int> total = {});

/// Ground-state occupation of all eight dots; per-pair totals fix isolated
/// mode pair by pair.
ChargeConfiguration ground_state_occupation(
    const DeviceConfig& cfg, const GateVoltages& v,
    const std::array<std::optional<int>, 4>& pair_totals = {});

GateVoltages apply_detuning(const GateVoltages& v, const DetuningAxis& axis,
                            const DeviceConfig& cfg, double eps_volts);

/// Weighted-occupation sensor proxy plus linear gate background.
double sensor_proxy_value(const DeviceConfig& cfg, const GateVoltages& v,
                          const ChargeConfiguration& n);

struct MapAxis {
    std::string gate;
    double start = 0;
    double stop = 0;
    int points = 2;

    double at(int i) const {
        return points < 2 ? start
                          : start + (stop - start) * static_cast<double>(i) /
                                        static_cast<double>(points - 1);
    }
};

struct StabilityMap {
    int pair = 0;
    MapAxis x, y;
    std::optional<int> isolated_total;
    /// Row-major [iy * x.points + ix]; NaN marks excluded points.
    std::vector<double> value;
    std::vector<int> n_left, n_right;
    std::uint64_t seed = 0; // echoed into the metadata only; maps are deterministic
};

/// Charge stability map of one DQD: the two axis gates sweep from the
/// operating point, every other gate stays put. Other pairs stay frozen at
/// their operating-point occupation.
StabilityMap stability_map(const DeviceConfig& cfg, int pair, const MapAxis& x,
                           const MapAxis& y, std::optional<int> isolated_total = {},
                           std::uint64_t seed = 0);

/// Seven-stage loading sequence A..G for per-DQD electron-number targets.
LoadingResult run_loading_sequence(const DeviceConfig& cfg,
                                   const std::array<int, 4>& targets);

/// The stage presets the sequence would traverse for given targets.
std::vector<LoadingStage> loading_stages(const DeviceConfig& cfg,
                                         const std::array<int, 4>& targets);

} // namespace spinline
