#pragma once

#include "spinline/analysis.hpp"
#include "spinline/device.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spinline {

enum class ExperimentKind {
    chevron,
    ramsey_purity,
    hahn,
    fingerprint,
    exchange_spectroscopy,
    cz_calibration,
    cascade_calibration,
    feedback_demo,
};

ExperimentKind experiment_kind_from_string(const std::string& s);
std::string to_string(ExperimentKind k);

struct SweepAxis {
    std::string name;
    double start = 0;
    double stop = 0;
    int points = 2;

    double at(int i) const {
        return points < 2 ? start
                          : start + (stop - start) * static_cast<double>(i) /
                                        static_cast<double>(points - 1);
    }
    std::vector<double> values() const {
        std::vector<double> v(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = at(i);
        return v;
    }
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::chevron;
    std::string name;                 // config section name, used for outputs
    int qubit = 0;                    // 0-based dot index (single-qubit kinds)
    int pair = 0;                     // 0-based DQD index (pair kinds)
    std::vector<SweepAxis> axes;      // kind-specific sweep axes
    int shots = 200;
    std::uint64_t seed = 0;
    std::optional<NoiseBackend> backend; // overrides the device noise backend
    bool record_shots = false;

    // fingerprint / exchange spectroscopy
    double wait_s = 1e-6;

    // cz_calibration
    double vj_volts = 1.5;
    int repetitions = 38;
    double baseline_correction = 0.0; // pre-applied Z correction per CZ

    // feedback_demo
    int cycles = 400;
    double larmor_step_hz = 1500;
    double set_step_v = 4e-4;
    double probe_delay_s = 2.5e-6;
    int probe_shots = 50; // 0 = noiseless probe (exact probabilities)
    double feedback_gain = 1.0;
    double set_peak_width_v = 0.010;
    double set_search_step_v = 0.002;

    /// Parse from a `[experiment NAME]` config section.
    static ExperimentSpec from_section(const ConfigSection& s);
    void check() const; // axes points >= 2, shots >= 1

    /// Master RNG seed with the experiment identity folded in, so different
    /// qubits/pairs sample independent noise even under one seed override.
    /// stream_seed_override pins the streams directly (pipeline-equivalence
    /// checks across pairs).
    std::optional<std::uint64_t> stream_seed_override;
    std::uint64_t stream_seed() const;
};

struct ShotRecord {
    int ix = 0;      // sweep index, fast axis
    int iy = 0;      // sweep index, slow axis (0 for 1D)
    int setting = 0; // tomography / preparation setting index
    int shot = 0;
    ReadoutOutcome outcome;
    bool herald_ok = true;
    std::array<double, 2> frame_phase{0, 0};
};

struct SeriesColumn {
    std::string name;
    std::vector<double> values;
};

struct ExperimentResult {
    ExperimentSpec spec;
    std::vector<SeriesColumn> columns;       // CSV payload, equal-length columns
    std::vector<FitResult> fits;             // appended to the JSON sidecar
    std::map<std::string, double> scalars;   // chosen corrections, visibilities, ...
    std::map<std::string, std::vector<double>> histograms; // raw-signal exports
    std::vector<ShotRecord> records;         // filled when spec.record_shots

    const SeriesColumn& column(const std::string& name) const;
};

ExperimentResult run_chevron(const DeviceConfig& cfg, const ExperimentSpec& spec,
                             int threads = 1);
ExperimentResult run_ramsey_purity(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                   int threads = 1);
ExperimentResult run_hahn(const DeviceConfig& cfg, const ExperimentSpec& spec,
                          int threads = 1);
ExperimentResult run_fingerprint(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                 int threads = 1);
ExperimentResult run_exchange_spectroscopy(const DeviceConfig& cfg,
                                           const ExperimentSpec& spec, int threads = 1);
ExperimentResult run_cz_calibration(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                    int threads = 1);
ExperimentResult run_cascade_calibration(const DeviceConfig& cfg,
                                         const ExperimentSpec& spec, int threads = 1);
ExperimentResult run_feedback(const DeviceConfig& cfg, const ExperimentSpec& spec);

/// Dispatch on spec.kind.
ExperimentResult run_experiment(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                int threads = 1);

} // namespace spinline
