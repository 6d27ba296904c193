#include "spinline/experiments.hpp"

#include "spinline/rng.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace spinline {

namespace {

void parallel_for(int n, int threads, const std::function<void(int)>& body) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < n; i += threads) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

struct PairContext {
    const DeviceConfig* cfg = nullptr;
    int pair = 0;
    int target = 0; // 0 = left dot of the pair, 1 = right
    QubitParams q[2];
    double larmor_hz[2] = {0, 0};
    PairNoiseParams noise;
    SenseMode mode = SenseMode::direct; // how this pair is read out
};

PairContext make_context(const DeviceConfig& cfg, int pair, int target_in_pair,
                         std::optional<NoiseBackend> backend) {
    PairContext c;
    c.cfg = &cfg;
    c.pair = pair;
    c.target = target_in_pair;
    auto [l, r] = DeviceConfig::pair_dots(pair);
    c.q[0] = cfg.qubits[static_cast<std::size_t>(l)];
    c.q[1] = cfg.qubits[static_cast<std::size_t>(r)];
    c.larmor_hz[0] = larmor_frequency(c.q[0], cfg.field);
    c.larmor_hz[1] = larmor_frequency(c.q[1], cfg.field);
    c.noise = make_pair_noise(cfg.noise, c.q[0], c.q[1]);
    if (backend) c.noise.backend = *backend;
    // Central DQDs are read out through the electron cascade, lateral ones
    // directly; the spin pipeline upstream is identical.
    c.mode = DeviceConfig::pair_is_lateral(pair) ? SenseMode::direct : SenseMode::cascaded;
    return c;
}

/// Tomography settings; the pulse rotates the measured axis onto +Z so that
/// P(up) = (1 + <axis>)/2.
enum class Proj { plus_x, minus_x, plus_y, minus_y, z };

SpinState project_pulse(const SpinState& s, int qubit, Proj p, const RotatingFrame& f) {
    switch (p) {
        case Proj::plus_x: return apply_x_rotation(s, qubit, kPi / 2, f, kPi / 2);
        case Proj::minus_x: return apply_x_rotation(s, qubit, -kPi / 2, f, kPi / 2);
        case Proj::plus_y: return apply_x_rotation(s, qubit, -kPi / 2, f, 0.0);
        case Proj::minus_y: return apply_x_rotation(s, qubit, kPi / 2, f, 0.0);
        case Proj::z: return s;
    }
    return s;
}

/// P(target up) from the parity-odd probability given the partner's known
/// spin (parity readout distinguishes antiparallel from parallel only).
double p_up_from_p_odd(double p_odd, bool partner_up) {
    return partner_up ? 1.0 - p_odd : p_odd;
}

struct ShotCounter {
    long odd = 0;
    long total = 0;
    double p() const { return total > 0 ? static_cast<double>(odd) / static_cast<double>(total) : 0.0; }
};

/// Samples `shots` classified readouts of a prepared state probability and
/// returns the fraction labelled odd. Sensor noise included.
ShotCounter sample_readout(double p_odd, const PairContext& c, std::uint64_t seed,
                           std::uint64_t point, int setting, int shots,
                           const ExperimentSpec& spec, std::vector<ShotRecord>* records,
                           int ix, int iy, const std::array<double, 2>& frame_phase) {
    ShotCounter counter;
    // One stream per (point, setting); shots consume it sequentially.
    auto born = make_rng(seed, Stream::born, point * 64 + static_cast<std::uint64_t>(setting));
    auto sensor_rng =
        make_rng(seed, Stream::sensor, point * 64 + static_cast<std::uint64_t>(setting));
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int s = 0; s < shots; ++s) {
        Parity parity = u01(born) < p_odd ? Parity::odd : Parity::even;
        ReadoutOutcome out = sense(parity, c.pair, c.cfg->sensor, c.mode, sensor_rng);
        counter.total += 1;
        counter.odd += (out.label == Parity::odd);
        if (records && spec.record_shots) {
            records->push_back({ix, iy, setting, s, out, true, frame_phase});
        }
    }
    return counter;
}

double wrap_pi(double phase) {
    double p = std::fmod(phase + kPi, 2.0 * kPi);
    if (p < 0) p += 2.0 * kPi;
    return p - kPi;
}

} // namespace

ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "chevron") return ExperimentKind::chevron;
    if (s == "ramsey_purity") return ExperimentKind::ramsey_purity;
    if (s == "hahn") return ExperimentKind::hahn;
    if (s == "fingerprint") return ExperimentKind::fingerprint;
    if (s == "exchange_spectroscopy") return ExperimentKind::exchange_spectroscopy;
    if (s == "cz_calibration") return ExperimentKind::cz_calibration;
    if (s == "cascade_calibration") return ExperimentKind::cascade_calibration;
    if (s == "feedback_demo") return ExperimentKind::feedback_demo;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::chevron: return "chevron";
        case ExperimentKind::ramsey_purity: return "ramsey_purity";
        case ExperimentKind::hahn: return "hahn";
        case ExperimentKind::fingerprint: return "fingerprint";
        case ExperimentKind::exchange_spectroscopy: return "exchange_spectroscopy";
        case ExperimentKind::cz_calibration: return "cz_calibration";
        case ExperimentKind::cascade_calibration: return "cascade_calibration";
        case ExperimentKind::feedback_demo: return "feedback_demo";
    }
    return "?";
}

namespace {

SweepAxis axis_from(const ConfigSection& s, const std::string& key) {
    auto v = s.entry(key).as_doubles();
    if (v.size() != 3)
        throw ConfigError("axis '" + key + "' is 'start stop points'", s.entry(key).line,
                          s.entry(key).column);
    return {key, v[0], v[1], static_cast<int>(v[2])};
}

} // namespace

ExperimentSpec ExperimentSpec::from_section(const ConfigSection& s) {
    ExperimentSpec spec;
    spec.name = s.name().rfind("experiment ", 0) == 0 ? s.name().substr(11) : s.name();
    spec.kind = experiment_kind_from_string(s.get_string("kind"));
    if (s.has("qubit")) spec.qubit = static_cast<int>(s.get_int("qubit")) - 1;
    if (s.has("pair")) spec.pair = static_cast<int>(s.get_int("pair")) - 1;
    spec.shots = static_cast<int>(s.get_int_or("shots", 200));
    spec.seed = static_cast<std::uint64_t>(s.get_int_or("seed", 0));
    spec.record_shots = s.get_bool_or("record_shots", false);
    if (s.has("backend")) {
        std::string b = s.get_string("backend");
        if (b == "analytic")
            spec.backend = NoiseBackend::analytic;
        else if (b == "stochastic")
            spec.backend = NoiseBackend::stochastic;
        else
            throw ConfigError("backend must be 'analytic' or 'stochastic'",
                              s.entry("backend").line, s.entry("backend").column);
    }

    switch (spec.kind) {
        case ExperimentKind::chevron:
            spec.axes = {axis_from(s, "offset_hz"), axis_from(s, "duration_s")};
            break;
        case ExperimentKind::ramsey_purity:
            spec.axes = {axis_from(s, "delay_s")};
            break;
        case ExperimentKind::hahn:
            spec.axes = {axis_from(s, "total_delay_s")};
            break;
        case ExperimentKind::fingerprint:
            spec.axes = {axis_from(s, "vj_volts"), axis_from(s, "eps_volts")};
            spec.wait_s = s.get_double_or("wait_s", 1e-6);
            break;
        case ExperimentKind::exchange_spectroscopy:
            spec.axes = {axis_from(s, "vj_volts"), axis_from(s, "wait_s")};
            break;
        case ExperimentKind::cz_calibration:
            spec.axes = {axis_from(s, "correction_rad")};
            spec.vj_volts = s.get_double("vj_volts");
            spec.repetitions = static_cast<int>(s.get_int_or("repetitions", 38));
            spec.baseline_correction = s.get_double_or("baseline_correction", 0.0);
            break;
        case ExperimentKind::cascade_calibration:
            spec.axes = {axis_from(s, "eps_lateral_v")};
            break;
        case ExperimentKind::feedback_demo:
            spec.cycles = static_cast<int>(s.get_int_or("cycles", 400));
            spec.larmor_step_hz = s.get_double_or("larmor_step_hz", 1500);
            spec.set_step_v = s.get_double_or("set_step_v", 4e-4);
            spec.probe_delay_s = s.get_double_or("probe_delay_s", 2.5e-6);
            spec.probe_shots = static_cast<int>(s.get_int_or("probe_shots", 50));
            spec.feedback_gain = s.get_double_or("gain", 1.0);
            spec.set_peak_width_v = s.get_double_or("set_peak_width_v", 0.010);
            spec.set_search_step_v = s.get_double_or("set_search_step_v", 0.002);
            break;
    }
    spec.check();
    return spec;
}

void ExperimentSpec::check() const {
    for (const auto& a : axes)
        if (a.points < 2)
            throw ConfigError("experiment '" + name + "': axis '" + a.name +
                              "' needs at least 2 points");
    if (shots < 1) throw ConfigError("experiment '" + name + "': shots must be >= 1");
    if (kind == ExperimentKind::feedback_demo && cycles < 2)
        throw ConfigError("experiment '" + name + "': cycles must be >= 2");
    if (kind == ExperimentKind::cz_calibration && repetitions < 2)
        throw ConfigError("experiment '" + name + "': repetitions must be >= 2");
}

std::uint64_t ExperimentSpec::stream_seed() const {
    if (stream_seed_override) return *stream_seed_override;
    return mix_seed(seed, {static_cast<std::uint64_t>(kind),
                           static_cast<std::uint64_t>(qubit + 1),
                           static_cast<std::uint64_t>(pair + 1)});
}

const SeriesColumn& ExperimentResult::column(const std::string& name) const {
    for (const auto& c : columns)
        if (c.name == name) return c;
    throw AnalysisError("experiment result has no column '" + name + "'");
}

// ---------------------------------------------------------------------------
// Chevron
// ---------------------------------------------------------------------------

ExperimentResult run_chevron(const DeviceConfig& cfg, const ExperimentSpec& spec,
                             int threads) {
    PairContext c = make_context(cfg, spec.qubit / 2, spec.qubit % 2, spec.backend);
    const SweepAxis& offs = spec.axes[0];
    const SweepAxis& durs = spec.axes[1];
    const int nx = offs.points, ny = durs.points;
    const int partner = 1 - c.target;

    // Exchange parked at the operating barrier voltage of this pair.
    double vj_op = cfg.operating_point.at(cfg.barrier_gates[static_cast<std::size_t>(2 * c.pair)]);
    double j_park = exchange_j(cfg.exchange, vj_op).hz;

    std::vector<double> p_grid(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    std::vector<ShotRecord> records;
    std::vector<std::vector<ShotRecord>> row_records(static_cast<std::size_t>(ny));

    parallel_for(ny, threads, [&](int iy) {
        double t = durs.at(iy);
        for (int ix = 0; ix < nx; ++ix) {
            double delta = offs.at(ix); // drive frequency offset from the target line
            std::uint64_t point = static_cast<std::uint64_t>(iy) * static_cast<std::uint64_t>(nx) +
                                  static_cast<std::uint64_t>(ix);

            PairHamiltonian h;
            // Single drive tone at f_target + delta; both qubits see the
            // stripline B1 at their own detunings.
            h.detuning_hz[static_cast<std::size_t>(c.target)] = -delta;
            h.detuning_hz[static_cast<std::size_t>(partner)] =
                c.larmor_hz[partner] - (c.larmor_hz[c.target] + delta);
            h.drive_hz[static_cast<std::size_t>(c.target)] =
                c.q[c.target].rabi_hz * cfg.field.b1_scale;
            h.drive_hz[static_cast<std::size_t>(partner)] =
                c.q[partner].rabi_hz * cfg.field.b1_scale;
            h.exchange_hz = j_park;

            ShotCounter counter;
            bool analytic = c.noise.backend == NoiseBackend::analytic;
            if (analytic) {
                NoiseRealization env(c.noise, make_rng(spec.stream_seed(), Stream::noise, point, 0));
                SpinState st = evolve(SpinState::down_down(), h, t, &env);
                double p_odd = odd_probability(st);
                counter = sample_readout(p_odd, c, spec.stream_seed(), point, 0, spec.shots, spec,
                                         spec.record_shots ? &row_records[static_cast<std::size_t>(iy)] : nullptr,
                                         ix, iy, {0, 0});
            } else {
                auto herald_rng = make_rng(spec.stream_seed(), Stream::herald, point);
                auto noise_rng = make_rng(spec.stream_seed(), Stream::noise, point);
                auto born = make_rng(spec.stream_seed(), Stream::born, point);
                auto sensor_rng = make_rng(spec.stream_seed(), Stream::sensor, point);
                for (int s = 0; s < spec.shots; ++s) {
                    InitResult init;
                    try {
                        init = initialize_parity(InitKind::heralded_down_down, herald_rng,
                                                 cfg.herald_probability,
                                                 cfg.herald_retry_limit);
                    } catch (const InitializationError&) {
                        // Herald budget exhausted: post-select the shot away.
                        if (spec.record_shots)
                            row_records[static_cast<std::size_t>(iy)].push_back(
                                {ix, iy, 0, s, ReadoutOutcome{}, false, {0, 0}});
                        continue;
                    }
                    NoiseRealization noise(c.noise,
                                           std::mt19937_64(noise_rng()));
                    SpinState st = evolve(init.state, h, t, &noise);
                    PsbOutcome psb = psb_project(st, born);
                    ReadoutOutcome out = sense(psb.parity, c.pair, cfg.sensor, c.mode, sensor_rng);
                    counter.total += 1;
                    counter.odd += (out.label == Parity::odd);
                    if (spec.record_shots)
                        row_records[static_cast<std::size_t>(iy)].push_back(
                            {ix, iy, 0, s, out, init.heralded, {0, 0}});
                }
            }
            p_grid[static_cast<std::size_t>(point)] = counter.p();
        }
    });

    ExperimentResult res;
    res.spec = spec;
    std::vector<double> xcol, ycol;
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            xcol.push_back(offs.at(ix));
            ycol.push_back(durs.at(iy));
        }
    res.columns = {{"offset_hz", xcol}, {"duration_s", ycol}, {"p_odd", p_grid}};
    for (auto& rr : row_records) records.insert(records.end(), rr.begin(), rr.end());
    res.records = std::move(records);

    try {
        FitResult fit = fit_chevron(offs.values(), durs.values(), p_grid);
        res.fits.push_back(fit);
        res.scalars["f_rabi_fit_hz"] = fit.param("f_rabi");
        res.scalars["f_center_fit_hz"] = fit.param("f_center");
    } catch (const AnalysisError& e) {
        res.scalars["fit_failed"] = 1;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Ramsey purity
// ---------------------------------------------------------------------------

namespace {

constexpr Proj kTomography[5] = {Proj::plus_x, Proj::minus_x, Proj::plus_y, Proj::minus_y,
                                 Proj::z};

} // namespace

ExperimentResult run_ramsey_purity(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                   int threads) {
    PairContext c = make_context(cfg, spec.qubit / 2, spec.qubit % 2, spec.backend);
    const SweepAxis& delays = spec.axes[0];
    const int nd = delays.points;
    const bool analytic = c.noise.backend == NoiseBackend::analytic;
    RotatingFrame frame; // no virtual Z in this sequence

    std::vector<std::array<double, 5>> probs(static_cast<std::size_t>(nd));
    std::vector<std::vector<ShotRecord>> recs(static_cast<std::size_t>(nd));

    parallel_for(nd, threads, [&](int id) {
        double t = delays.at(id);
        for (int setting = 0; setting < 5; ++setting) {
            ShotCounter counter;
            std::uint64_t point = static_cast<std::uint64_t>(id);
            if (analytic) {
                NoiseRealization env(c.noise, make_rng(spec.stream_seed(), Stream::noise, point, 0));
                SpinState st = apply_x_rotation(SpinState::down_down(), c.target, kPi / 2, frame);
                st = evolve(st, PairHamiltonian{}, t, &env);
                st = project_pulse(st, c.target, kTomography[setting], frame);
                double p_odd = odd_probability(st);
                counter = sample_readout(p_odd, c, spec.stream_seed(), point, setting, spec.shots, spec,
                                         &recs[static_cast<std::size_t>(id)], id, 0, frame.phase);
            } else {
                std::uint64_t pk = point * 8 + static_cast<std::uint64_t>(setting);
                auto herald_rng = make_rng(spec.stream_seed(), Stream::herald, pk);
                auto noise_rng = make_rng(spec.stream_seed(), Stream::noise, pk);
                auto born = make_rng(spec.stream_seed(), Stream::born, pk);
                auto sensor_rng = make_rng(spec.stream_seed(), Stream::sensor, pk);
                for (int s = 0; s < spec.shots; ++s) {
                    InitResult init;
                    try {
                        init = initialize_parity(InitKind::heralded_down_down, herald_rng,
                                                 cfg.herald_probability,
                                                 cfg.herald_retry_limit);
                    } catch (const InitializationError&) {
                        if (spec.record_shots)
                            recs[static_cast<std::size_t>(id)].push_back(
                                {id, 0, setting, s, ReadoutOutcome{}, false, frame.phase});
                        continue;
                    }
                    NoiseRealization noise(c.noise, std::mt19937_64(noise_rng()));
                    SpinState st = apply_x_rotation(init.state, c.target, kPi / 2, frame);
                    st = evolve(st, PairHamiltonian{}, t, &noise);
                    st = project_pulse(st, c.target, kTomography[setting], frame);
                    PsbOutcome psb = psb_project(st, born);
                    ReadoutOutcome out = sense(psb.parity, c.pair, cfg.sensor, c.mode, sensor_rng);
                    counter.total += 1;
                    counter.odd += (out.label == Parity::odd);
                    if (spec.record_shots)
                        recs[static_cast<std::size_t>(id)].push_back(
                            {id, 0, setting, s, out, init.heralded, frame.phase});
                }
            }
            probs[static_cast<std::size_t>(id)][static_cast<std::size_t>(setting)] = counter.p();
        }
    });

    std::vector<double> tcol(static_cast<std::size_t>(nd)), bx(static_cast<std::size_t>(nd)),
        by(static_cast<std::size_t>(nd)), bz(static_cast<std::size_t>(nd)),
        purity(static_cast<std::size_t>(nd)), purity_db(static_cast<std::size_t>(nd)),
        clipped(static_cast<std::size_t>(nd));
    double nshots = spec.shots;
    for (int id = 0; id < nd; ++id) {
        auto i = static_cast<std::size_t>(id);
        tcol[i] = delays.at(id);
        // Parity-odd means target-up here (partner stays down).
        BlochEstimate b = bloch_vector(probs[i][0], probs[i][1], probs[i][2], probs[i][3],
                                       probs[i][4]);
        bx[i] = b.vector[0];
        by[i] = b.vector[1];
        bz[i] = b.vector[2];
        purity[i] = b.purity;
        clipped[i] = b.clipped ? 1.0 : 0.0; // clipping is reported, never silent
        // Shot-noise debiased norm: E[v_hat^2] = v^2 + Var(v_hat).
        double var = 0;
        for (int setting = 0; setting < 4; ++setting) {
            double p = probs[i][static_cast<std::size_t>(setting)];
            var += p * (1 - p) / nshots;
        }
        double pz = probs[i][4];
        var += 4.0 * pz * (1 - pz) / nshots;
        double n2 = b.vector[0] * b.vector[0] + b.vector[1] * b.vector[1] +
                    b.vector[2] * b.vector[2] - var;
        purity_db[i] = std::sqrt(std::max(0.0, n2));
    }

    ExperimentResult res;
    res.spec = spec;
    res.columns = {{"delay_s", tcol},  {"bloch_x", bx},
                   {"bloch_y", by},    {"bloch_z", bz},
                   {"purity", purity}, {"purity_debiased", purity_db},
                   {"purity_clipped", clipped}};
    for (auto& rr : recs) res.records.insert(res.records.end(), rr.begin(), rr.end());

    FitResult fit = fit_decay(tcol, purity_db, DecayModel::gaussian_ramsey);
    fit.model = "ramsey_purity";
    res.fits.push_back(fit);
    if (fit.converged) {
        res.scalars["t2_star_fit_s"] = fit.param("t_decay");
        res.scalars["t2_star_sigma_s"] = fit.uncertainty("t_decay");
    }
    return res;
}

// ---------------------------------------------------------------------------
// Hahn echo
// ---------------------------------------------------------------------------

ExperimentResult run_hahn(const DeviceConfig& cfg, const ExperimentSpec& spec, int threads) {
    PairContext c = make_context(cfg, spec.qubit / 2, spec.qubit % 2, spec.backend);
    const SweepAxis& delays = spec.axes[0];
    const int nd = delays.points;
    const bool analytic = c.noise.backend == NoiseBackend::analytic;
    RotatingFrame frame;

    std::vector<double> tcol(static_cast<std::size_t>(nd)),
        amp(static_cast<std::size_t>(nd));
    std::vector<std::vector<ShotRecord>> recs(static_cast<std::size_t>(nd));

    parallel_for(nd, threads, [&](int id) {
        double total = delays.at(id);
        double tau = total / 2.0;
        std::array<double, 2> p_final{0, 0}; // [0] = final +X90, [1] = final -X90
        for (int setting = 0; setting < 2; ++setting) {
            double sign = setting == 0 ? 1.0 : -1.0;
            ShotCounter counter;
            std::uint64_t point = static_cast<std::uint64_t>(id);
            if (analytic) {
                // Mid-sequence Gaussian envelopes would double-count what the
                // echo refocuses; the analytic backend models the echo
                // amplitude directly with the Hahn envelope of the total time.
                SpinState st = apply_x_rotation(SpinState::down_down(), c.target, kPi / 2, frame);
                st = apply_x_rotation(st, c.target, kPi, frame);
                st = project_pulse(st, c.target,
                                   setting == 0 ? Proj::minus_y : Proj::plus_y, frame);
                // Noiseless pipeline gives P in {0,1}; shrink the fringe by the
                // envelope around 1/2.
                double env = std::exp(
                    -std::pow(total / c.noise.t2_hahn_s[static_cast<std::size_t>(c.target)],
                              c.noise.exponent_hahn));
                SpinState st2 = apply_x_rotation(SpinState::down_down(), c.target, kPi / 2, frame);
                st2 = apply_x_rotation(st2, c.target, kPi, frame);
                st2 = apply_x_rotation(st2, c.target, sign * kPi / 2, frame);
                double p0 = odd_probability(st2);
                double p_odd = 0.5 + env * (p0 - 0.5);
                counter = sample_readout(p_odd, c, spec.stream_seed(), point, setting, spec.shots,
                                         spec, &recs[static_cast<std::size_t>(id)], id, 0,
                                         frame.phase);
            } else {
                std::uint64_t pk = point * 8 + static_cast<std::uint64_t>(setting);
                auto herald_rng = make_rng(spec.stream_seed(), Stream::herald, pk);
                auto noise_rng = make_rng(spec.stream_seed(), Stream::noise, pk);
                auto born = make_rng(spec.stream_seed(), Stream::born, pk);
                auto sensor_rng = make_rng(spec.stream_seed(), Stream::sensor, pk);
                for (int s = 0; s < spec.shots; ++s) {
                    InitResult init;
                    try {
                        init = initialize_parity(InitKind::heralded_down_down, herald_rng,
                                                 cfg.herald_probability,
                                                 cfg.herald_retry_limit);
                    } catch (const InitializationError&) {
                        if (spec.record_shots)
                            recs[static_cast<std::size_t>(id)].push_back(
                                {id, 0, setting, s, ReadoutOutcome{}, false, frame.phase});
                        continue;
                    }
                    NoiseRealization noise(c.noise, std::mt19937_64(noise_rng()));
                    SpinState st = apply_x_rotation(init.state, c.target, kPi / 2, frame);
                    st = evolve(st, PairHamiltonian{}, tau, &noise);
                    st = apply_x_rotation(st, c.target, kPi, frame);
                    st = evolve(st, PairHamiltonian{}, tau, &noise);
                    st = apply_x_rotation(st, c.target, sign * kPi / 2, frame);
                    PsbOutcome psb = psb_project(st, born);
                    ReadoutOutcome out = sense(psb.parity, c.pair, cfg.sensor, c.mode, sensor_rng);
                    counter.total += 1;
                    counter.odd += (out.label == Parity::odd);
                    if (spec.record_shots)
                        recs[static_cast<std::size_t>(id)].push_back(
                            {id, 0, setting, s, out, init.heralded, frame.phase});
                }
            }
            p_final[static_cast<std::size_t>(setting)] = counter.p();
        }
        tcol[static_cast<std::size_t>(id)] = total;
        amp[static_cast<std::size_t>(id)] = p_final[1] - p_final[0];
    });

    ExperimentResult res;
    res.spec = spec;
    res.columns = {{"total_delay_s", tcol}, {"echo_amplitude", amp}};
    for (auto& rr : recs) res.records.insert(res.records.end(), rr.begin(), rr.end());

    // Fit the echo fringe in probability units so shot noise on a fully
    // decayed tail cannot leave the fit's domain; the decay time is the same.
    std::vector<double> fringe(amp.size());
    for (std::size_t i = 0; i < amp.size(); ++i) fringe[i] = 0.5 + 0.5 * amp[i];
    FitResult fit = fit_decay(tcol, fringe, DecayModel::stretched_hahn);
    fit.model = "hahn_echo";
    res.fits.push_back(fit);
    if (fit.converged) {
        res.scalars["t2_hahn_fit_s"] = fit.param("t_decay");
        res.scalars["t2_hahn_sigma_s"] = fit.uncertainty("t_decay");
        res.scalars["hahn_exponent_fit"] = fit.param("exponent");
    }
    return res;
}

// ---------------------------------------------------------------------------
// Exchange phase measurement shared by fingerprint and spectroscopy
// ---------------------------------------------------------------------------

namespace {

/// Decoupled conditional-phase measurement: prepare the target in |+x>, run
/// wait/2 - Xpi(both) - wait/2 under exchange J, and read the target phase by
/// +-X/+-Y tomography for both control states. Returns the differential
/// (conditional) phase phi(control down) - phi(control up) = 2*pi*J*wait in
/// the Ising-limit model. Sampled with `shots` per projection; exact
/// probabilities when shots == 0.
double conditional_phase(const PairContext& c, const ExperimentSpec& spec, double j_hz,
                         double wait_s, std::uint64_t point, int shots,
                         std::vector<ShotRecord>* records, int ix, int iy) {
    RotatingFrame frame;
    const int target = c.target;
    const int control = 1 - target;
    const bool stochastic = c.noise.backend == NoiseBackend::stochastic;

    double phases[2];
    for (int branch = 0; branch < 2; ++branch) { // 0: control down, 1: control up
        // The decoupling pi pulses refocus quasi-static dephasing, so no
        // analytic envelope applies; the stochastic backend contributes the
        // unrefocused part of its noise integrals as Z kicks.
        NoiseRealization noise(c.noise,
                               make_rng(spec.stream_seed(), Stream::noise,
                                        point * 4 + static_cast<std::uint64_t>(branch), 0));
        SpinState base = SpinState::down_down();
        if (branch == 1) base = apply_x_rotation(base, control, kPi, frame);
        base = apply_x_rotation(base, target, kPi / 2, frame);
        for (int half = 0; half < 2; ++half) {
            base = apply_exchange_phase(base, j_hz, wait_s / 2);
            if (stochastic) {
                // True accumulated phase each half; the physical pi pulses in
                // between refocus the quasi-static part on their own.
                for (int q = 0; q < 2; ++q)
                    base = apply_z_phase(
                        base, q, 2.0 * kPi * noise.advance_phase_integral(q, wait_s / 2));
            }
            if (half == 0) {
                base = apply_x_rotation(base, 0, kPi, frame);
                base = apply_x_rotation(base, 1, kPi, frame);
            }
        }

        // Control ends opposite to where it started (the decoupling pi).
        bool control_up_at_readout = branch == 0;
        double comp[4];
        for (int pr = 0; pr < 4; ++pr) {
            SpinState st = project_pulse(base, target, kTomography[pr], frame);
            double p_odd = odd_probability(st);
            if (shots > 0) {
                ShotCounter counter =
                    sample_readout(p_odd, c, spec.stream_seed(), point * 4 + static_cast<std::uint64_t>(branch),
                                   pr, shots, spec, records, ix, iy, frame.phase);
                p_odd = counter.p();
            }
            comp[pr] = p_up_from_p_odd(p_odd, control_up_at_readout);
        }
        double ex = comp[0] - comp[1];
        double ey = comp[2] - comp[3];
        phases[branch] = std::atan2(ey, ex);
    }
    // Orientation fixed so the conditional phase advances as +2*pi*J*t.
    return wrap_pi(phases[1] - phases[0]);
}

} // namespace

ExperimentResult run_fingerprint(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                 int threads) {
    PairContext c = make_context(cfg, spec.pair, 0, spec.backend);
    const SweepAxis& vjs = spec.axes[0];
    const SweepAxis& epss = spec.axes[1];
    const int nx = vjs.points, ny = epss.points;

    std::vector<double> vcol, ecol;
    std::vector<double> phase(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny));
    std::vector<double> jcol(phase.size()), valid(phase.size());
    std::vector<std::vector<ShotRecord>> recs(static_cast<std::size_t>(ny));

    parallel_for(ny, threads, [&](int iy) {
        double eps = epss.at(iy);
        for (int ix = 0; ix < nx; ++ix) {
            double vj = vjs.at(ix);
            std::size_t k = static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx) +
                            static_cast<std::size_t>(ix);
            bool excluded = false;
            for (const auto& w : cfg.exclusions)
                if (w.x_axis == "vj" && w.y_axis == "eps" && w.contains(vj, eps))
                    excluded = true;
            if (excluded) {
                phase[k] = std::numeric_limits<double>::quiet_NaN();
                jcol[k] = std::numeric_limits<double>::quiet_NaN();
                valid[k] = 0;
                continue;
            }
            ExchangeValue j = exchange_j(cfg.exchange, vj, eps);
            phase[k] = conditional_phase(c, spec, j.hz, spec.wait_s, k, spec.shots,
                                         spec.record_shots ? &recs[static_cast<std::size_t>(iy)] : nullptr,
                                         ix, iy);
            jcol[k] = j.hz;
            valid[k] = 1;
        }
    });

    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            vcol.push_back(vjs.at(ix));
            ecol.push_back(epss.at(iy));
        }

    ExperimentResult res;
    res.spec = spec;
    res.columns = {{"vj_volts", vcol},
                   {"eps_volts", ecol},
                   {"phase_rad", phase},
                   {"j_model_hz", jcol},
                   {"valid", valid}};
    for (auto& rr : recs) res.records.insert(res.records.end(), rr.begin(), rr.end());
    return res;
}

ExperimentResult run_exchange_spectroscopy(const DeviceConfig& cfg,
                                           const ExperimentSpec& spec, int threads) {
    PairContext c = make_context(cfg, spec.pair, 0, spec.backend);
    const SweepAxis& vjs = spec.axes[0];
    const SweepAxis& waits = spec.axes[1];
    const int nv = vjs.points, nt = waits.points;
    if (nt < 8) throw AnalysisError("exchange spectroscopy needs >= 8 wait points");

    double t_max = std::max(std::abs(waits.start), std::abs(waits.stop));
    double f_resolution = t_max > 0 ? 1.0 / t_max : 0.0;

    std::vector<double> vcol(static_cast<std::size_t>(nv)), freq(static_cast<std::size_t>(nv)),
        freq_dft(static_cast<std::size_t>(nv)), used(static_cast<std::size_t>(nv));

    parallel_for(nv, threads, [&](int iv) {
        double vj = vjs.at(iv);
        ExchangeValue j = exchange_j(cfg.exchange, vj, 0.0);

        std::vector<double> phis(static_cast<std::size_t>(nt));
        std::vector<std::complex<double>> z(static_cast<std::size_t>(nt));
        for (int it = 0; it < nt; ++it) {
            std::uint64_t point = static_cast<std::uint64_t>(iv) * static_cast<std::uint64_t>(nt) +
                                  static_cast<std::uint64_t>(it);
            double phi = conditional_phase(c, spec, j.hz, waits.at(it), point, spec.shots,
                                           nullptr, it, iv);
            phis[static_cast<std::size_t>(it)] = phi;
            z[static_cast<std::size_t>(it)] = std::polar(1.0, phi);
        }

        double dt = nt > 1 ? (waits.at(1) - waits.at(0)) : 0.0;
        freq_dft[static_cast<std::size_t>(iv)] = dft_peak_frequency(dt, z);

        // Unwrapped linear fit of the phase ramp (the DFT peak seeds nothing
        // more than a sanity cross-check at this sampling density).
        unwrap_phases(phis);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int it = 0; it < nt; ++it) {
            double x = waits.at(it);
            double y = phis[static_cast<std::size_t>(it)];
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        double nd = nt;
        double slope = (nd * sxy - sx * sy) / (nd * sxx - sx * sx);
        double f = slope / (2.0 * kPi);

        vcol[static_cast<std::size_t>(iv)] = vj;
        freq[static_cast<std::size_t>(iv)] = f;
        used[static_cast<std::size_t>(iv)] = (f > f_resolution && !j.saturated) ? 1.0 : 0.0;
    });

    std::vector<double> fit_v, fit_f;
    for (int iv = 0; iv < nv; ++iv)
        if (used[static_cast<std::size_t>(iv)] > 0) {
            fit_v.push_back(vcol[static_cast<std::size_t>(iv)]);
            fit_f.push_back(freq[static_cast<std::size_t>(iv)]);
        }
    if (fit_v.size() < 3)
        throw AnalysisError("exchange spectroscopy: fewer than 3 resolvable frequencies");

    ExperimentResult res;
    res.spec = spec;
    res.columns = {{"vj_volts", vcol}, {"freq_hz", freq}, {"freq_dft_hz", freq_dft},
                   {"used", used}};
    FitResult fit = fit_turnon(fit_v, fit_f);
    res.fits.push_back(fit);
    res.scalars["slope_dec_per_v"] = fit.param("slope_dec_per_v");
    res.scalars["slope_sigma_dec_per_v"] = fit.uncertainty("slope_dec_per_v");
    res.scalars["f_resolution_hz"] = f_resolution;
    return res;
}

// ---------------------------------------------------------------------------
// CZ phase calibration
// ---------------------------------------------------------------------------

namespace {

/// Measured target phase after n corrected CZ gates with the control down.
/// shots == 0 uses exact probabilities.
double cz_target_phase(const PairContext& c, const ExperimentSpec& spec, double j_hz,
                       double duration_s, double correction, int reps, bool control_up,
                       std::uint64_t point, int shots, std::vector<ShotRecord>* records,
                       int ix, int iy) {
    RotatingFrame frame;
    const int target = c.target;
    const int control = 1 - target;
    const bool stochastic = c.noise.backend == NoiseBackend::stochastic;
    NoiseRealization noise(c.noise, make_rng(spec.stream_seed(), Stream::noise, point, 1));

    SpinState st = SpinState::down_down();
    if (control_up) st = apply_x_rotation(st, control, kPi, frame);
    st = apply_x_rotation(st, target, kPi / 2, frame);
    for (int r = 0; r < reps; ++r) {
        st = apply_exchange_phase(st, j_hz, duration_s);
        if (stochastic) {
            for (int q = 0; q < 2; ++q)
                st = apply_z_phase(st, q,
                                   2.0 * kPi * noise.advance_phase_integral(q, duration_s));
        }
        // The correction is the Z phase that cancels the single-qubit
        // exchange term, so it unwinds the frame.
        apply_virtual_z(frame, target, -(spec.baseline_correction + correction));
    }

    double comp[4];
    for (int pr = 0; pr < 4; ++pr) {
        SpinState proj = project_pulse(st, target, kTomography[pr], frame);
        double p_odd = odd_probability(proj);
        if (shots > 0) {
            ShotCounter counter = sample_readout(p_odd, c, spec.stream_seed(), point, pr, shots, spec,
                                                 records, ix, iy, frame.phase);
            p_odd = counter.p();
        }
        comp[pr] = p_up_from_p_odd(p_odd, control_up);
    }
    return std::atan2(comp[2] - comp[3], comp[0] - comp[1]);
}

/// Circular-mean phase increment per repetition at a given correction; zero
/// when the measured phase is independent of the repetition count.
double cz_phase_slope(const PairContext& c, const ExperimentSpec& spec, double j_hz,
                      double duration_s, double correction, std::uint64_t point_base,
                      int shots) {
    std::complex<double> acc = 0;
    double prev = 0;
    for (int n = 1; n <= spec.repetitions; ++n) {
        double phi = cz_target_phase(c, spec, j_hz, duration_s, correction, n, false,
                                     point_base + static_cast<std::uint64_t>(n), shots,
                                     nullptr, 0, 0);
        if (n > 1) acc += std::polar(1.0, phi - prev);
        prev = phi;
    }
    return std::arg(acc);
}

} // namespace

ExperimentResult run_cz_calibration(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                    int threads) {
    PairContext c = make_context(cfg, spec.pair, 0, spec.backend);
    const SweepAxis& corrections = spec.axes[0];
    const int nc = corrections.points;
    const int nreps = spec.repetitions;

    ExchangeValue j = exchange_j(cfg.exchange, spec.vj_volts, 0.0);
    double duration = 1.0 / (2.0 * j.hz);
    double dz = std::abs(c.cfg->zeeman_difference_hz(c.pair));
    bool within_validity = j.hz <= 0.1 * dz;

    // Fringe map P(odd) over (correction, repetitions) for the calibration
    // picture: -X90 readout of the target, control down.
    std::vector<double> ccol, ncol,
        p_grid(static_cast<std::size_t>(nc) * static_cast<std::size_t>(nreps));
    std::vector<std::vector<ShotRecord>> recs(static_cast<std::size_t>(nreps));
    RotatingFrame base_frame;

    parallel_for(nreps, threads, [&](int in) {
        int reps = in + 1;
        for (int ic = 0; ic < nc; ++ic) {
            double corr = corrections.at(ic);
            RotatingFrame frame;
            SpinState st = apply_x_rotation(SpinState::down_down(), c.target, kPi / 2, frame);
            NoiseRealization noise(c.noise,
                                   make_rng(spec.stream_seed(), Stream::noise,
                                            static_cast<std::uint64_t>(in * nc + ic), 2));
            const bool stochastic = c.noise.backend == NoiseBackend::stochastic;
            for (int r = 0; r < reps; ++r) {
                st = apply_exchange_phase(st, j.hz, duration);
                if (stochastic) {
                    for (int q = 0; q < 2; ++q)
                        st = apply_z_phase(st, q, 2.0 * kPi *
                                                      noise.advance_phase_integral(q, duration));
                }
                apply_virtual_z(frame, c.target, -(spec.baseline_correction + corr));
            }
            st = apply_x_rotation(st, c.target, -kPi / 2, frame);
            double p_odd = odd_probability(st);
            std::uint64_t point = static_cast<std::uint64_t>(in) * static_cast<std::uint64_t>(nc) +
                                  static_cast<std::uint64_t>(ic);
            ShotCounter counter = sample_readout(
                p_odd, c, spec.stream_seed(), point + 1000000, 0, spec.shots, spec,
                spec.record_shots ? &recs[static_cast<std::size_t>(in)] : nullptr, ic, in,
                frame.phase);
            p_grid[static_cast<std::size_t>(point)] = counter.p();
        }
    });
    for (int in = 0; in < nreps; ++in)
        for (int ic = 0; ic < nc; ++ic) {
            ccol.push_back(corrections.at(ic));
            ncol.push_back(in + 1);
        }

    // Pick the correction whose measured phase is repetition-independent,
    // then refine with the residual circular-mean slope. The analytic backend
    // calibrates on converged statistics (exact probabilities); the
    // stochastic one samples with the configured shots.
    int probe_shots = c.noise.backend == NoiseBackend::analytic ? 0 : spec.shots;
    double best_c = 0, best_slope = std::numeric_limits<double>::infinity();
    for (int ic = 0; ic < nc; ++ic) {
        double slope = cz_phase_slope(c, spec, j.hz, duration, corrections.at(ic),
                                      static_cast<std::uint64_t>(ic) * 1024, probe_shots);
        if (std::abs(slope) < std::abs(best_slope)) {
            best_slope = slope;
            best_c = corrections.at(ic);
        }
    }
    if (std::abs(best_slope) > 0.5)
        throw CalibrationError(
            "cz_calibration: no repetition-independent correction found within the sweep");
    double chosen = best_c + best_slope;
    double residual = cz_phase_slope(c, spec, j.hz, duration, chosen, 1 << 22, probe_shots);
    // One more polish step; with clean statistics this lands at machine noise.
    chosen = wrap_pi(chosen + residual);
    if (chosen < 0) chosen += 2.0 * kPi;
    residual = cz_phase_slope(c, spec, j.hz, duration, chosen, 1 << 23, probe_shots);

    // Conditional-phase verification: one corrected CZ, both control states.
    ExperimentSpec verify = spec;
    verify.baseline_correction = spec.baseline_correction;
    double phi_down = cz_target_phase(c, verify, j.hz, duration, chosen, 1, false, 1 << 24,
                                      probe_shots, nullptr, 0, 0);
    double phi_up = cz_target_phase(c, verify, j.hz, duration, chosen, 1, true, 1 << 25,
                                    probe_shots, nullptr, 0, 0);
    double conditional = wrap_pi(phi_down - phi_up);

    ExperimentResult res;
    res.spec = spec;
    res.columns = {{"correction_rad", ccol}, {"repetitions", ncol}, {"p_odd", p_grid}};
    for (auto& rr : recs) res.records.insert(res.records.end(), rr.begin(), rr.end());
    res.scalars["j_hz"] = j.hz;
    res.scalars["cz_duration_s"] = duration;
    res.scalars["chosen_correction_rad"] = chosen;
    res.scalars["flatness_residual_rad_per_rep"] = residual;
    res.scalars["conditional_phase_rad"] = conditional;
    res.scalars["within_validity"] = within_validity ? 1.0 : 0.0;
    return res;
}

// ---------------------------------------------------------------------------
// Cascade calibration
// ---------------------------------------------------------------------------

ExperimentResult run_cascade_calibration(const DeviceConfig& cfg,
                                         const ExperimentSpec& spec, int threads) {
    if (DeviceConfig::pair_is_lateral(spec.pair))
        throw UsageError("cascade_calibration targets a central DQD (pair 2 or 3)");
    PairContext c = make_context(cfg, spec.pair, 0, spec.backend);
    const SweepAxis& epss = spec.axes[0];
    const int ne = epss.points;
    RotatingFrame frame;

    std::vector<double> ecol(static_cast<std::size_t>(ne)), vis(static_cast<std::size_t>(ne)),
        armed_col(static_cast<std::size_t>(ne));
    std::vector<std::map<std::string, std::vector<double>>> hists(static_cast<std::size_t>(ne));

    parallel_for(ne, threads, [&](int ie) {
        double eps = epss.at(ie);
        // The protocol parks the lateral pair in an odd (unblockaded) state
        // near its anticrossing; arming then depends on the detuning alone.
        CascadeArming arming = cascade_armed(Parity::odd, eps, cfg.cascade,
                                             cfg.sensor.cascade_gain);
        SenseMode mode = arming.armed ? SenseMode::cascaded : SenseMode::direct;

        std::vector<Parity> labels_even, labels_odd;
        auto& hist = hists[static_cast<std::size_t>(ie)];
        for (int setting = 0; setting < 2; ++setting) { // 0: even prepared, 1: odd prepared
            SpinState st = SpinState::down_down();
            if (setting == 1) st = apply_x_rotation(st, c.target, kPi, frame);
            std::uint64_t pk = static_cast<std::uint64_t>(ie) * 2 +
                               static_cast<std::uint64_t>(setting);
            auto born = make_rng(spec.stream_seed(), Stream::born, pk);
            auto sensor_rng = make_rng(spec.stream_seed(), Stream::sensor, pk);
            for (int s = 0; s < spec.shots; ++s) {
                PsbOutcome psb = psb_project(st, born);
                ReadoutOutcome out = sense(psb.parity, c.pair, cfg.sensor, mode, sensor_rng);
                (setting == 0 ? labels_even : labels_odd).push_back(out.label);
                std::string key = std::string(mode == SenseMode::cascaded ? "cascaded" : "direct") +
                                  (setting == 0 ? "_even" : "_odd");
                hist[key].push_back(out.raw_signal);
            }
        }
        ecol[static_cast<std::size_t>(ie)] = eps;
        vis[static_cast<std::size_t>(ie)] = visibility(labels_even, labels_odd);
        armed_col[static_cast<std::size_t>(ie)] = arming.armed ? 1.0 : 0.0;
    });

    ExperimentResult res;
    res.spec = spec;
    res.columns = {{"eps_lateral_v", ecol}, {"visibility", vis}, {"armed", armed_col}};

    // Histograms from the point nearest the window center and the farthest
    // unarmed point.
    int center_ie = 0, outside_ie = -1;
    double best_d = std::numeric_limits<double>::infinity(), worst_d = -1;
    for (int ie = 0; ie < ne; ++ie) {
        double d = std::abs(epss.at(ie) - cfg.cascade.eps_anticrossing_v);
        if (armed_col[static_cast<std::size_t>(ie)] > 0 && d < best_d) {
            best_d = d;
            center_ie = ie;
        }
        if (armed_col[static_cast<std::size_t>(ie)] == 0 && d > worst_d) {
            worst_d = d;
            outside_ie = ie;
        }
    }
    for (auto& [k, v] : hists[static_cast<std::size_t>(center_ie)]) res.histograms[k] = v;
    if (outside_ie >= 0)
        for (auto& [k, v] : hists[static_cast<std::size_t>(outside_ie)]) res.histograms[k] = v;

    res.scalars["visibility_cascaded"] = vis[static_cast<std::size_t>(center_ie)];
    if (outside_ie >= 0)
        res.scalars["visibility_direct"] = vis[static_cast<std::size_t>(outside_ie)];
    return res;
}

// ---------------------------------------------------------------------------
// Real-time feedback demo
// ---------------------------------------------------------------------------

ExperimentResult run_feedback(const DeviceConfig& cfg, const ExperimentSpec& spec) {
    PairContext c = make_context(cfg, spec.qubit / 2, spec.qubit % 2, spec.backend);
    const int n = spec.cycles;
    const double tau = spec.probe_delay_s;
    const double capture_hz = 1.0 / (4.0 * tau);
    const double t2 = c.noise.t2_star_s[static_cast<std::size_t>(c.target)];
    const double env = std::exp(-std::pow(tau / t2, 2.0));
    const double set_sigma = cfg.sensor.sigma_signal;

    std::vector<double> cycle(static_cast<std::size_t>(n)), drift(static_cast<std::size_t>(n)),
        residual(static_cast<std::size_t>(n)), uncorrected(static_cast<std::size_t>(n)),
        lock_lost(static_cast<std::size_t>(n)), set_peak(static_cast<std::size_t>(n)),
        set_track(static_cast<std::size_t>(n)), set_residual(static_cast<std::size_t>(n));

    double f_true = 0, f_corr = 0; // Larmor drift and applied correction
    double p_true = 0, v_track = 0; // SET peak position and tracked top-gate voltage
    int lock_lost_count = 0;

    for (int k = 0; k < n; ++k) {
        auto kk = static_cast<std::uint64_t>(k);
        auto drift_rng = make_rng(spec.stream_seed(), Stream::drift, kk, 0);
        std::normal_distribution<double> n01(0.0, 1.0);
        f_true += spec.larmor_step_hz * n01(drift_rng);
        p_true += spec.set_step_v * n01(drift_rng);

        // Two-point Ramsey probe at +-quarter fringe.
        double delta = f_true - f_corr;
        double s_true = std::sin(2.0 * kPi * delta * tau) * env;
        double p_plus = 0.5 * (1.0 + s_true);
        double p_minus = 0.5 * (1.0 - s_true);
        if (spec.probe_shots > 0) {
            auto probe_rng = make_rng(spec.stream_seed(), Stream::born, kk, 1);
            std::binomial_distribution<int> bp(spec.probe_shots, std::clamp(p_plus, 0.0, 1.0));
            std::binomial_distribution<int> bm(spec.probe_shots, std::clamp(p_minus, 0.0, 1.0));
            p_plus = static_cast<double>(bp(probe_rng)) / spec.probe_shots;
            p_minus = static_cast<double>(bm(probe_rng)) / spec.probe_shots;
        }
        double s_est = std::clamp((p_plus - p_minus) / std::max(env, 1e-9), -1.0, 1.0);
        double delta_est = std::asin(s_est) / (2.0 * kPi * tau);
        f_corr += spec.feedback_gain * delta_est;

        bool lost = std::abs(delta) > capture_hz;
        lock_lost_count += lost;

        // SET top-gate recentering: three-point parabolic peak search.
        auto set_rng = make_rng(spec.stream_seed(), Stream::sensor, kk);
        auto set_probe = [&](double v) {
            double g = std::exp(-0.5 * std::pow((v - p_true) / spec.set_peak_width_v, 2.0));
            if (spec.probe_shots > 0) {
                std::normal_distribution<double> nn(
                    0.0, set_sigma / std::sqrt(static_cast<double>(spec.probe_shots)));
                g += nn(set_rng);
            }
            return g;
        };
        double s = spec.set_search_step_v;
        double gm = set_probe(v_track - s), g0 = set_probe(v_track), gp = set_probe(v_track + s);
        double denom = gm - 2.0 * g0 + gp;
        if (std::abs(denom) > 1e-12) {
            double step = 0.5 * s * (gm - gp) / denom;
            v_track += std::clamp(step, -s, s);
        }

        cycle[kk] = k;
        drift[kk] = f_true;
        residual[kk] = f_true - f_corr;
        uncorrected[kk] = f_true;
        lock_lost[kk] = lost ? 1.0 : 0.0;
        set_peak[kk] = p_true;
        set_track[kk] = v_track;
        set_residual[kk] = v_track - p_true;
    }

    ExperimentResult res;
    res.spec = spec;
    res.columns = {{"cycle", cycle},
                   {"larmor_drift_hz", drift},
                   {"larmor_residual_hz", residual},
                   {"larmor_uncorrected_hz", uncorrected},
                   {"lock_lost", lock_lost},
                   {"set_peak_v", set_peak},
                   {"set_tracked_v", set_track},
                   {"set_residual_v", set_residual}};

    auto rms = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s / static_cast<double>(v.size()));
    };
    res.scalars["larmor_residual_rms_hz"] = rms(residual);
    res.scalars["larmor_uncorrected_rms_hz"] = rms(uncorrected);
    res.scalars["set_residual_rms_v"] = rms(set_residual);
    res.scalars["lock_lost_count"] = lock_lost_count;
    res.scalars["capture_range_hz"] = capture_hz;
    return res;
}

ExperimentResult run_experiment(const DeviceConfig& cfg, const ExperimentSpec& spec,
                                int threads) {
    switch (spec.kind) {
        case ExperimentKind::chevron: return run_chevron(cfg, spec, threads);
        case ExperimentKind::ramsey_purity: return run_ramsey_purity(cfg, spec, threads);
        case ExperimentKind::hahn: return run_hahn(cfg, spec, threads);
        case ExperimentKind::fingerprint: return run_fingerprint(cfg, spec, threads);
        case ExperimentKind::exchange_spectroscopy:
            return run_exchange_spectroscopy(cfg, spec, threads);
        case ExperimentKind::cz_calibration: return run_cz_calibration(cfg, spec, threads);
        case ExperimentKind::cascade_calibration:
            return run_cascade_calibration(cfg, spec, threads);
        case ExperimentKind::feedback_demo: return run_feedback(cfg, spec);
    }
    throw UsageError("unknown experiment kind");
}

} // namespace spinline
