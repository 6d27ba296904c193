// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Tolerances are pinned here, not configurable.

#include "spinline/analysis.hpp"
#include "spinline/device.hpp"
#include "spinline/experiments.hpp"
#include "spinline/noise.hpp"
#include "spinline/rng.hpp"
#include "spinline/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>

using namespace spinline;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("CRITERION %2d %-24s %s  (%s)\n", criterion, name.c_str(),
                pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

DeviceConfig default_device() {
    return DeviceConfig::from_text(default_config_text());
}

ExperimentSpec spec_of(const DeviceConfig&, const std::string& name) {
    auto file = ConfigFile::parse_text(default_config_text());
    return ExperimentSpec::from_section(file.section("experiment " + name));
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), f, a, b, c);
    return buf;
}

// 1. Ramsey recovery: quasi-static noise from T2* = 41 us, 30 delays x 200
//    shots, fitted within +-10%, single-threaded wall time < 2 min.
void criterion_1() {
    DeviceConfig cfg = default_device();
    cfg.noise.ou_sigma_hz = 0; // quasi-static noise derived from T2* only
    ExperimentSpec spec = spec_of(cfg, "ramsey-q1");
    spec.seed = 101;
    auto t0 = std::chrono::steady_clock::now();
    ExperimentResult res = run_ramsey_purity(cfg, spec, 1);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double t2 = res.scalars.count("t2_star_fit_s") ? res.scalars.at("t2_star_fit_s") : 0;
    bool pass = std::abs(t2 - 41e-6) <= 0.10 * 41e-6 && secs < 120.0;
    report(1, "ramsey_recovery", pass,
           fmt("T2* fit %.3g us vs 41 us, %.2f s runtime", t2 * 1e6, secs));
}

// 2. Hahn recovery: analytic backend within +-10%; stochastic OU backend,
//    via the calibration mapping, within +-20%.
void criterion_2() {
    DeviceConfig cfg = default_device();
    ExperimentSpec spec = spec_of(cfg, "hahn-q1");
    spec.seed = 202;
    spec.backend = NoiseBackend::analytic;
    ExperimentResult ana = run_hahn(cfg, spec, 1);
    double t2_ana = ana.scalars.count("t2_hahn_fit_s") ? ana.scalars.at("t2_hahn_fit_s") : 0;

    // Stochastic arm: OU parameters from the inverse calibration map.
    DeviceConfig cfg2 = default_device();
    cfg2.noise.ou_tau_s = 0.01;
    cfg2.noise.ou_sigma_hz = ou_sigma_for_hahn_t2(1.31e-3, cfg2.noise.ou_tau_s);
    ExperimentSpec spec2 = spec_of(cfg2, "hahn-q1");
    spec2.seed = 203;
    spec2.backend = NoiseBackend::stochastic;
    ExperimentResult sto = run_hahn(cfg2, spec2, 1);
    double t2_sto = sto.scalars.count("t2_hahn_fit_s") ? sto.scalars.at("t2_hahn_fit_s") : 0;

    bool pass = std::abs(t2_ana - 1.31e-3) <= 0.10 * 1.31e-3 &&
                std::abs(t2_sto - 1.31e-3) <= 0.20 * 1.31e-3;
    report(2, "hahn_recovery", pass,
           fmt("analytic %.4g ms, stochastic %.4g ms vs 1.31 ms", t2_ana * 1e3, t2_sto * 1e3));
}

// 3. Exchange slope: end-to-end spectroscopy recovers 33.69 dec/V +- 0.5.
void criterion_3() {
    DeviceConfig cfg = default_device();
    ExperimentSpec spec = spec_of(cfg, "exchange-turnon");
    spec.seed = 303;
    ExperimentResult res = run_exchange_spectroscopy(cfg, spec, 1);
    double slope = res.scalars.at("slope_dec_per_v");
    bool pass = std::abs(slope - 33.69) <= 0.5;
    report(3, "exchange_slope", pass, fmt("%.3f dec/V vs 33.69 +- 0.5", slope));
}

// 4. Chevron fidelity: fitted fR within +-3% for all 8 qubits; grids pass
//    the delta -> -delta symmetry within 3 sigma (<= 1% of mirrored pairs out).
void criterion_4() {
    DeviceConfig cfg = default_device();
    bool pass = true;
    std::string detail;
    for (int q = 0; q < 8; ++q) {
        ExperimentSpec spec = spec_of(cfg, "chevron-q" + std::to_string(q + 1));
        spec.seed = 404 + static_cast<std::uint64_t>(q);
        ExperimentResult res = run_chevron(cfg, spec, 1);
        double want = cfg.qubits[static_cast<std::size_t>(q)].rabi_hz;
        double got = res.scalars.count("f_rabi_fit_hz") ? res.scalars.at("f_rabi_fit_hz") : 0;
        bool fit_ok = std::abs(got - want) <= 0.03 * want;

        const auto& p = res.column("p_odd").values;
        const int nx = spec.axes[0].points, ny = spec.axes[1].points;
        int violations = 0, pairs = 0;
        for (int iy = 0; iy < ny; ++iy)
            for (int ix = 0; ix < nx / 2; ++ix) {
                double a = p[static_cast<std::size_t>(iy * nx + ix)];
                double b = p[static_cast<std::size_t>(iy * nx + (nx - 1 - ix))];
                double var = (a * (1 - a) + b * (1 - b)) / spec.shots + 1e-12;
                ++pairs;
                violations += std::abs(a - b) > 3.0 * std::sqrt(var);
            }
        bool sym_ok = violations <= pairs / 100;
        if (!fit_ok || !sym_ok) {
            pass = false;
            detail += fmt("q%d: fR %.1f kHz (want %.1f) ", q + 1, got / 1e3, want / 1e3);
        }
    }
    if (pass) detail = "8/8 qubits within 3%, symmetry within 3 sigma";
    report(4, "chevron_fidelity", pass, detail);
}

// 5. Addressability: a resonant pi pulse on any qubit perturbs its DQD
//    partner's excited population by < 1e-3 (off-resonant Rabi bound); other
//    DQDs are untouched by construction (independent unit cells).
void criterion_5() {
    DeviceConfig cfg = default_device();
    bool pass = true;
    double worst = 0;
    for (int q = 0; q < 8; ++q) {
        int pair = q / 2, target = q % 2, partner = 1 - target;
        auto [l, r] = DeviceConfig::pair_dots(pair);
        const QubitParams& qt = cfg.qubits[static_cast<std::size_t>(q)];
        const QubitParams& qp = cfg.qubits[static_cast<std::size_t>(target == 0 ? r : l)];
        double f_t = larmor_frequency(qt, cfg.field);
        double f_p = larmor_frequency(qp, cfg.field);

        PairHamiltonian h;
        h.detuning_hz[static_cast<std::size_t>(target)] = 0;
        h.detuning_hz[static_cast<std::size_t>(partner)] = f_p - f_t;
        h.drive_hz[static_cast<std::size_t>(target)] = qt.rabi_hz;
        h.drive_hz[static_cast<std::size_t>(partner)] = qp.rabi_hz; // same antenna
        double t_pi = 1.0 / (2.0 * qt.rabi_hz);

        // Partner starts down; scan the pulse for its maximum excursion.
        double max_pop = 0;
        for (int k = 1; k <= 64; ++k) {
            SpinState s = evolve(SpinState::down_down(), h, t_pi * k / 64.0);
            double pop = partner == 1
                             ? s.population(SpinState::kDownUp) + s.population(SpinState::kUpUp)
                             : s.population(SpinState::kUpDown) + s.population(SpinState::kUpUp);
            max_pop = std::max(max_pop, pop);
        }
        worst = std::max(worst, max_pop);
        if (max_pop >= 1e-3) pass = false;
    }
    report(5, "addressability", pass, fmt("worst partner excursion %.2e (< 1e-3)", worst));
}

// 6. Readout ordering: cascaded visibility strictly above direct central.
void criterion_6() {
    DeviceConfig cfg = default_device();
    ExperimentSpec spec = spec_of(cfg, "cascade-cal");
    spec.seed = 606;
    ExperimentResult res = run_cascade_calibration(cfg, spec, 1);
    double vc = res.scalars.at("visibility_cascaded");
    double vd = res.scalars.at("visibility_direct");
    report(6, "readout_ordering", vc > vd, fmt("cascaded %.4f > direct %.4f", vc, vd));
}

// 7. CZ correctness: conditional phase pi within 1 degree (noiseless model);
//    CZ^2 is the identity on computational-basis populations within 1e-6.
void criterion_7() {
    DeviceConfig cfg = default_device();
    ExperimentSpec spec = spec_of(cfg, "cz-cal");
    spec.seed = 707;
    spec.backend = NoiseBackend::analytic;
    ExperimentResult res = run_cz_calibration(cfg, spec, 1);
    double conditional = std::abs(res.scalars.at("conditional_phase_rad"));
    bool phase_ok = std::abs(conditional - kPi) <= kPi / 180.0;

    double j = res.scalars.at("j_hz"), dur = res.scalars.at("cz_duration_s");
    double chosen = res.scalars.at("chosen_correction_rad");
    double worst = 0;
    for (int basis = 0; basis < 4; ++basis) {
        SpinState probe = SpinState::basis(basis);
        // Dress with superpositions to exercise coherences as well.
        probe = apply_x_rotation(probe, 0, kPi / 3);
        probe = apply_x_rotation(probe, 1, kPi / 5);
        SpinState twice = probe;
        for (int k = 0; k < 2; ++k) {
            twice = apply_exchange_phase(twice, j, dur);
            twice = apply_z_phase(twice, 0, -chosen);
            twice = apply_z_phase(twice, 1, -chosen);
        }
        for (int i = 0; i < 4; ++i)
            worst = std::max(worst, std::abs(twice.population(i) - probe.population(i)));
    }
    bool cz2_ok = worst < 1e-6;
    report(7, "cz_correctness", phase_ok && cz2_ok,
           fmt("|conditional| %.6f rad, CZ^2 population drift %.2e", conditional, worst));
}

// 8. Loading determinism: the control occupations from the default calibration on
//    every seed; conservation after trapping, exactly.
void criterion_8() {
    DeviceConfig cfg = default_device();
    bool pass = true;
    std::string detail = "(9-3)(3-3)(3-7)(3-1) on seeds 1..5";
    for (std::uint64_t seed = 1; seed <= 5 && pass; ++seed) {
        // The loading model is deterministic; seeds must not change anything.
        (void)make_rng(seed, Stream::generic);
        LoadingResult res = run_loading_sequence(cfg, {12, 6, 10, 4});
        if (res.final_occupation.occupation != std::array<int, 8>{9, 3, 3, 3, 3, 7, 3, 1})
            pass = false;
        std::array<int, 4> trap_stage{5, 3, 3, 5}; // F=5, D=3 in stage order A..G
        for (std::size_t s = 0; s < res.stages.size(); ++s)
            for (int p = 0; p < 4; ++p)
                if (static_cast<int>(s) >= trap_stage[static_cast<std::size_t>(p)] &&
                    res.stages[s].pair_totals[static_cast<std::size_t>(p)] !=
                        std::array<int, 4>{12, 6, 10, 4}[static_cast<std::size_t>(p)])
                    pass = false;
    }
    report(8, "loading_determinism", pass, detail);
}

// 9. Oracle equivalence: ground_state_occupation vs exhaustive enumeration
//    for all DQD totals <= 12 over a 50x50 voltage grid (exact).
void criterion_9() {
    DeviceConfig cfg = default_device();
    bool pass = true;
    long checks = 0;
    for (int pair = 0; pair < 4 && pass; ++pair) {
        auto [dl, dr] = DeviceConfig::pair_dots(pair);
        const std::string& gl = cfg.plunger_gates[static_cast<std::size_t>(dl)];
        const std::string& gr = cfg.plunger_gates[static_cast<std::size_t>(dr)];
        for (int ix = 0; ix < 50 && pass; ++ix) {
            for (int iy = 0; iy < 50 && pass; ++iy) {
                GateVoltages v = cfg.operating_point;
                v.set(gl, 1.74 + 0.12 * ix / 49.0);
                v.set(gr, 1.74 + 0.12 * iy / 49.0);
                for (int total = 0; total <= 12; ++total) {
                    auto got = ground_state_pair(cfg, v, pair, total);
                    // Exhaustive enumeration with the same tie-break.
                    double best = std::numeric_limits<double>::infinity();
                    std::pair<int, int> want{-1, -1};
                    for (int nl = 0; nl <= total; ++nl) {
                        int nr = total - nl;
                        if (nl > cfg.occupancy_max[static_cast<std::size_t>(dl)] ||
                            nr > cfg.occupancy_max[static_cast<std::size_t>(dr)])
                            continue;
                        double e = pair_energy(cfg, v, pair, nl, nr);
                        if (e < best) {
                            best = e;
                            want = {nl, nr};
                        }
                    }
                    ++checks;
                    if (got != want) pass = false;
                }
            }
        }
    }
    report(9, "oracle_equivalence", pass, fmt("%.0f exact comparisons", double(checks)));
}

// 10. Numerical hygiene: trace/Hermiticity/PSD tolerances over 1e5 randomized
//     operation chains.
void criterion_10() {
    DeviceConfig cfg = default_device();
    PairNoiseParams noise = make_pair_noise(cfg.noise, cfg.qubits[0], cfg.qubits[1]);
    bool pass = true;
    double worst_trace = 0, worst_herm = 0, worst_eig = 0;

    const int chains = 100000;
    for (int i = 0; i < chains; ++i) {
        auto rng = make_rng(1010, Stream::generic, static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        std::uniform_int_distribution<int> op_pick(0, 5);

        SpinState s = u01(rng) < 0.5 ? SpinState::down_down() : SpinState::mixed_odd();
        NoiseRealization nr(noise, make_rng(1011, Stream::noise,
                                            static_cast<std::uint64_t>(i)));
        int ops = 1 + static_cast<int>(u01(rng) * 5);
        for (int k = 0; k < ops; ++k) {
            switch (op_pick(rng)) {
                case 0:
                    s = apply_x_rotation(s, u01(rng) < 0.5 ? 0 : 1,
                                         (2.0 * u01(rng) - 1.0) * 2.0 * kPi);
                    break;
                case 1:
                    s = apply_z_phase(s, u01(rng) < 0.5 ? 0 : 1, u01(rng) * 2.0 * kPi);
                    break;
                case 2:
                    s = apply_exchange_phase(s, u01(rng) * 1e6, u01(rng) * 5e-6);
                    break;
                case 3: {
                    PairHamiltonian h;
                    h.detuning_hz = {u01(rng) * 2e5, u01(rng) * 2e5};
                    h.drive_hz = {u01(rng) * 2e5, u01(rng) * 2e5};
                    h.exchange_hz = u01(rng) * 2e5;
                    s = evolve(s, h, u01(rng) * 10e-6, &nr);
                    break;
                }
                case 4:
                    s = evolve(s, PairHamiltonian{}, u01(rng) * 50e-6, &nr);
                    break;
                case 5: {
                    auto born = make_rng(1012, Stream::born, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(k));
                    s = psb_project(s, born).state;
                    break;
                }
            }
        }
        worst_trace = std::max(worst_trace, s.trace_deviation());
        worst_herm = std::max(worst_herm, s.hermiticity_deviation());
        worst_eig = std::max(worst_eig, -s.min_eigenvalue());
        if (s.trace_deviation() > 1e-9 || s.hermiticity_deviation() > 1e-12 ||
            s.min_eigenvalue() < -1e-9) {
            pass = false;
            break;
        }
    }
    report(10, "numerical_hygiene", pass,
           fmt("worst trace %.1e, herm %.1e, eig %.1e", worst_trace, worst_herm, worst_eig));
}

} // namespace

int main() {
    std::printf("spinline acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
}
