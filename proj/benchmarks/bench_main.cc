#include <benchmark/benchmark.h>

#include "spinline/analysis.hpp"
#include "spinline/device.hpp"
#include "spinline/experiments.hpp"
#include "spinline/rng.hpp"
#include "spinline/runner.hpp"

#include <cmath>

using namespace spinline;

namespace {

const DeviceConfig& device() {
    static DeviceConfig cfg = DeviceConfig::from_text(default_config_text());
    return cfg;
}

void BM_GroundStatePair(benchmark::State& state) {
    const DeviceConfig& cfg = device();
    GateVoltages v = cfg.operating_point;
    int i = 0;
    for (auto _ : state) {
        v.set("P1", 1.74 + 0.0001 * (i++ % 600));
        benchmark::DoNotOptimize(ground_state_pair(cfg, v, 0, 12));
    }
}
BENCHMARK(BM_GroundStatePair);

void BM_StabilityMap(benchmark::State& state) {
    const DeviceConfig& cfg = device();
    MapAxis x{"P1", 1.74, 1.86, static_cast<int>(state.range(0))};
    MapAxis y{"P2", 1.74, 1.86, static_cast<int>(state.range(0))};
    for (auto _ : state) benchmark::DoNotOptimize(stability_map(cfg, 0, x, y, 12));
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_StabilityMap)->Arg(32)->Arg(64);

void BM_EvolveDriven(benchmark::State& state) {
    PairHamiltonian h;
    h.drive_hz = {200e3, 200e3};
    h.detuning_hz = {0, 13.6e6};
    h.exchange_hz = 107;
    SpinState s = SpinState::down_down();
    for (auto _ : state) benchmark::DoNotOptimize(evolve(s, h, 2.5e-6));
}
BENCHMARK(BM_EvolveDriven);

void BM_EvolveFreeStochastic(benchmark::State& state) {
    const DeviceConfig& cfg = device();
    PairNoiseParams p = make_pair_noise(cfg.noise, cfg.qubits[0], cfg.qubits[1]);
    SpinState s = apply_x_rotation(SpinState::down_down(), 0, kPi / 2);
    std::uint64_t i = 0;
    for (auto _ : state) {
        NoiseRealization nr(p, make_rng(1, Stream::noise, 0, i++));
        benchmark::DoNotOptimize(evolve(s, PairHamiltonian{}, 40e-6, &nr));
    }
}
BENCHMARK(BM_EvolveFreeStochastic);

void BM_FitDecay(benchmark::State& state) {
    std::vector<double> t, y;
    for (int i = 0; i < 30; ++i) {
        double x = 1e-6 + 100e-6 * i / 29.0;
        t.push_back(x);
        y.push_back(std::exp(-std::pow(x / 41e-6, 2.0)) + 0.01 * std::sin(i));
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_decay(t, y, DecayModel::gaussian_ramsey));
}
BENCHMARK(BM_FitDecay);

void BM_ChevronPointShot(benchmark::State& state) {
    const DeviceConfig& cfg = device();
    ExperimentSpec spec;
    spec.kind = ExperimentKind::chevron;
    spec.qubit = 0;
    spec.axes = {{"offset_hz", -0.4e6, 0.4e6, 3}, {"duration_s", 0, 8e-6, 3}};
    spec.shots = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_chevron(cfg, spec, 1));
    state.SetItemsProcessed(state.iterations() * 9 * state.range(0));
}
BENCHMARK(BM_ChevronPointShot)->Arg(50);

} // namespace

BENCHMARK_MAIN();
