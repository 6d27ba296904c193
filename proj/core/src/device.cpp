#include "spinline/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spinline {

double GateVoltages::at(const std::string& gate) const {
    auto it = volts.find(gate);
    if (it == volts.end())
        throw ConfigError("gate '" + gate + "' missing from gate voltages");
    if (!std::isfinite(it->second))
        throw ConfigError("gate '" + gate + "' has a non-finite voltage");
    return it->second;
}

double LoadingCalibration::voltage_for_count(int pair, int count) const {
    for (const auto& lv : levels[static_cast<std::size_t>(pair)])
        if (lv.count == count) return lv.voltage;
    static const char* names[4] = {"P1-P2", "P3-P4", "P5-P6", "P7-P8"};
    throw LoadingError(std::string(names[pair]) + ": no calibrated loading voltage for N=" +
                       std::to_string(count));
}

int LoadingCalibration::count_for_voltage(int pair, double v) const {
    int count = 0;
    for (const auto& lv : levels[static_cast<std::size_t>(pair)]) {
        if (lv.voltage <= v) count = lv.count;
    }
    return count;
}

std::string DeviceConfig::pair_name(int pair) const {
    auto [l, r] = pair_dots(pair);
    return plunger_gates[static_cast<std::size_t>(l)] + "-" +
           plunger_gates[static_cast<std::size_t>(r)];
}

int DeviceConfig::n_gates() const {
    return static_cast<int>(plunger_gates.size() + barrier_gates.size() +
                            sensor_gates.size());
}

std::vector<std::string> DeviceConfig::all_gates() const {
    std::vector<std::string> g = plunger_gates;
    g.insert(g.end(), barrier_gates.begin(), barrier_gates.end());
    g.insert(g.end(), sensor_gates.begin(), sensor_gates.end());
    return g;
}

int DeviceConfig::gate_index(const std::string& name) const {
    auto gates = all_gates();
    for (std::size_t i = 0; i < gates.size(); ++i)
        if (gates[i] == name) return static_cast<int>(i);
    throw ConfigError("unknown gate '" + name + "'");
}

double DeviceConfig::zeeman_difference_hz(int pair) const {
    auto [l, r] = pair_dots(pair);
    return larmor_frequency(qubits[static_cast<std::size_t>(l)], field) -
           larmor_frequency(qubits[static_cast<std::size_t>(r)], field);
}

namespace {

/// Chemical potential of one dot in meV: lever-arm weighted gate voltages
/// (V -> meV with unit electron charge) minus the per-dot reference offset.
double dot_potential_mev(const DeviceConfig& cfg, const GateVoltages& v, int dot) {
    auto gates = cfg.all_gates();
    double mu = 0;
    for (std::size_t g = 0; g < gates.size(); ++g) {
        double alpha = cfg.lever_arms(dot, static_cast<Eigen::Index>(g));
        if (alpha != 0.0) mu += alpha * v.at(gates[g]);
    }
    return 1000.0 * mu - cfg.reference_potential_mev[static_cast<std::size_t>(dot)];
}

void check_well_posed(const DeviceConfig& cfg, int pair) {
    auto [l, r] = DeviceConfig::pair_dots(pair);
    double ecl = cfg.charging_energy_mev[static_cast<std::size_t>(l)];
    double ecr = cfg.charging_energy_mev[static_cast<std::size_t>(r)];
    double ecm = cfg.mutual_charging_mev[static_cast<std::size_t>(pair)];
    if (!(ecl > 0) || !(ecr > 0) || !(ecl * ecr > ecm * ecm))
        throw ModelError("constant-interaction energy unbounded below for pair " +
                         cfg.pair_name(pair));
}

} // namespace

double pair_energy(const DeviceConfig& cfg, const GateVoltages& v, int pair, int n_left,
                   int n_right) {
    auto [l, r] = DeviceConfig::pair_dots(pair);
    double ecl = cfg.charging_energy_mev[static_cast<std::size_t>(l)];
    double ecr = cfg.charging_energy_mev[static_cast<std::size_t>(r)];
    double ecm = cfg.mutual_charging_mev[static_cast<std::size_t>(pair)];
    double mul = dot_potential_mev(cfg, v, l);
    double mur = dot_potential_mev(cfg, v, r);
    double nl = n_left, nr = n_right;
    return 0.5 * ecl * nl * nl + 0.5 * ecr * nr * nr + ecm * nl * nr - nl * mul - nr * mur;
}

std::pair<int, int> ground_state_pair(const DeviceConfig& cfg, const GateVoltages& v,
                                      int pair, std::optional<int> total) {
    check_well_posed(cfg, pair);
    auto [l, r] = DeviceConfig::pair_dots(pair);
    int lmin = cfg.occupancy_min[static_cast<std::size_t>(l)];
    int lmax = cfg.occupancy_max[static_cast<std::size_t>(l)];
    int rmin = cfg.occupancy_min[static_cast<std::size_t>(r)];
    int rmax = cfg.occupancy_max[static_cast<std::size_t>(r)];

    double best = std::numeric_limits<double>::infinity();
    std::pair<int, int> arg{lmin, rmin};
    bool found = false;
    auto consider = [&](int nl, int nr) {
        double e = pair_energy(cfg, v, pair, nl, nr);
        if (!found || e < best) {
            best = e;
            arg = {nl, nr};
            found = true;
        }
    };

    if (total) {
        int lo = std::max(lmin, *total - rmax);
        int hi = std::min(lmax, *total - rmin);
        if (lo > hi)
            throw UsageError("isolated total " + std::to_string(*total) +
                             " not representable within the occupancy window of " +
                             cfg.pair_name(pair));
        // Ascending nl: the first minimum encountered is the lexicographically
        // smallest, which settles degenerate ties deterministically.
        for (int nl = lo; nl <= hi; ++nl) consider(nl, *total - nl);
    } else {
        for (int nl = lmin; nl <= lmax; ++nl)
            for (int nr = rmin; nr <= rmax; ++nr) consider(nl, nr);
    }
    return arg;
}

ChargeConfiguration ground_state_occupation(
    const DeviceConfig& cfg, const GateVoltages& v,
    const std::array<std::optional<int>, 4>& pair_totals) {
    ChargeConfiguration n;
    for (int p = 0; p < DeviceConfig::kPairs; ++p) {
        auto [nl, nr] = ground_state_pair(cfg, v, p, pair_totals[static_cast<std::size_t>(p)]);
        auto [l, r] = DeviceConfig::pair_dots(p);
        n.occupation[static_cast<std::size_t>(l)] = nl;
        n.occupation[static_cast<std::size_t>(r)] = nr;
    }
    return n;
}

GateVoltages apply_detuning(const GateVoltages& v, const DetuningAxis& axis,
                            const DeviceConfig& cfg, double eps_volts) {
    auto [l, r] = DeviceConfig::pair_dots(axis.pair);
    GateVoltages out = v;
    const std::string& pl = cfg.plunger_gates[static_cast<std::size_t>(l)];
    const std::string& pr = cfg.plunger_gates[static_cast<std::size_t>(r)];
    out.set(pl, v.at(pl) + eps_volts / 2.0);
    out.set(pr, v.at(pr) - eps_volts / 2.0);
    return out;
}

double sensor_proxy_value(const DeviceConfig& cfg, const GateVoltages& v,
                          const ChargeConfiguration& n) {
    double value = 0;
    for (int dot = 0; dot < cfg.n_dots; ++dot) {
        double w = std::pow(cfg.proxy.decay, dot) + std::pow(cfg.proxy.decay, cfg.n_dots - 1 - dot);
        value += w * n.occupation[static_cast<std::size_t>(dot)];
    }
    for (const auto& g : cfg.plunger_gates) value += cfg.proxy.background_per_volt * v.at(g);
    return value;
}

StabilityMap stability_map(const DeviceConfig& cfg, int pair, const MapAxis& x,
                           const MapAxis& y, std::optional<int> isolated_total,
                           std::uint64_t seed) {
    if (x.gate == y.gate) throw UsageError("stability map axes must be distinct gates");
    if (x.points < 2 || y.points < 2)
        throw UsageError("stability map resolution must be at least 2x2");

    StabilityMap map;
    map.pair = pair;
    map.x = x;
    map.y = y;
    map.isolated_total = isolated_total;
    map.seed = seed;
    map.value.resize(static_cast<std::size_t>(x.points) * static_cast<std::size_t>(y.points));
    map.n_left.resize(map.value.size());
    map.n_right.resize(map.value.size());

    // Other pairs stay frozen at their operating-point ground state.
    ChargeConfiguration frozen = ground_state_occupation(cfg, cfg.operating_point);
    auto [dl, dr] = DeviceConfig::pair_dots(pair);

    for (int iy = 0; iy < y.points; ++iy) {
        for (int ix = 0; ix < x.points; ++ix) {
            GateVoltages v = cfg.operating_point;
            v.set(x.gate, x.at(ix));
            v.set(y.gate, y.at(iy));
            std::size_t k = static_cast<std::size_t>(iy) * static_cast<std::size_t>(x.points) +
                            static_cast<std::size_t>(ix);
            bool excluded = false;
            for (const auto& w : cfg.exclusions)
                if (w.x_axis == x.gate && w.y_axis == y.gate && w.contains(x.at(ix), y.at(iy)))
                    excluded = true;
            if (excluded) {
                map.value[k] = std::numeric_limits<double>::quiet_NaN();
                map.n_left[k] = -1;
                map.n_right[k] = -1;
                continue;
            }
            auto [nl, nr] = ground_state_pair(cfg, v, pair, isolated_total);
            ChargeConfiguration n = frozen;
            n.occupation[static_cast<std::size_t>(dl)] = nl;
            n.occupation[static_cast<std::size_t>(dr)] = nr;
            map.value[k] = sensor_proxy_value(cfg, v, n);
            map.n_left[k] = nl;
            map.n_right[k] = nr;
        }
    }
    return map;
}

namespace {

GateVoltages flood_preset(const DeviceConfig& cfg) {
    GateVoltages v = cfg.operating_point;
    for (const auto& g : cfg.plunger_gates) v.set(g, cfg.loading.flood_plunger_v);
    for (const auto& g : cfg.barrier_gates) v.set(g, cfg.loading.flood_barrier_v);
    return v;
}

} // namespace

std::vector<LoadingStage> loading_stages(const DeviceConfig& cfg,
                                         const std::array<int, 4>& targets) {
    const auto& cal = cfg.loading;
    const auto& jb = cfg.barrier_gates; // J1..J7 = jb[0..6]
    std::vector<LoadingStage> stages;

    // A: initial DC operating potential.
    stages.push_back({'A', cfg.operating_point, {}});

    // B: flood from both SET reservoirs, 2DEG across the whole array.
    LoadingStage b{'B', flood_preset(cfg), {0, 1, 2, 3, 4, 5, 6, 7}};
    stages.push_back(b);

    // C: calibrated loading voltages on P4/P5 set the central totals.
    LoadingStage c = b;
    c.label = 'C';
    c.preset.set(cal.loading_gate[1], cal.voltage_for_count(1, targets[1]));
    c.preset.set(cal.loading_gate[2], cal.voltage_for_count(2, targets[2]));
    c.preset.set(jb[3], cal.reduce_barrier_v); // J4
    c.preset.set(jb[4], cal.reduce_barrier_v); // J5
    stages.push_back(c);

    // D: blocking potentials trap the central dots.
    LoadingStage d = c;
    d.label = 'D';
    d.preset.set(jb[1], cal.block_barrier_v); // J2
    d.preset.set(jb[2], cal.block_barrier_v); // J3
    d.preset.set(jb[5], cal.block_barrier_v); // J6
    d.extent_2deg = {0, 1, 6, 7};
    stages.push_back(d);

    // E: calibrated lateral loading voltages on P2/P7.
    LoadingStage e = d;
    e.label = 'E';
    e.preset.set(cal.loading_gate[0], cal.voltage_for_count(0, targets[0]));
    e.preset.set(cal.loading_gate[3], cal.voltage_for_count(3, targets[3]));
    e.preset.set(jb[0], cal.reduce_barrier_v); // J1
    e.preset.set(jb[6], cal.reduce_barrier_v); // J7
    stages.push_back(e);

    // F: trap the lateral dots and push the Fermi sea back to the SETs.
    LoadingStage f = e;
    f.label = 'F';
    for (const auto& g : cfg.sensor_gates) f.preset.set(g, cal.pushout_sensor_v);
    f.extent_2deg = {};
    stages.push_back(f);

    // G: return to the initial DC operating potential.
    stages.push_back({'G', cfg.operating_point, {}});
    return stages;
}

LoadingResult run_loading_sequence(const DeviceConfig& cfg,
                                   const std::array<int, 4>& targets) {
    auto stages = loading_stages(cfg, targets);

    // Reservoir proxy while a pair is still flooded: its maximum calibrated
    // count (the Fermi sea holds at least that many electrons).
    std::array<int, 4> totals{};
    std::array<bool, 4> flooded{false, false, false, false};
    auto flood_total = [&](int pair) {
        const auto& lv = cfg.loading.levels[static_cast<std::size_t>(pair)];
        return lv.empty() ? 0 : lv.back().count;
    };

    LoadingResult result;
    for (const auto& stage : stages) {
        switch (stage.label) {
            case 'A':
                totals = {0, 0, 0, 0};
                break;
            case 'B':
                for (int p = 0; p < 4; ++p) {
                    flooded[static_cast<std::size_t>(p)] = true;
                    totals[static_cast<std::size_t>(p)] = flood_total(p);
                }
                break;
            case 'C':
                totals[1] = targets[1];
                totals[2] = targets[2];
                break;
            case 'D':
                flooded[1] = flooded[2] = false; // trapped
                break;
            case 'E':
                totals[0] = targets[0];
                totals[3] = targets[3];
                break;
            case 'F':
                flooded[0] = flooded[3] = false; // trapped
                break;
            case 'G':
                break;
        }
        result.stages.push_back({stage, totals, flooded});
    }

    std::array<std::optional<int>, 4> pair_totals;
    for (int p = 0; p < 4; ++p) pair_totals[static_cast<std::size_t>(p)] = targets[static_cast<std::size_t>(p)];
    result.final_occupation = ground_state_occupation(cfg, cfg.operating_point, pair_totals);
    return result;
}

} // namespace spinline
