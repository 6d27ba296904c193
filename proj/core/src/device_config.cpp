#include "spinline/device.hpp"

#include <cmath>
#include <sstream>

namespace spinline {

namespace {

std::array<double, 8> read_8(const ConfigSection& s, const std::string& key) {
    auto v = s.entry(key).as_doubles();
    if (v.size() != 8)
        throw ConfigError("'" + key + "' needs 8 values, got " + std::to_string(v.size()),
                          s.entry(key).line, s.entry(key).column);
    std::array<double, 8> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

std::array<double, 4> read_4(const ConfigSection& s, const std::string& key) {
    auto v = s.entry(key).as_doubles();
    if (v.size() != 4)
        throw ConfigError("'" + key + "' needs 4 values, got " + std::to_string(v.size()),
                          s.entry(key).line, s.entry(key).column);
    std::array<double, 4> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

} // namespace

DeviceConfig DeviceConfig::from_file(const std::string& path) {
    return from_config(ConfigFile::parse_file(path));
}

DeviceConfig DeviceConfig::from_text(const std::string& text) {
    return from_config(ConfigFile::parse_text(text));
}

DeviceConfig DeviceConfig::from_config(const ConfigFile& file) {
    DeviceConfig cfg;
    const auto& dev = file.section("device");

    cfg.n_dots = static_cast<int>(dev.get_int_or("n_dots", 8));
    if (cfg.n_dots != 8)
        throw ConfigError("this model describes the 8-dot array (n_dots = 8)",
                          dev.line());
    cfg.plunger_gates = dev.entry("plungers").as_tokens();
    cfg.barrier_gates = dev.entry("barriers").as_tokens();
    cfg.sensor_gates = dev.entry("sensors").as_tokens();
    if (cfg.plunger_gates.size() != 8 || cfg.barrier_gates.size() != 7 ||
        cfg.sensor_gates.size() != 2)
        throw ConfigError("expected 8 plungers, 7 barriers, 2 sensors", dev.line());

    cfg.charging_energy_mev = read_8(dev, "charging_energy_mev");
    cfg.mutual_charging_mev = read_4(dev, "mutual_charging_mev");
    cfg.reference_potential_mev = read_8(dev, "reference_potential_mev");
    auto occ_max = read_8(dev, "occupancy_max");
    std::array<double, 8> occ_min{};
    if (dev.has("occupancy_min")) occ_min = read_8(dev, "occupancy_min");
    for (int i = 0; i < 8; ++i) {
        cfg.occupancy_max[static_cast<std::size_t>(i)] =
            static_cast<int>(occ_max[static_cast<std::size_t>(i)]);
        cfg.occupancy_min[static_cast<std::size_t>(i)] =
            static_cast<int>(occ_min[static_cast<std::size_t>(i)]);
    }

    // Lever arms: sparse name:value rows, one per dot.
    auto gates = cfg.all_gates();
    cfg.lever_arms = Eigen::MatrixXd::Zero(8, static_cast<Eigen::Index>(gates.size()));
    const auto& arms = file.section("lever_arms");
    for (int dot = 0; dot < 8; ++dot) {
        std::string key = "dot" + std::to_string(dot + 1);
        for (auto& [gate, alpha] : arms.entry(key).as_named_doubles()) {
            cfg.lever_arms(dot, cfg.gate_index(gate)) = alpha;
        }
    }

    const auto& op = file.section("operating_point");
    for (const auto& g : gates) {
        if (!op.has(g))
            throw ConfigError("operating_point is missing gate '" + g + "'", op.line());
        cfg.operating_point.set(g, op.get_double(g));
    }

    const auto& field = file.section("field");
    cfg.field.b0_tesla = field.get_double("b0_tesla");
    cfg.field.b1_scale = field.get_double_or("b1_scale", 1.0);

    for (int q = 0; q < 8; ++q) {
        const auto& s = file.section("qubit " + std::to_string(q + 1));
        QubitParams& qp = cfg.qubits[static_cast<std::size_t>(q)];
        qp.dot_index = q + 1;
        qp.g_factor = s.get_double("g_factor");
        qp.rabi_hz = s.get_double("rabi_hz");
        qp.t2_star_s = s.get_double("t2_star_s");
        qp.t2_hahn_s = s.get_double("t2_hahn_s");
    }

    const auto& ex = file.section("exchange");
    cfg.exchange.j0_hz = ex.get_double("j0_hz");
    cfg.exchange.v0_volts = ex.get_double("v0_volts");
    cfg.exchange.slope_dec_per_v = ex.get_double("slope_dec_per_v");
    cfg.exchange.eps_scale_v = ex.get_double("eps_scale_v");
    cfg.exchange.j_max_hz = ex.get_double_or("j_max_hz", 100e6);

    const auto& noise = file.section("noise");
    std::string backend = noise.get_string_or("backend", "stochastic");
    if (backend == "stochastic")
        cfg.noise.backend = NoiseBackend::stochastic;
    else if (backend == "analytic")
        cfg.noise.backend = NoiseBackend::analytic;
    else
        throw ConfigError("backend must be 'stochastic' or 'analytic', got '" + backend + "'",
                          noise.entry("backend").line, noise.entry("backend").column);
    cfg.noise.derive_sigma_from_t2 = noise.get_bool_or("derive_sigma_from_t2", true);
    cfg.noise.sigma_quasistatic_hz = noise.get_double_or("sigma_quasistatic_hz", 0.0);
    cfg.noise.ou_sigma_hz = noise.get_double_or("ou_sigma_hz", 0.0);
    cfg.noise.ou_tau_s = noise.get_double_or("ou_tau_s", 0.1);
    cfg.noise.envelope_exponent_ramsey = noise.get_double_or("envelope_exponent_ramsey", 2.0);
    cfg.noise.envelope_exponent_hahn = noise.get_double_or("envelope_exponent_hahn", 2.0);
    cfg.noise.seed = static_cast<std::uint64_t>(noise.get_int_or("seed", 0));

    const auto& sen = file.section("sensor");
    cfg.sensor.mu_blocked = sen.get_double("mu_blocked");
    cfg.sensor.mu_unblocked = sen.get_double("mu_unblocked");
    cfg.sensor.mu_blocked_central = sen.get_double("mu_blocked_central");
    cfg.sensor.mu_unblocked_central = sen.get_double("mu_unblocked_central");
    cfg.sensor.cascade_gain = sen.get_double("cascade_gain");
    cfg.sensor.sigma_signal = sen.get_double("sigma_signal");
    cfg.sensor.integration_shots = static_cast<int>(sen.get_int_or("integration_shots", 1));
    if (sen.has("threshold")) cfg.sensor.threshold = sen.get_double("threshold");

    const auto& casc = file.section("cascade");
    cfg.cascade.eps_anticrossing_v = casc.get_double("eps_anticrossing_v");
    cfg.cascade.window_halfwidth_v = casc.get_double("window_halfwidth_v");

    if (file.has_section("sensor_proxy")) {
        const auto& sp = file.section("sensor_proxy");
        cfg.proxy.decay = sp.get_double_or("decay", 0.55);
        cfg.proxy.background_per_volt = sp.get_double_or("background_per_volt", 0.02);
    }

    if (file.has_section("initialization")) {
        const auto& ini = file.section("initialization");
        cfg.herald_probability = ini.get_double_or("herald_probability", 0.5);
        cfg.herald_retry_limit = static_cast<int>(ini.get_int_or("retry_limit", 20));
    }

    const auto& load = file.section("loading");
    cfg.loading.flood_plunger_v = load.get_double_or("flood_plunger_v", 2.4);
    cfg.loading.flood_barrier_v = load.get_double_or("flood_barrier_v", 1.8);
    cfg.loading.reduce_barrier_v = load.get_double_or("reduce_barrier_v", 0.9);
    cfg.loading.block_barrier_v = load.get_double_or("block_barrier_v", -0.6);
    cfg.loading.pushout_sensor_v = load.get_double_or("pushout_sensor_v", 0.2);

    static const char* pair_keys[4] = {"p1p2", "p3p4", "p5p6", "p7p8"};
    for (int p = 0; p < 4; ++p) {
        const auto& s = file.section(std::string("loading ") + pair_keys[p]);
        cfg.loading.loading_gate[static_cast<std::size_t>(p)] = s.get_string("gate");
        for (const auto* row : s.entries("level")) {
            auto vals = row->as_doubles();
            if (vals.size() != 2)
                throw ConfigError("loading level rows are 'voltage count'", row->line,
                                  row->column);
            cfg.loading.levels[static_cast<std::size_t>(p)].push_back(
                {vals[0], static_cast<int>(vals[1])});
        }
        auto& lv = cfg.loading.levels[static_cast<std::size_t>(p)];
        std::sort(lv.begin(), lv.end(),
                  [](const auto& a, const auto& b) { return a.voltage < b.voltage; });
    }

    for (const auto* s : file.sections_with_prefix("exclusion")) {
        ExclusionWindow w;
        w.name = s->name().size() > 10 ? s->name().substr(10) : s->name();
        w.x_axis = s->get_string("x_axis");
        w.y_axis = s->get_string("y_axis");
        auto xr = s->entry("x_range").as_doubles();
        auto yr = s->entry("y_range").as_doubles();
        if (xr.size() != 2 || yr.size() != 2)
            throw ConfigError("exclusion ranges are 'lo hi'", s->line());
        w.x_lo = xr[0];
        w.x_hi = xr[1];
        w.y_lo = yr[0];
        w.y_hi = yr[1];
        cfg.exclusions.push_back(w);
    }

    return cfg;
}

std::vector<Diagnostic> DeviceConfig::validate() const {
    std::vector<Diagnostic> out;
    auto err = [&](const std::string& m) {
        out.push_back({Diagnostic::Severity::error, m});
    };
    auto warn = [&](const std::string& m) {
        out.push_back({Diagnostic::Severity::warning, m});
    };

    auto gates = all_gates();
    for (int dot = 0; dot < n_dots; ++dot) {
        double own = lever_arms(dot, dot); // plunger columns lead the gate order
        for (Eigen::Index g = 0; g < lever_arms.cols(); ++g) {
            double a = lever_arms(dot, g);
            if (a < 0.0 || a > 1.0)
                err("lever arm (dot " + std::to_string(dot + 1) + ", " +
                    gates[static_cast<std::size_t>(g)] + ") outside [0,1]");
            if (g != dot && a >= own)
                err("dot " + std::to_string(dot + 1) +
                    ": own-plunger lever arm must be strictly largest in its row");
        }
    }

    for (int p = 0; p < kPairs; ++p) {
        auto [l, r] = pair_dots(p);
        double ecm = mutual_charging_mev[static_cast<std::size_t>(p)];
        if (!(ecm > 0)) err(pair_name(p) + ": mutual charging must be > 0");
        for (int dot : {l, r}) {
            if (!(charging_energy_mev[static_cast<std::size_t>(dot)] > ecm))
                err("dot " + std::to_string(dot + 1) +
                    ": charging energy must exceed the pair's mutual charging");
        }
    }

    for (const auto& g : gates) {
        if (!operating_point.contains(g)) {
            err("operating point is missing gate '" + g + "'");
        } else if (!std::isfinite(operating_point.volts.at(g))) {
            err("operating point voltage for '" + g + "' is not finite");
        }
    }

    for (const auto& q : qubits) {
        std::string tag = "qubit " + std::to_string(q.dot_index) + ": ";
        if (!(q.rabi_hz > 0)) err(tag + "rabi_hz must be > 0");
        if (!(q.t2_star_s > 0)) err(tag + "t2_star_s must be > 0");
        if (q.t2_hahn_s < q.t2_star_s) err(tag + "t2_hahn_s must be >= t2_star_s");
    }
    if (!(field.b0_tesla > 0)) err("b0_tesla must be > 0");

    if (!(exchange.slope_dec_per_v > 0)) err("exchange slope_dec_per_v must be > 0");
    if (!(exchange.j0_hz > 0)) err("exchange j0_hz must be > 0");
    if (!(exchange.eps_scale_v > 0)) err("exchange eps_scale_v must be > 0");

    try {
        sensor.check();
    } catch (const ConfigError& e) {
        err(e.what());
    }
    try {
        noise.check();
    } catch (const ConfigError& e) {
        err(e.what());
    }

    for (int p = 0; p < kPairs; ++p) {
        const auto& lv = loading.levels[static_cast<std::size_t>(p)];
        for (std::size_t i = 1; i < lv.size(); ++i)
            if (lv[i].count <= lv[i - 1].count)
                err(pair_name(p) + ": loading table must be strictly increasing");
    }

    // Physical-plausibility warnings.
    for (int p = 0; p < kPairs; ++p) {
        double dz = std::abs(zeeman_difference_hz(p));
        ExchangeValue j_at_cz = exchange_j(exchange, exchange.v0_volts);
        if (j_at_cz.hz > 0.1 * dz)
            warn(pair_name(p) + ": exchange at v0 (" + std::to_string(j_at_cz.hz) +
                 " Hz) is comparable to the Zeeman difference (" + std::to_string(dz) +
                 " Hz); CZ phase model is outside its validity range");
    }

    return out;
}

} // namespace spinline
