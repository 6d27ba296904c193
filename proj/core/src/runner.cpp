#include "spinline/runner.hpp"

#include "spinline/version.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numeric>

namespace spinline {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentSpec spec_with_overrides(const ConfigSection& section,
                                   const RunOverrides& overrides) {
    ExperimentSpec spec = ExperimentSpec::from_section(section);
    if (overrides.seed) spec.seed = *overrides.seed;
    if (overrides.backend) spec.backend = overrides.backend;
    if (overrides.shots) spec.shots = *overrides.shots;
    return spec;
}

std::array<int, 4> loading_targets(const ConfigFile& file) {
    auto v = file.section("loading").entry("targets").as_doubles();
    if (v.size() != 4) throw ConfigError("loading targets must list 4 per-DQD totals");
    return {static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
            static_cast<int>(v[3])};
}

MapAxis map_axis(const ConfigSection& s, const std::string& key) {
    auto toks = s.entry(key).as_tokens();
    if (toks.size() != 4)
        throw ConfigError("map axis '" + key + "' is 'gate start stop points'",
                          s.entry(key).line, s.entry(key).column);
    return {toks[0], std::stod(toks[1]), std::stod(toks[2]), std::stoi(toks[3])};
}

bool all_fits_converged(const ExperimentResult& res) {
    for (const auto& f : res.fits)
        if (!f.converged) return false;
    return res.scalars.count("fit_failed") == 0;
}

} // namespace

RunOutcome run_named(const ConfigFile& file, const std::string& name,
                     const RunOverrides& overrides) {
    auto t0 = std::chrono::steady_clock::now();
    DeviceConfig cfg = DeviceConfig::from_config(file);

    RunOutcome outcome;
    outcome.manifest.config_hash = file.content_hash();
    outcome.manifest.version = kVersion;
    outcome.manifest.seed = overrides.seed.value_or(0);

    if (file.has_section("experiment " + name)) {
        ExperimentSpec spec =
            spec_with_overrides(file.section("experiment " + name), overrides);
        outcome.manifest.seed = spec.seed;
        ExperimentResult res = run_experiment(cfg, spec, overrides.threads);
        outcome.manifest.files =
            write_experiment_outputs(overrides.out_dir, name, res, outcome.manifest.config_hash);
        outcome.fits_converged = all_fits_converged(res);
    } else if (file.has_section("map " + name)) {
        const auto& s = file.section("map " + name);
        int pair = static_cast<int>(s.get_int("pair")) - 1;
        MapAxis x = map_axis(s, "x");
        MapAxis y = map_axis(s, "y");
        std::optional<int> total;
        if (s.has("total")) total = static_cast<int>(s.get_int("total"));
        StabilityMap map =
            stability_map(cfg, pair, x, y, total, overrides.seed.value_or(0));
        outcome.manifest.files =
            write_stability_map_outputs(overrides.out_dir, name, map, outcome.manifest.config_hash);
    } else if (name == "loading") {
        auto targets = loading_targets(file);
        LoadingResult res = run_loading_sequence(cfg, targets);
        outcome.manifest.files = write_loading_outputs(overrides.out_dir, name, res, targets,
                                                       outcome.manifest.config_hash);
    } else {
        throw ConfigError("unknown experiment '" + name + "' (no [experiment " + name +
                          "] or [map " + name + "] section)");
    }

    outcome.manifest.duration_s = seconds_since(t0);
    std::string manifest_path =
        (fs::path(overrides.out_dir) / (name + "_manifest.json")).string();
    outcome.manifest.files.push_back(manifest_path);
    write_manifest(manifest_path, outcome.manifest);
    return outcome;
}

RunOutcome reproduce_paper(const ConfigFile& file, const RunOverrides& overrides) {
    auto t0 = std::chrono::steady_clock::now();
    DeviceConfig cfg = DeviceConfig::from_config(file);
    fs::create_directories(overrides.out_dir);

    RunOutcome outcome;
    outcome.manifest.config_hash = file.content_hash();
    outcome.manifest.version = kVersion;
    outcome.manifest.seed = overrides.seed.value_or(0);

    // Echo the config used so the outputs are self-contained.
    std::string cfg_echo = (fs::path(overrides.out_dir) / "device_used.cfg").string();
    write_text_file(cfg_echo, file.text());
    outcome.manifest.files.push_back(cfg_echo);

    auto run_section = [&](const std::string& name) -> std::optional<ExperimentResult> {
        if (!file.has_section("experiment " + name)) return std::nullopt;
        ExperimentSpec spec = spec_with_overrides(file.section("experiment " + name), overrides);
        ExperimentResult res = run_experiment(cfg, spec, overrides.threads);
        auto files = write_experiment_outputs(overrides.out_dir, name, res,
                                              outcome.manifest.config_hash);
        outcome.manifest.files.insert(outcome.manifest.files.end(), files.begin(), files.end());
        if (!all_fits_converged(res)) outcome.fits_converged = false;
        return res;
    };

    if (file.has_section("loading")) {
        auto targets = loading_targets(file);
        LoadingResult res = run_loading_sequence(cfg, targets);
        auto files = write_loading_outputs(overrides.out_dir, "loading", res, targets,
                                           outcome.manifest.config_hash);
        outcome.manifest.files.insert(outcome.manifest.files.end(), files.begin(), files.end());
    }

    // Per-qubit characterization summary (Larmor, Rabi, T2*, T2Hahn).
    std::vector<SeriesColumn> summary(6);
    summary[0].name = "qubit";
    summary[1].name = "larmor_hz";
    summary[2].name = "larmor_offset_hz";
    summary[3].name = "f_rabi_fit_hz";
    summary[4].name = "t2_star_fit_s";
    summary[5].name = "t2_hahn_fit_s";

    double f_mean = 0;
    for (const auto& q : cfg.qubits) f_mean += larmor_frequency(q, cfg.field);
    f_mean /= 8.0;

    for (int q = 1; q <= 8; ++q) {
        std::string suffix = "-q" + std::to_string(q);
        if (!file.has_section("experiment chevron" + suffix)) continue;
        auto chev = run_section("chevron" + suffix);
        auto rams = run_section("ramsey" + suffix);
        auto hahn = run_section("hahn" + suffix);

        double larmor = larmor_frequency(cfg.qubits[static_cast<std::size_t>(q - 1)], cfg.field);
        summary[0].values.push_back(q);
        summary[1].values.push_back(larmor);
        summary[2].values.push_back(larmor - f_mean);
        auto scalar_or_nan = [](const std::optional<ExperimentResult>& r, const char* key) {
            if (!r || r->scalars.count(key) == 0)
                return std::numeric_limits<double>::quiet_NaN();
            return r->scalars.at(key);
        };
        summary[3].values.push_back(scalar_or_nan(chev, "f_rabi_fit_hz"));
        summary[4].values.push_back(scalar_or_nan(rams, "t2_star_fit_s"));
        summary[5].values.push_back(scalar_or_nan(hahn, "t2_hahn_fit_s"));
    }

    run_section("fingerprint");
    run_section("exchange-turnon");
    run_section("cz-cal");
    run_section("cascade-cal");

    std::string summary_csv = (fs::path(overrides.out_dir) / "summary.csv").string();
    write_csv(summary_csv, summary);
    outcome.manifest.files.push_back(summary_csv);

    outcome.manifest.duration_s = seconds_since(t0);
    std::string manifest_path = (fs::path(overrides.out_dir) / "batch_manifest.json").string();
    outcome.manifest.files.push_back(manifest_path);
    write_manifest(manifest_path, outcome.manifest);
    return outcome;
}

namespace {

int validate_command(const std::string& config_path, std::ostream& out) {
    ConfigFile file = config_path.empty()
                          ? ConfigFile::parse_text(default_config_text(), "<default>")
                          : ConfigFile::parse_file(config_path);
    std::vector<Diagnostic> diags;
    try {
        DeviceConfig cfg = DeviceConfig::from_config(file);
        diags = cfg.validate();
        for (const auto* s : file.sections_with_prefix("experiment ")) {
            try {
                ExperimentSpec::from_section(*s);
            } catch (const ConfigError& e) {
                diags.push_back({Diagnostic::Severity::error, e.what()});
            }
        }
    } catch (const ConfigError& e) {
        diags.push_back({Diagnostic::Severity::error, e.what()});
    }

    bool any_error = false;
    for (const auto& d : diags) {
        bool err = d.severity == Diagnostic::Severity::error;
        any_error |= err;
        out << (err ? "error: " : "warning: ") << d.message << "\n";
    }
    if (diags.empty()) out << "ok: no diagnostics\n";
    return any_error ? 1 : 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"spinline: eight-dot silicon spin-qubit array simulator"};
    app.require_subcommand(1);

    std::string config_path, name, out_dir = ".", backend;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int shots = 0, threads = 1;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
        cmd->add_option_function<std::uint64_t>(
               "--seed", [&](std::uint64_t v) { seed = v; seed_set = true; },
               "Seed override");
        cmd->add_option("--backend", backend, "Noise backend: analytic or stochastic");
        cmd->add_option("--shots", shots, "Shots-per-point override");
        cmd->add_option("--threads", threads, "Worker threads for sweep points");
    };

    CLI::App* run = app.add_subcommand("run", "Run one experiment, map, or the loading sequence");
    run->add_option("config", config_path, "Device + experiment config file")->required();
    run->add_option("name", name, "Experiment or map name from the config")->required();
    add_common(run);

    CLI::App* repro =
        app.add_subcommand("reproduce-paper", "Run the full characterization suite");
    repro->add_option("--config", config_path, "Config file (default: bundled device)");
    add_common(repro);

    CLI::App* val = app.add_subcommand("validate", "Check a config for invariant violations");
    val->add_option("config", config_path, "Config file (default: bundled device)");

    CLI::App* dump = app.add_subcommand("dump-config", "Print the bundled default config");

    try {
        std::vector<std::string> argv_rev(args.rbegin(), args.rend());
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            // --help and friends print through CLI11's own path.
            std::ostringstream help;
            help << app.help();
            out << help.str();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    RunOverrides overrides;
    overrides.out_dir = out_dir;
    overrides.threads = std::max(1, threads);
    if (seed_set) overrides.seed = seed;
    if (shots > 0) overrides.shots = shots;
    if (!backend.empty()) {
        if (backend == "analytic")
            overrides.backend = NoiseBackend::analytic;
        else if (backend == "stochastic")
            overrides.backend = NoiseBackend::stochastic;
        else {
            err << "error: unknown backend '" << backend << "'\n";
            return 1;
        }
    }

    try {
        if (run->parsed()) {
            ConfigFile file = ConfigFile::parse_file(config_path);
            RunOutcome oc = run_named(file, name, overrides);
            out << "wrote " << oc.manifest.files.size() << " files to " << out_dir << "\n";
            return oc.fits_converged ? 0 : 3;
        }
        if (repro->parsed()) {
            ConfigFile file = config_path.empty()
                                  ? ConfigFile::parse_text(default_config_text(), "<default>")
                                  : ConfigFile::parse_file(config_path);
            RunOutcome oc = reproduce_paper(file, overrides);
            out << "wrote " << oc.manifest.files.size() << " files to " << out_dir << "\n";
            return oc.fits_converged ? 0 : 3;
        }
        if (val->parsed()) return validate_command(config_path, out);
        if (dump->parsed()) {
            out << default_config_text();
            return 0;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

} // namespace spinline
