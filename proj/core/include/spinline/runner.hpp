#pragma once

#include "spinline/io.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spinline {

/// The device + experiment config bundled into the binary; reproduce-paper
/// and the tests run against it.
const std::string& default_config_text();

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<NoiseBackend> backend;
    std::optional<int> shots;
    int threads = 1;
    std::string out_dir = ".";
};

struct RunOutcome {
    RunManifest manifest;
    bool fits_converged = true;
};

/// Executes one named target from the config: an [experiment NAME] section,
/// a [map NAME] section, or the built-in "loading" run. Writes CSV + JSON +
/// manifest into out_dir and returns the manifest.
RunOutcome run_named(const ConfigFile& file, const std::string& name,
                     const RunOverrides& overrides);

/// Runs the full characterization suite defined by the config's experiment
/// sections (chevron/ramsey/hahn per qubit, fingerprint, exchange turn-on,
/// CZ calibration, cascade calibration) and writes a per-qubit summary table.
RunOutcome reproduce_paper(const ConfigFile& file, const RunOverrides& overrides);

/// Command-line entry point; returns the process exit code.
/// 0 success, 1 config error, 2 runtime error, 3 fit non-convergence.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace spinline
