#pragma once

#include "spinline/device.hpp"
#include "spinline/experiments.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace spinline {

/// Deterministic shortest-roundtrip formatting ("%.10g"); CSV payloads must
/// be byte-identical for identical (config, seed, version).
std::string format_double(double v);

/// Column header with unit annotation derived from the column-name suffix
/// (delay_s -> "delay (s)", offset_hz -> "offset (Hz)").
std::string annotate_unit(const std::string& column_name);

/// Writes columns as CSV with an annotated header row; atomic replace.
void write_csv(const std::string& path, const std::vector<SeriesColumn>& columns);

void write_text_file(const std::string& path, const std::string& content);

struct RunManifest {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string version;
    std::vector<std::string> files; // every file the run wrote
    double duration_s = 0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

/// Writes <name>.csv, <name>.json, optional histogram/shot CSVs into out_dir;
/// returns the file paths written.
std::vector<std::string> write_experiment_outputs(const std::string& out_dir,
                                                  const std::string& name,
                                                  const ExperimentResult& result,
                                                  const std::string& config_hash);

std::vector<std::string> write_stability_map_outputs(const std::string& out_dir,
                                                     const std::string& name,
                                                     const StabilityMap& map,
                                                     const std::string& config_hash);

std::vector<std::string> write_loading_outputs(const std::string& out_dir,
                                               const std::string& name,
                                               const LoadingResult& result,
                                               const std::array<int, 4>& targets,
                                               const std::string& config_hash);

} // namespace spinline
