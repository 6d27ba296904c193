#include "spinline/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace spinline {

namespace {

using ordered_json = nlohmann::ordered_json;

void atomic_write(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

ordered_json fit_to_json(const FitResult& fit) {
    ordered_json j;
    j["model"] = fit.model;
    j["converged"] = fit.converged;
    if (!fit.message.empty()) j["message"] = fit.message;
    ordered_json params = ordered_json::object();
    for (std::size_t i = 0; i < fit.param_names.size(); ++i) {
        params[fit.param_names[i]] = {
            {"value", fit.params(static_cast<Eigen::Index>(i))},
            {"sigma", fit.uncertainties(static_cast<Eigen::Index>(i))}};
    }
    j["parameters"] = params;
    j["residual_norm"] = fit.residual_norm;
    return j;
}

std::string csv_from_columns(const std::vector<SeriesColumn>& columns) {
    std::ostringstream out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (c) out << ",";
        out << annotate_unit(columns[c].name);
    }
    out << "\n";
    std::size_t rows = columns.empty() ? 0 : columns.front().values.size();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out << ",";
            out << format_double(columns[c].values[r]);
        }
        out << "\n";
    }
    return out.str();
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return std::string(buf);
}

std::string annotate_unit(const std::string& name) {
    struct Suffix {
        const char* tail;
        const char* unit;
    };
    static const Suffix table[] = {
        {"_hz", "Hz"}, {"_s", "s"},     {"_v", "V"},  {"_volts", "V"},
        {"_rad", "rad"}, {"_mev", "meV"}, {"_us", "us"},
    };
    for (const auto& s : table) {
        std::string tail(s.tail);
        if (name.size() > tail.size() &&
            name.compare(name.size() - tail.size(), tail.size(), tail) == 0) {
            return name.substr(0, name.size() - tail.size()) + " (" + s.unit + ")";
        }
    }
    return name;
}

void write_csv(const std::string& path, const std::vector<SeriesColumn>& columns) {
    atomic_write(path, csv_from_columns(columns));
}

void write_text_file(const std::string& path, const std::string& content) {
    atomic_write(path, content);
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    ordered_json j;
    j["config_hash"] = manifest.config_hash;
    j["seed"] = manifest.seed;
    j["version"] = manifest.version;
    j["files"] = manifest.files;
    j["duration_s"] = manifest.duration_s;
    atomic_write(path, j.dump(2) + "\n");
}

std::vector<std::string> write_experiment_outputs(const std::string& out_dir,
                                                  const std::string& name,
                                                  const ExperimentResult& result,
                                                  const std::string& config_hash) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> files;

    std::string csv_path = (fs::path(out_dir) / (name + ".csv")).string();
    write_csv(csv_path, result.columns);
    files.push_back(csv_path);

    ordered_json j;
    j["experiment"] = name;
    j["kind"] = to_string(result.spec.kind);
    j["config_hash"] = config_hash;
    j["seed"] = result.spec.seed;
    j["shots"] = result.spec.shots;
    ordered_json axes = ordered_json::array();
    for (const auto& a : result.spec.axes)
        axes.push_back({{"name", a.name}, {"start", a.start}, {"stop", a.stop},
                        {"points", a.points}});
    j["axes"] = axes;
    ordered_json scalars = ordered_json::object();
    for (const auto& [k, v] : result.scalars) scalars[k] = v;
    j["scalars"] = scalars;
    ordered_json fits = ordered_json::array();
    for (const auto& f : result.fits) fits.push_back(fit_to_json(f));
    j["fits"] = fits;

    std::string json_path = (fs::path(out_dir) / (name + ".json")).string();
    atomic_write(json_path, j.dump(2) + "\n");
    files.push_back(json_path);

    for (const auto& [key, signals] : result.histograms) {
        std::string hpath = (fs::path(out_dir) / (name + "_hist_" + key + ".csv")).string();
        write_csv(hpath, {{"raw_signal", signals}});
        files.push_back(hpath);
    }

    if (!result.records.empty()) {
        std::vector<SeriesColumn> cols(11);
        cols[0].name = "shot_index";
        cols[1].name = "ix";
        cols[2].name = "iy";
        cols[3].name = "setting";
        cols[4].name = "dqd";
        cols[5].name = "mode_cascaded";
        cols[6].name = "raw_signal";
        cols[7].name = "label_odd";
        cols[8].name = "herald_ok";
        cols[9].name = "frame_phase_q1_rad";
        cols[10].name = "frame_phase_q2_rad";
        for (const auto& r : result.records) {
            cols[0].values.push_back(r.shot);
            cols[1].values.push_back(r.ix);
            cols[2].values.push_back(r.iy);
            cols[3].values.push_back(r.setting);
            cols[4].values.push_back(r.outcome.dqd + 1);
            cols[5].values.push_back(r.outcome.mode == SenseMode::cascaded ? 1.0 : 0.0);
            cols[6].values.push_back(r.outcome.raw_signal);
            cols[7].values.push_back(r.outcome.label == Parity::odd ? 1.0 : 0.0);
            cols[8].values.push_back(r.herald_ok ? 1.0 : 0.0);
            cols[9].values.push_back(r.frame_phase[0]);
            cols[10].values.push_back(r.frame_phase[1]);
        }
        std::string spath = (fs::path(out_dir) / (name + "_shots.csv")).string();
        write_csv(spath, cols);
        files.push_back(spath);
    }
    return files;
}

std::vector<std::string> write_stability_map_outputs(const std::string& out_dir,
                                                     const std::string& name,
                                                     const StabilityMap& map,
                                                     const std::string& config_hash) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> files;

    std::vector<SeriesColumn> cols(5);
    cols[0].name = map.x.gate + "_v";
    cols[1].name = map.y.gate + "_v";
    cols[2].name = "sensor_proxy";
    cols[3].name = "n_left";
    cols[4].name = "n_right";
    for (int iy = 0; iy < map.y.points; ++iy)
        for (int ix = 0; ix < map.x.points; ++ix) {
            std::size_t k = static_cast<std::size_t>(iy) * static_cast<std::size_t>(map.x.points) +
                            static_cast<std::size_t>(ix);
            cols[0].values.push_back(map.x.at(ix));
            cols[1].values.push_back(map.y.at(iy));
            cols[2].values.push_back(map.value[k]);
            cols[3].values.push_back(map.n_left[k]);
            cols[4].values.push_back(map.n_right[k]);
        }
    std::string csv_path = (fs::path(out_dir) / (name + ".csv")).string();
    write_csv(csv_path, cols);
    files.push_back(csv_path);

    ordered_json j;
    j["map"] = name;
    j["pair"] = map.pair + 1;
    j["config_hash"] = config_hash;
    j["seed"] = map.seed;
    j["x"] = {{"gate", map.x.gate}, {"start", map.x.start}, {"stop", map.x.stop},
              {"points", map.x.points}, {"unit", "V"}};
    j["y"] = {{"gate", map.y.gate}, {"start", map.y.start}, {"stop", map.y.stop},
              {"points", map.y.points}, {"unit", "V"}};
    if (map.isolated_total)
        j["isolated_total"] = *map.isolated_total;
    else
        j["isolated_total"] = nullptr;
    std::string json_path = (fs::path(out_dir) / (name + ".json")).string();
    atomic_write(json_path, j.dump(2) + "\n");
    files.push_back(json_path);
    return files;
}

std::vector<std::string> write_loading_outputs(const std::string& out_dir,
                                               const std::string& name,
                                               const LoadingResult& result,
                                               const std::array<int, 4>& targets,
                                               const std::string& config_hash) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<std::string> files;

    std::vector<SeriesColumn> cols;
    cols.push_back({"stage", {}});
    for (int p = 0; p < 4; ++p) cols.push_back({"pair" + std::to_string(p + 1) + "_total", {}});
    for (int p = 0; p < 4; ++p) cols.push_back({"pair" + std::to_string(p + 1) + "_flooded", {}});
    for (const auto& tr : result.stages) {
        cols[0].values.push_back(tr.stage.label - 'A');
        for (std::size_t p = 0; p < 4; ++p) {
            cols[1 + p].values.push_back(tr.pair_totals[p]);
            cols[5 + p].values.push_back(tr.flooded[p] ? 1.0 : 0.0);
        }
    }
    std::string csv_path = (fs::path(out_dir) / (name + ".csv")).string();
    write_csv(csv_path, cols);
    files.push_back(csv_path);

    ordered_json j;
    j["loading"] = name;
    j["config_hash"] = config_hash;
    j["targets"] = targets;
    j["final_occupation"] = result.final_occupation.occupation;
    ordered_json stages = ordered_json::array();
    for (const auto& tr : result.stages) {
        ordered_json s;
        s["label"] = std::string(1, tr.stage.label);
        s["pair_totals"] = tr.pair_totals;
        s["extent_2deg"] = tr.stage.extent_2deg;
        stages.push_back(s);
    }
    j["stages"] = stages;
    std::string json_path = (fs::path(out_dir) / (name + ".json")).string();
    atomic_write(json_path, j.dump(2) + "\n");
    files.push_back(json_path);
    return files;
}

} // namespace spinline
