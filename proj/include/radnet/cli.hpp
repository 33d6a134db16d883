#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "csv.hpp"
#include "experiment.hpp"

namespace radnet::cli {

inline constexpr const char* version = "0.3.1";

// Exit codes shared by all subcommands.
inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_bad_config = 2;
inline constexpr int exit_infeasible = 3;

// ============================================================================
// Scenario resolution and output directory
// ============================================================================

/// A scenario argument is tried as a path first, then looked up by name in
/// $RADNET_SCENARIO_DIR and ./scenarios, with and without the .cfg suffix.
inline std::optional<std::string> find_scenario(const std::string& name) {
    namespace fs = std::filesystem;
    std::vector<fs::path> candidates{fs::path(name)};
    if (fs::path(name).extension() != ".cfg") candidates.emplace_back(name + ".cfg");
    const auto add_dir = [&](const fs::path& dir) {
        candidates.push_back(dir / name);
        if (fs::path(name).extension() != ".cfg") candidates.push_back(dir / (name + ".cfg"));
    };
    if (const char* env = std::getenv("RADNET_SCENARIO_DIR")) add_dir(env);
    add_dir("scenarios");
    std::error_code ec;
    for (const auto& c : candidates)
        if (fs::is_regular_file(c, ec)) return c.string();
    return std::nullopt;
}

inline std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("RADNET_OUT_DIR")) return env;
    return "out";
}

// ============================================================================
// run
// ============================================================================

struct RunOverrides {
    std::optional<std::string> variant;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_particles;
    std::optional<double> c_tilde;
    std::optional<double> snr_db;
};

struct RunRequest {
    std::string scenario;       // name or path; empty when rerunning a manifest
    std::string manifest_path;  // rerun source; mutually exclusive with scenario
    std::string out_dir;        // empty -> $RADNET_OUT_DIR -> ./out
    RunOverrides overrides;
    int jobs = 1;
    bool emit_tracks = false;
    bool dump_scans = false;
    bool emit_fusion_diag = false;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline bool write_file(const std::filesystem::path& path, const std::string& content,
                       std::ostream& err) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        err << "error: cannot write " << path.string() << "\n";
        return false;
    }
    out << content;
    return out.good();
}

}  // namespace detail

inline int cmd_run(const RunRequest& req, std::ostream& out, std::ostream& err) {
    namespace fs = std::filesystem;
    using nlohmann::json;

    // Gather config text plus the effective knob settings, either fresh from
    // a scenario file + flags or replayed from a manifest.
    std::string config_text, scenario_label;
    RunOverrides ov = req.overrides;
    bool emit_tracks = req.emit_tracks, dump_scans = req.dump_scans;
    bool emit_fusion_diag = req.emit_fusion_diag;

    if (!req.manifest_path.empty()) {
        if (!req.scenario.empty()) {
            err << "error: give either a scenario or --manifest, not both\n";
            return exit_bad_config;
        }
        std::ifstream in(req.manifest_path, std::ios::binary);
        if (!in) {
            err << "error: cannot open manifest " << req.manifest_path << "\n";
            return exit_bad_config;
        }
        json m;
        try {
            in >> m;
            config_text = m.at("config_text").get<std::string>();
            scenario_label = m.value("scenario", std::string("(manifest)"));
            const json& eff = m.at("effective");
            ov.variant = eff.at("variant").get<std::string>();
            ov.runs = eff.at("runs").get<int>();
            ov.seed = eff.at("seed").get<std::uint64_t>();
            ov.n_particles = eff.at("n_particles").get<int>();
            ov.c_tilde = eff.at("c_tilde").get<double>();
            ov.snr_db = eff.at("snr_db").get<double>();
            const json& emit = m.at("emit");
            emit_tracks = emit.at("tracks").get<bool>();
            dump_scans = emit.at("scans").get<bool>();
            emit_fusion_diag = emit.at("fusion_diag").get<bool>();
        } catch (const json::exception& e) {
            err << "error: bad manifest: " << e.what() << "\n";
            return exit_bad_config;
        }
    } else {
        const auto path = find_scenario(req.scenario);
        if (!path) {
            err << "error: scenario not found: " << req.scenario << "\n";
            return exit_bad_config;
        }
        scenario_label = *path;
        std::ifstream in(*path, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        config_text = ss.str();
    }

    ConfigResult cr = config_from_text(config_text);
    if (!cr.ok()) {
        for (const auto& e : cr.errors) err << "error: " << e << "\n";
        return exit_bad_config;
    }
    ParsedConfig pc = cr.config;

    Variant variant;
    switch (pc.fusion.mode) {
        case FusionMode::nad: variant = Variant::nad; break;
        case FusionMode::ad: variant = Variant::ad; break;
        default: variant = Variant::spa; break;
    }
    try {
        if (ov.variant) variant = variant_from_name(*ov.variant);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return exit_bad_config;
    }
    if (ov.runs) {
        if (*ov.runs < 0) {
            err << "error: --runs must be >= 0\n";
            return exit_bad_config;
        }
        pc.n_runs = *ov.runs;
    }
    if (ov.seed) pc.base_seed = *ov.seed;
    if (ov.n_particles) {
        if (*ov.n_particles < 1) {
            err << "error: --particles must be >= 1\n";
            return exit_bad_config;
        }
        pc.tracker.n_particles = *ov.n_particles;
    }
    if (ov.c_tilde) {
        if (!(*ov.c_tilde > 0)) {
            err << "error: --c-tilde must be > 0\n";
            return exit_bad_config;
        }
        pc.fusion.c_tilde = *ov.c_tilde;
    }
    if (ov.snr_db) pc.scenario.snr_ref_db = *ov.snr_db;
    pc.scenario.seed = pc.base_seed;

    const fs::path out_dir = resolve_out_dir(req.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        err << "error: cannot create " << out_dir.string() << ": " << ec.message() << "\n";
        return exit_runtime;
    }

    ExperimentOptions opt;
    opt.n_runs = pc.n_runs;
    opt.base_seed = pc.base_seed;
    opt.n_threads = req.jobs;
    opt.collect_tracks = emit_tracks;
    opt.collect_scans = dump_scans;
    opt.collect_fusion_diags = emit_fusion_diag;

    const ExperimentResult res =
        run_experiment(pc.scenario, pc.tracker, pc.fusion, pc.gospa, variant, opt);

    const std::string vname = variant_name(variant);
    std::vector<std::string> outputs;
    {
        std::ostringstream s;
        write_results_csv(s, vname, pc.scenario.snr_ref_db, pc.tracker.n_particles, res.rows);
        if (!detail::write_file(out_dir / "results.csv", s.str(), err)) return exit_runtime;
        outputs.push_back("results.csv");
    }
    {
        std::ostringstream s;
        write_summary_csv(s, vname, pc.scenario.snr_ref_db, pc.tracker.n_particles, res.curve,
                          pc.gospa.order);
        if (!detail::write_file(out_dir / "summary.csv", s.str(), err)) return exit_runtime;
        outputs.push_back("summary.csv");
    }
    if (emit_tracks) {
        std::ostringstream s;
        write_tracks_csv(s, res.tracks);
        if (!detail::write_file(out_dir / "tracks.csv", s.str(), err)) return exit_runtime;
        outputs.push_back("tracks.csv");
    }
    if (dump_scans) {
        std::ostringstream s;
        write_scans_csv(s, res.scans);
        if (!detail::write_file(out_dir / "scans.csv", s.str(), err)) return exit_runtime;
        outputs.push_back("scans.csv");
    }
    if (emit_fusion_diag) {
        std::ostringstream s;
        write_fusion_diag_csv(s, res.fusion_diags);
        if (!detail::write_file(out_dir / "fusion_diag.csv", s.str(), err)) return exit_runtime;
        outputs.push_back("fusion_diag.csv");
    }

    json manifest;
    manifest["tool"] = "radnet";
    manifest["version"] = version;
    manifest["scenario"] = scenario_label;
    manifest["config_fnv1a64"] = detail::hex64(fnv1a64(config_text));
    manifest["config_text"] = config_text;
    manifest["effective"] = {{"variant", vname},
                             {"runs", pc.n_runs},
                             {"seed", pc.base_seed},
                             {"n_particles", pc.tracker.n_particles},
                             {"c_tilde", pc.fusion.c_tilde},
                             {"snr_db", pc.scenario.snr_ref_db}};
    manifest["emit"] = {{"tracks", emit_tracks},
                        {"scans", dump_scans},
                        {"fusion_diag", emit_fusion_diag}};
    manifest["outputs"] = outputs;
    if (!detail::write_file(out_dir / "manifest.json", manifest.dump(2) + "\n", err))
        return exit_runtime;

    double mean_mgospa = 0.0;
    for (double v : res.curve.value) mean_mgospa += v;
    if (!res.curve.value.empty()) mean_mgospa /= static_cast<double>(res.curve.value.size());
    out << "scenario=" << scenario_label << " variant=" << vname << " runs=" << pc.n_runs
        << " scans=" << pc.scenario.n_scans << " mean_mgospa_m=" << fmt_num(mean_mgospa) << "\n";
    out << "wrote " << (out_dir / "manifest.json").string();
    for (const auto& o : outputs) out << ", " << (out_dir / o).string();
    out << "\n";
    return exit_ok;
}

// ============================================================================
// localize
// ============================================================================

struct LocalizeRequest {
    std::string input_path;  // CSV path, or "-" for stdin
    Vec3 tx{0.0, 0.0, 0.0};
    std::vector<Vec3> rx;  // positions for receivers 1..N; empty -> {tx}
    double azimuth_center_deg = 0.0;
    double azimuth_halfwidth_deg = 20.0;
    double elevation_center_deg = 0.0;
    double elevation_halfwidth_deg = 20.0;
    double range_min_m = 0.0;
    double range_max_m = 70000.0;
    double n_sigma_range = 3.0;  // monostatic interval width; inf disables
    double sigma_m = 0.0;        // fallback noise level; 0 = unknown
    bool weighted = false;       // weight residuals by 1/sigma^2
};

inline const char* constraint_names[] = {"az_lo", "az_hi", "el_lo",
                                         "el_hi", "range_lo", "range_hi"};

inline int cmd_localize(const LocalizeRequest& req, std::ostream& out, std::ostream& err) {
    std::vector<MeasurementRow> rows;
    try {
        if (req.input_path == "-") {
            rows = read_measurement_csv(std::cin);
        } else {
            std::ifstream in(req.input_path, std::ios::binary);
            if (!in) {
                err << "error: cannot open " << req.input_path << "\n";
                return exit_bad_config;
            }
            rows = read_measurement_csv(in);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_bad_config;
    }
    if (rows.empty()) {
        err << "error: no measurements given (need receiver,range_m rows)\n";
        return exit_bad_config;
    }

    std::vector<Vec3> rx = req.rx;
    if (rx.empty()) rx.push_back(req.tx);
    if ((rx[0] - req.tx).norm() > 1e-6) {
        err << "error: receiver 1 must be co-located with the transmitter\n";
        return exit_bad_config;
    }

    Beam beam;
    beam.azimuth = {radnet::detail::deg2rad(req.azimuth_center_deg),
                    radnet::detail::deg2rad(req.azimuth_halfwidth_deg)};
    beam.elevation = {radnet::detail::deg2rad(req.elevation_center_deg),
                      radnet::detail::deg2rad(req.elevation_halfwidth_deg)};
    beam.range_min_m = req.range_min_m;
    beam.range_max_m = req.range_max_m;

    std::vector<RangeMeasurement> meas;
    bool have_mono = false;
    double mono_rho = 0.0, mono_sigma = 0.0;
    for (const MeasurementRow& r : rows) {
        if (r.receiver > static_cast<int>(rx.size())) {
            err << "error: receiver " << r.receiver << " has no position (give --rx)\n";
            return exit_bad_config;
        }
        const double sigma = r.sigma_m > 0 ? r.sigma_m : req.sigma_m;
        const double w = (req.weighted && sigma > 0) ? 1.0 / (sigma * sigma) : 1.0;
        meas.push_back({rx[r.receiver - 1], r.range_m, w});
        if (r.receiver == 1 && !have_mono) {
            have_mono = true;
            mono_rho = r.range_m;
            mono_sigma = sigma;
        }
    }

    if (have_mono && mono_sigma > 0 && std::isfinite(req.n_sigma_range)) {
        const auto [lo, hi] =
            range_interval_from_monostatic(mono_rho, mono_sigma, req.n_sigma_range);
        const AxisInterval phys{0.5 * (beam.range_min_m + beam.range_max_m),
                                0.5 * (beam.range_max_m - beam.range_min_m)};
        const AxisInterval cut = radnet::detail::intersect_axis(
            phys, AxisInterval{0.5 * (lo + hi), 0.5 * (hi - lo)}, false);
        beam.range_min_m = cut.lo();
        beam.range_max_m = cut.hi();
    }

    ArceEstimate est;
    try {
        est = arce_localize(meas, req.tx, beam);
    } catch (const std::exception& e) {
        err << "error: infeasible constraints: " << e.what() << "\n";
        return exit_infeasible;
    }

    nlohmann::json j;
    j["position_m"] = {est.position_m.x, est.position_m.y, est.position_m.z};
    const Vec3 rel = est.position_m - req.tx;
    const Spherical sph = rel.norm() > 0 ? cart_to_sph(rel) : Spherical{0.0, 0.0, 0.0};
    j["range_m"] = sph.range_m;
    j["azimuth_deg"] = sph.azimuth_rad * 180.0 / 3.1415926535897932384626433832795;
    j["elevation_deg"] = sph.elevation_rad * 180.0 / 3.1415926535897932384626433832795;
    j["objective"] = est.objective;
    std::vector<std::string> active;
    for (int b = 0; b < 6; ++b)
        if (est.active_constraints & (1u << b)) active.emplace_back(constraint_names[b]);
    j["active_constraints"] = active;
    j["converged"] = est.converged;
    out << j.dump() << "\n";
    return exit_ok;
}

// ============================================================================
// validate
// ============================================================================

inline int cmd_validate(const std::string& scenario, std::ostream& out, std::ostream& err) {
    const auto path = find_scenario(scenario);
    if (!path) {
        err << "error: scenario not found: " << scenario << "\n";
        return exit_bad_config;
    }
    const ConfigResult cr = config_from_file(*path);
    if (!cr.ok()) {
        for (const auto& e : cr.errors) err << "error: " << e << "\n";
        return exit_bad_config;
    }
    const ScenarioConfig& sc = cr.config.scenario;
    out << *path << ": ok (" << sc.n_receivers() << " receivers, " << sc.targets.size()
        << " targets, " << sc.n_scans << " scans, " << cr.config.n_runs << " runs)\n";
    return exit_ok;
}

}  // namespace radnet::cli
