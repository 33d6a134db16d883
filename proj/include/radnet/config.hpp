#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fusion.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "tracker.hpp"

namespace radnet {

// ============================================================================
// Scenario/experiment configuration files
// ============================================================================
//
// INI-style sections with key = value pairs; '#' and ';' start comments.
// Every key carries its unit in the name. Unknown sections or keys are
// rejected so typos cannot silently fall back to defaults.

struct ParsedConfig {
    ScenarioConfig scenario;
    TrackerParams tracker;
    FusionParams fusion;
    GospaParams gospa;
    int n_runs = 20;
    std::uint64_t base_seed = 1;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct IniDoc {
    // section -> key -> value, plus order-independent duplicate detection
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::vector<std::string> errors;
};

inline IniDoc parse_ini(const std::string& text) {
    IniDoc doc;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                doc.errors.push_back("line " + std::to_string(line_no) + ": malformed section");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            doc.sections[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            doc.errors.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            doc.errors.push_back("line " + std::to_string(line_no) + ": key outside a section");
            continue;
        }
        if (!doc.sections[section].emplace(key, value).second)
            doc.errors.push_back("line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    return doc;
}

class ConfigReader {
public:
    explicit ConfigReader(IniDoc doc) : doc_(std::move(doc)) {
        errors_ = doc_.errors;
    }

    std::vector<std::string>& errors() { return errors_; }

    bool has(const std::string& sec, const std::string& key) {
        const auto s = doc_.sections.find(sec);
        return s != doc_.sections.end() && s->second.count(key) > 0;
    }

    std::optional<std::string> raw(const std::string& sec, const std::string& key) {
        consumed_[sec].insert(key);
        const auto s = doc_.sections.find(sec);
        if (s == doc_.sections.end()) return std::nullopt;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return std::nullopt;
        return k->second;
    }

    double number(const std::string& sec, const std::string& key, double fallback,
                  bool required = false) {
        const auto v = raw(sec, key);
        if (!v) {
            if (required) fail(sec, key, "missing required key");
            return fallback;
        }
        return parse_number(sec, key, *v);
    }

    std::vector<double> numbers(const std::string& sec, const std::string& key,
                                bool required = false) {
        const auto v = raw(sec, key);
        if (!v) {
            if (required) fail(sec, key, "missing required key");
            return {};
        }
        std::istringstream in(*v);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) out.push_back(parse_number(sec, key, tok));
        if (out.empty()) fail(sec, key, "expected one or more numbers");
        return out;
    }

    Vec3 vec3(const std::string& sec, const std::string& key, bool required = false) {
        const auto nums = numbers(sec, key, required);
        if (nums.empty() && !required) return {};
        if (nums.size() != 3) {
            fail(sec, key, "expected exactly 3 numbers");
            return {};
        }
        return {nums[0], nums[1], nums[2]};
    }

    bool boolean(const std::string& sec, const std::string& key, bool fallback) {
        const auto v = raw(sec, key);
        if (!v) return fallback;
        if (*v == "true" || *v == "on" || *v == "1") return true;
        if (*v == "false" || *v == "off" || *v == "0") return false;
        fail(sec, key, "expected true/false");
        return fallback;
    }

    std::string word(const std::string& sec, const std::string& key, std::string fallback) {
        const auto v = raw(sec, key);
        return v ? *v : fallback;
    }

    void fail(const std::string& sec, const std::string& key, const std::string& msg) {
        errors_.push_back("[" + sec + "] " + key + ": " + msg);
    }

    /// Flag anything present in the document that was never consumed.
    void finish() {
        for (const auto& [sec, kv] : doc_.sections) {
            const auto c = consumed_.find(sec);
            if (c == consumed_.end()) {
                errors_.push_back("[" + sec + "]: unknown section");
                continue;
            }
            for (const auto& [key, value] : kv)
                if (c->second.count(key) == 0)
                    errors_.push_back("[" + sec + "] " + key + ": unknown key");
        }
    }

private:
    double parse_number(const std::string& sec, const std::string& key, const std::string& tok) {
        if (tok == "inf") return std::numeric_limits<double>::infinity();
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            fail(sec, key, "not a number: " + tok);
            return 0.0;
        }
    }

    IniDoc doc_;
    std::map<std::string, std::set<std::string>> consumed_;
    std::vector<std::string> errors_;
};

inline double deg2rad(double d) { return d * 3.1415926535897932384626433832795 / 180.0; }

}  // namespace detail

struct ConfigResult {
    ParsedConfig config;
    std::vector<std::string> errors;
    bool ok() const { return errors.empty(); }
};

inline ConfigResult config_from_text(const std::string& text) {
    detail::ConfigReader r(detail::parse_ini(text));
    ParsedConfig pc;
    ScenarioConfig& sc = pc.scenario;

    // [geometry]
    sc.tx_position_m = r.vec3("geometry", "tx_position_m", true);
    const int rx_count = static_cast<int>(r.number("geometry", "rx_count", 0, true));
    if (rx_count < 1) r.fail("geometry", "rx_count", "need at least one receiver");
    for (int i = 1; i <= rx_count; ++i)
        sc.rx_positions_m.push_back(
            r.vec3("geometry", "rx" + std::to_string(i) + "_position_m", true));
    if (rx_count >= 1 && (sc.rx_positions_m[0] - sc.tx_position_m).norm() > 1e-6)
        r.fail("geometry", "rx1_position_m", "receiver 1 must be co-located with the transmitter");

    // [beam]
    sc.beam.azimuth = {detail::deg2rad(r.number("beam", "azimuth_center_deg", 0.0)),
                       detail::deg2rad(r.number("beam", "azimuth_halfwidth_deg", 20.0))};
    sc.beam.elevation = {detail::deg2rad(r.number("beam", "elevation_center_deg", 0.0)),
                         detail::deg2rad(r.number("beam", "elevation_halfwidth_deg", 20.0))};
    sc.beam.range_min_m = r.number("beam", "range_min_m", 0.0);
    sc.beam.range_max_m = r.number("beam", "range_max_m", 70000.0);
    if (sc.beam.azimuth.halfwidth < 0 || sc.beam.elevation.halfwidth < 0)
        r.fail("beam", "azimuth_halfwidth_deg", "halfwidths must be non-negative");
    if (sc.beam.range_min_m < 0 || sc.beam.range_min_m > sc.beam.range_max_m)
        r.fail("beam", "range_min_m", "need 0 <= range_min_m <= range_max_m");

    // [targets]
    const int n_targets = static_cast<int>(r.number("targets", "count", 0, true));
    if (n_targets < 1) r.fail("targets", "count", "need at least one target");
    for (int j = 1; j <= n_targets; ++j) {
        TargetInit t;
        t.position_m = r.vec3("targets", "target" + std::to_string(j) + "_position_m", true);
        t.velocity_mps = r.vec3("targets", "target" + std::to_string(j) + "_velocity_mps", true);
        sc.targets.push_back(t);
    }

    // [noise]
    sc.snr_ref_db = r.number("noise", "snr_ref_db", 0.0, true);
    sc.ref_range_m = r.number("noise", "ref_range_m", 30000.0);
    sc.bandwidth_hz = r.number("noise", "bandwidth_hz", 20.0e6);
    if (!(sc.ref_range_m > 0)) r.fail("noise", "ref_range_m", "must be > 0");
    if (!(sc.bandwidth_hz > 0)) r.fail("noise", "bandwidth_hz", "must be > 0");

    // [clutter]
    sc.pd = r.numbers("clutter", "pd", true);
    if (static_cast<int>(sc.pd.size()) != rx_count)
        r.fail("clutter", "pd", "need one detection probability per receiver");
    for (double p : sc.pd)
        if (p < 0.0 || p > 1.0) r.fail("clutter", "pd", "probabilities must lie in [0, 1]");
    sc.clutter_mean = r.number("clutter", "clutter_mean", 0.0);
    sc.clutter_range_max_m = r.number("clutter", "clutter_range_max_m", 70000.0);
    if (sc.clutter_mean < 0) r.fail("clutter", "clutter_mean", "must be >= 0");
    const std::string law = r.word("clutter", "clutter_range_law", "uniform");
    if (law == "uniform") sc.clutter_law = ClutterLaw::uniform;
    else if (law == "linear") sc.clutter_law = ClutterLaw::linear;
    else r.fail("clutter", "clutter_range_law", "expected uniform or linear");

    // [tracker]
    TrackerParams& tp = pc.tracker;
    tp.n_particles = static_cast<int>(r.number("tracker", "n_particles", tp.n_particles));
    tp.survival_prob = r.number("tracker", "survival_prob", tp.survival_prob);
    tp.birth_prob = r.number("tracker", "birth_prob", tp.birth_prob);
    tp.confirm_threshold = r.number("tracker", "confirm_threshold", tp.confirm_threshold);
    tp.prune_threshold = r.number("tracker", "prune_threshold", tp.prune_threshold);
    tp.process_noise_accel_mps2 =
        r.number("tracker", "process_noise_accel_mps2", tp.process_noise_accel_mps2);
    tp.max_speed_mps = r.number("tracker", "max_speed_mps", tp.max_speed_mps);
    tp.velocity_prior_kappa = r.number("tracker", "velocity_prior_kappa", tp.velocity_prior_kappa);
    tp.clutter_rate_floor = r.number("tracker", "clutter_rate_floor", tp.clutter_rate_floor);
    tp.spa_max_iters = static_cast<int>(r.number("tracker", "spa_max_iters", tp.spa_max_iters));
    tp.spa_tol = r.number("tracker", "spa_tol", tp.spa_tol);
    tp.resample_ess_fraction =
        r.number("tracker", "resample_ess_fraction", tp.resample_ess_fraction);
    if (!(tp.resample_ess_fraction > 0.0) || tp.resample_ess_fraction > 1.0)
        r.fail("tracker", "resample_ess_fraction", "must lie in (0, 1]");
    if (tp.n_particles < 1) r.fail("tracker", "n_particles", "must be >= 1");
    for (const auto& [key, v] :
         std::initializer_list<std::pair<const char*, double>>{
             {"survival_prob", tp.survival_prob},
             {"birth_prob", tp.birth_prob},
             {"confirm_threshold", tp.confirm_threshold},
             {"prune_threshold", tp.prune_threshold}})
        if (v < 0.0 || v > 1.0) r.fail("tracker", key, "must lie in [0, 1]");
    if (!(tp.max_speed_mps > 0)) r.fail("tracker", "max_speed_mps", "must be > 0");
    if (!(tp.velocity_prior_kappa > 0)) r.fail("tracker", "velocity_prior_kappa", "must be > 0");
    if (!(tp.clutter_rate_floor > 0)) r.fail("tracker", "clutter_rate_floor", "must be > 0");
    if (tp.spa_max_iters < 1) r.fail("tracker", "spa_max_iters", "must be >= 1");
    if (!(tp.spa_tol > 0)) r.fail("tracker", "spa_tol", "must be > 0");

    // [fusion]
    FusionParams& fp = pc.fusion;
    const std::string mode = r.word("fusion", "mode", "off");
    if (mode == "off") fp.mode = FusionMode::off;
    else if (mode == "nad") fp.mode = FusionMode::nad;
    else if (mode == "ad") fp.mode = FusionMode::ad;
    else r.fail("fusion", "mode", "expected off, nad or ad");
    fp.alpha_r = r.number("fusion", "alpha_r", fp.alpha_r);
    fp.sigma_arce_m = r.number("fusion", "sigma_arce_m", fp.sigma_arce_m);
    fp.c_tilde = r.number("fusion", "c_tilde", fp.c_tilde);
    fp.beam_rejection = r.boolean("fusion", "beam_rejection", fp.beam_rejection);
    fp.n_sigma_range = r.number("fusion", "n_sigma_range", fp.n_sigma_range);
    fp.weighted_residuals = r.boolean("fusion", "weighted_residuals", fp.weighted_residuals);
    if (fp.alpha_r < 0.0 || fp.alpha_r > 1.0) r.fail("fusion", "alpha_r", "must lie in [0, 1]");
    if (!(fp.sigma_arce_m > 0)) r.fail("fusion", "sigma_arce_m", "must be > 0");
    if (!(fp.c_tilde > 0)) r.fail("fusion", "c_tilde", "must be > 0");
    if (!(fp.n_sigma_range > 0)) r.fail("fusion", "n_sigma_range", "must be > 0 (inf allowed)");

    // [gospa]
    pc.gospa.cutoff_m = r.number("gospa", "cutoff_m", pc.gospa.cutoff_m);
    pc.gospa.order = r.number("gospa", "order", pc.gospa.order);
    if (!(pc.gospa.cutoff_m > 0)) r.fail("gospa", "cutoff_m", "must be > 0");
    if (!(pc.gospa.order >= 1)) r.fail("gospa", "order", "must be >= 1");

    // [experiment]
    sc.scan_period_s = r.number("experiment", "scan_period_s", sc.scan_period_s);
    sc.n_scans = static_cast<int>(r.number("experiment", "n_scans", sc.n_scans));
    pc.n_runs = static_cast<int>(r.number("experiment", "n_runs", pc.n_runs));
    pc.base_seed = static_cast<std::uint64_t>(r.number("experiment", "base_seed", 1.0));
    sc.seed = pc.base_seed;
    if (!(sc.scan_period_s > 0)) r.fail("experiment", "scan_period_s", "must be > 0");
    if (sc.n_scans < 1) r.fail("experiment", "n_scans", "must be >= 1");
    if (pc.n_runs < 1) r.fail("experiment", "n_runs", "must be >= 1");

    r.finish();
    return {pc, r.errors()};
}

inline ConfigResult config_from_file(const std::string& path, std::string* text_out = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return {{}, {"cannot open config file: " + path}};
    std::ostringstream ss;
    ss << in.rdbuf();
    if (text_out) *text_out = ss.str();
    return config_from_text(ss.str());
}

/// FNV-1a 64-bit content hash, for manifests.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace radnet
