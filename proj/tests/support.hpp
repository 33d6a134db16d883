#pragma once

// Shared test helpers: reference scenario builders, an exact association
// oracle by event enumeration, likelihood table generators, and a subprocess
// runner for exercising the CLI binary. Kept framework-free so both the unit
// tests and the acceptance runner can include it.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <radnet/assoc.hpp>
#include <radnet/geom.hpp>
#include <radnet/rng.hpp>
#include <radnet/scenario.hpp>
#include <radnet/tracker.hpp>

namespace testsupport {

using namespace radnet;

// ----------------------------------------------------------------------------
// Reference geometry: one transmitter at the origin, five receivers clustered
// within ~1.6 km of it, receiver 1 co-located (monostatic), beam +-20 degrees
// about +X out to 70 km.
// ----------------------------------------------------------------------------

inline Beam reference_beam() {
    Beam b;
    b.azimuth = {0.0, 20.0 * 3.1415926535897932384626433832795 / 180.0};
    b.elevation = {0.0, 20.0 * 3.1415926535897932384626433832795 / 180.0};
    b.range_min_m = 0.0;
    b.range_max_m = 70000.0;
    return b;
}

inline std::vector<Vec3> reference_receivers() {
    return {{0.0, 0.0, 0.0},
            {916.0, 941.0, 950.0},
            {973.0, 541.0, 764.0},
            {955.0, 483.0, 191.0},
            {936.0, 350.0, 477.0}};
}

/// Clutter-free unit-pd scenario with one beam-center target inbound at 5 m/s.
inline ScenarioConfig reference_scenario() {
    ScenarioConfig cfg;
    cfg.tx_position_m = {0.0, 0.0, 0.0};
    cfg.rx_positions_m = reference_receivers();
    cfg.beam = reference_beam();
    cfg.scan_period_s = 10.0;
    cfg.n_scans = 100;
    cfg.targets = {{{30000.0, 0.0, 0.0}, {-5.0, 0.0, 0.0}}};
    cfg.snr_ref_db = 0.0;
    cfg.ref_range_m = 30000.0;
    cfg.bandwidth_hz = 20.0e6;
    cfg.pd = {1.0, 1.0, 1.0, 1.0, 1.0};
    cfg.clutter_mean = 0.0;
    cfg.clutter_law = ClutterLaw::linear;
    cfg.seed = 1;
    return cfg;
}

// ----------------------------------------------------------------------------
// Exact association marginals. Enumerates every event (injective map from
// targets to measurements, miss allowed) with weight
//   prod_l [ sigma(l) = miss ? 1 - e_l pd : e_l pd g(l, m) / lambda_m ]
// and unassigned measurements absorbed as unit-weight clutter. Independent of
// the message-passing code; only the weight model is shared by definition.
// ----------------------------------------------------------------------------

struct ExactMarginals {
    int n_targets = 0;
    int n_meas = 0;
    std::vector<double> target_probs;  // layout matches ReceiverAssociation
    std::vector<double> meas_probs;

    double target_prob(int l, int m_plus_1) const {
        return target_probs[static_cast<std::size_t>(l) * (n_meas + 1) + m_plus_1];
    }
    double meas_prob(int m, int l_plus_1) const {
        return meas_probs[static_cast<std::size_t>(m) * (n_targets + 1) + l_plus_1];
    }
};

inline ExactMarginals enumerate_marginals(const ReceiverLikelihood& rl,
                                          const std::vector<double>& existence) {
    const int nl = rl.n_targets, nm = rl.n_meas;
    ExactMarginals out;
    out.n_targets = nl;
    out.n_meas = nm;
    out.target_probs.assign(static_cast<std::size_t>(nl) * (nm + 1), 0.0);
    out.meas_probs.assign(static_cast<std::size_t>(nm) * (nl + 1), 0.0);

    std::vector<int> assign(nl, -1);  // -1 = miss
    double total = 0.0;

    const auto weight_of = [&](int l) {
        const double epd = existence[l] * rl.pd;
        if (assign[l] < 0) return 1.0 - epd;
        return epd * rl.likelihood(l, assign[l]) / rl.clutter_intensity[assign[l]];
    };

    const auto record = [&](double w) {
        total += w;
        for (int l = 0; l < nl; ++l)
            out.target_probs[static_cast<std::size_t>(l) * (nm + 1) + (assign[l] + 1)] += w;
    };

    // Depth-first over targets with a used-measurement mask.
    const auto recurse = [&](auto&& self, int l, unsigned used, double w) -> void {
        if (l == nl) {
            record(w);
            return;
        }
        assign[l] = -1;
        self(self, l + 1, used, w * weight_of(l));
        for (int m = 0; m < nm; ++m) {
            if (used & (1u << m)) continue;
            assign[l] = m;
            self(self, l + 1, used | (1u << m), w * weight_of(l));
        }
        assign[l] = -1;
    };
    recurse(recurse, 0, 0u, 1.0);

    if (total > 0.0)
        for (auto& p : out.target_probs) p /= total;
    for (int m = 0; m < nm; ++m) {
        double clutter = 1.0;
        for (int l = 0; l < nl; ++l) {
            const double p = out.target_prob(l, m + 1);
            out.meas_probs[static_cast<std::size_t>(m) * (nl + 1) + l + 1] = p;
            clutter -= p;
        }
        out.meas_probs[static_cast<std::size_t>(m) * (nl + 1)] = clutter < 0.0 ? 0.0 : clutter;
    }
    return out;
}

/// Adversarial table: weights spread over many orders of magnitude.
inline ReceiverLikelihood random_table(Rng& rng, int n_targets, int n_meas,
                                       std::vector<double>& existence) {
    ReceiverLikelihood rl;
    rl.n_targets = n_targets;
    rl.n_meas = n_meas;
    rl.pd = rng.uniform(0.3, 1.0);
    rl.g.resize(static_cast<std::size_t>(n_targets) * n_meas);
    for (auto& g : rl.g) g = std::pow(10.0, rng.uniform(-6.0, 2.0));
    rl.clutter_intensity.resize(n_meas);
    for (auto& lam : rl.clutter_intensity) lam = std::pow(10.0, rng.uniform(-6.0, -2.0));
    existence.resize(n_targets);
    for (auto& e : existence) e = rng.uniform(0.0, 1.0);
    return rl;
}

/// Scenario-realistic table: targets separated by at least 10 sigma in range,
/// one measurement per target near its own range, extras far away. This is
/// the regime the radar geometry produces, where the association graph is
/// dominated by a single near-diagonal event.
inline ReceiverLikelihood separated_table(Rng& rng, int n_targets, int n_meas,
                                          std::vector<double>& existence) {
    ReceiverLikelihood rl;
    rl.n_targets = n_targets;
    rl.n_meas = n_meas;
    rl.pd = rng.uniform(0.6, 1.0);
    const double sigma = 10.0;
    std::vector<double> target_range(n_targets), meas_range(n_meas);
    for (int l = 0; l < n_targets; ++l)
        target_range[l] = 20000.0 + 400.0 * l + rng.uniform(0.0, 200.0);  // >= 10 sigma apart
    for (int m = 0; m < n_meas; ++m)
        meas_range[m] = m < n_targets ? target_range[m] + sigma * rng.gaussian()
                                      : 50000.0 + 500.0 * m + rng.uniform(0.0, 200.0);
    rl.g.resize(static_cast<std::size_t>(n_targets) * n_meas);
    for (int l = 0; l < n_targets; ++l)
        for (int m = 0; m < n_meas; ++m)
            rl.g[static_cast<std::size_t>(l) * n_meas + m] =
                normal_pdf(meas_range[m] - target_range[l], sigma);
    rl.clutter_intensity.assign(n_meas, 1.0 / 70000.0);
    existence.resize(n_targets);
    for (auto& e : existence) e = rng.uniform(0.2, 1.0);
    return rl;
}

// ----------------------------------------------------------------------------
// Subprocess helpers for CLI checks.
// ----------------------------------------------------------------------------

struct CliRun {
    int exit_code = -1;
    std::string out;
    std::string err;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline std::filesystem::path make_temp_dir(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("radnet_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                      std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

/// Run `binary + args` through the shell; env_prefix may hold VAR=value pairs.
inline CliRun run_cli(const std::string& binary, const std::string& args,
                      const std::string& env_prefix = "") {
    const auto dir = make_temp_dir("cli");
    const auto out_path = dir / "stdout.txt";
    const auto err_path = dir / "stderr.txt";
    const std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + "\"" + binary + "\" " +
                            args + " > \"" + out_path.string() + "\" 2> \"" + err_path.string() +
                            "\"";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_path);
    r.err = read_file(err_path);
    std::filesystem::remove_all(dir);
    return r;
}

}  // namespace testsupport
