#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "geom.hpp"
#include "rng.hpp"

namespace radnet {

inline constexpr double speed_of_light_mps = 299792458.0;

// ============================================================================
// Scenario description
// ============================================================================

struct TargetInit {
    Vec3 position_m;    // position at scan 0
    Vec3 velocity_mps;  // constant over the run
};

enum class ClutterLaw { uniform, linear };

struct ScenarioConfig {
    Vec3 tx_position_m;
    std::vector<Vec3> rx_positions_m;  // rx[0] is the monostatic receiver (== tx)
    Beam beam;                         // physical beam, anchored at the transmitter

    double scan_period_s = 10.0;
    int n_scans = 100;
    std::vector<TargetInit> targets;

    double snr_ref_db = 0.0;      // SNR at ref_range_m from tx and rx
    double ref_range_m = 30000.0;
    double bandwidth_hz = 20.0e6;

    std::vector<double> pd;            // per-receiver detection probability
    double clutter_mean = 0.0;         // expected clutter count per receiver per scan
    double clutter_range_max_m = 70000.0;
    ClutterLaw clutter_law = ClutterLaw::uniform;

    std::uint64_t seed = 1;

    std::size_t n_receivers() const { return rx_positions_m.size(); }

    /// Tx-to-receiver separation; the lower bound of receiver i's bistatic range.
    double baseline_m(std::size_t i) const { return (rx_positions_m[i] - tx_position_m).norm(); }
};

/// True target position at scan k (k = 0 is the configured initial state).
inline Vec3 truth_position(const ScenarioConfig& cfg, std::size_t target, int scan) {
    const TargetInit& t = cfg.targets[target];
    return t.position_m + (scan * cfg.scan_period_s) * t.velocity_mps;
}

// ============================================================================
// SNR and range-noise model
// ============================================================================
//
// SNR falls off with the product of squared leg lengths, normalized so that a
// target ref_range_m from both the transmitter and the receiver sees exactly
// the configured reference SNR. Range noise std follows sigma = c/(B*sqrt(2*SNR)).

inline double snr_linear_at(const ScenarioConfig& cfg, const Vec3& target, std::size_t rx) {
    const double dt = std::fmax((target - cfg.tx_position_m).norm(), 1e-6);
    const double dr = std::fmax((target - cfg.rx_positions_m[rx]).norm(), 1e-6);
    const double ref = cfg.ref_range_m;
    const double ref4 = (ref * ref) * (ref * ref);
    return std::pow(10.0, cfg.snr_ref_db / 10.0) * ref4 / (dt * dt * dr * dr);
}

inline double range_sigma_m(double snr_lin, double bandwidth_hz) {
    return std::fmax(speed_of_light_mps / (bandwidth_hz * std::sqrt(2.0 * snr_lin)), 1e-6);
}

inline double sigma_at(const ScenarioConfig& cfg, const Vec3& target, std::size_t rx) {
    return range_sigma_m(snr_linear_at(cfg, target, rx), cfg.bandwidth_hz);
}

// ============================================================================
// Scan simulation
// ============================================================================

/// One scan's measurements: per-receiver bistatic ranges in randomized order.
/// Ground-truth origin labels ride along for evaluation only; tracker-side
/// code reads ranges() and never the labels (see EvalAccess).
class ScanData {
public:
    ScanData() = default;
    ScanData(std::vector<std::vector<double>> ranges, std::vector<std::vector<int>> labels)
        : ranges_(std::move(ranges)), labels_(std::move(labels)) {}

    std::size_t n_receivers() const { return ranges_.size(); }
    const std::vector<double>& ranges(std::size_t rx) const { return ranges_[rx]; }
    const std::vector<std::vector<double>>& all_ranges() const { return ranges_; }

private:
    std::vector<std::vector<double>> ranges_;
    std::vector<std::vector<int>> labels_;  // target index, -1 for clutter
    friend struct EvalAccess;
};

/// Evaluation-only access to ground-truth origin labels.
struct EvalAccess {
    static const std::vector<std::vector<int>>& labels(const ScanData& s) { return s.labels_; }
};

/// Draw one clutter range on [baseline, max] under the configured law.
inline double draw_clutter_range(const ScenarioConfig& cfg, std::size_t rx, Rng& rng) {
    const double lo = cfg.baseline_m(rx);
    const double hi = std::fmax(cfg.clutter_range_max_m, lo);
    if (cfg.clutter_law == ClutterLaw::linear) {
        // Density proportional to range: inverse CDF of f(r) ~ r on [lo, hi].
        const double u = rng.uniform01();
        return std::sqrt(lo * lo + u * (hi * hi - lo * lo));
    }
    return rng.uniform(lo, hi);
}

/// Simulate scan k: per-target detections with position-dependent noise plus
/// Poisson clutter, shuffled per receiver. One rng stream drives everything,
/// so a given (seed-derived) stream reproduces the scan bit-identically.
inline ScanData simulate_scan(const ScenarioConfig& cfg, int scan, Rng& rng) {
    const std::size_t n_rx = cfg.n_receivers();
    if (cfg.pd.size() != n_rx) throw std::invalid_argument("simulate_scan: pd size mismatch");

    std::vector<Vec3> truth(cfg.targets.size());
    for (std::size_t j = 0; j < truth.size(); ++j) truth[j] = truth_position(cfg, j, scan);

    std::vector<std::vector<double>> ranges(n_rx);
    std::vector<std::vector<int>> labels(n_rx);
    for (std::size_t i = 0; i < n_rx; ++i) {
        std::vector<std::pair<double, int>> rows;
        for (std::size_t j = 0; j < truth.size(); ++j) {
            if (rng.uniform01() < cfg.pd[i]) {
                const double rho = bistatic_range(truth[j], cfg.tx_position_m, cfg.rx_positions_m[i]);
                rows.emplace_back(rho + sigma_at(cfg, truth[j], i) * rng.gaussian(),
                                  static_cast<int>(j));
            }
        }
        const int n_clutter = rng.poisson(cfg.clutter_mean);
        for (int c = 0; c < n_clutter; ++c) rows.emplace_back(draw_clutter_range(cfg, i, rng), -1);
        rng.shuffle(rows);
        ranges[i].reserve(rows.size());
        labels[i].reserve(rows.size());
        for (const auto& [rho, lab] : rows) {
            ranges[i].push_back(rho);
            labels[i].push_back(lab);
        }
    }
    return ScanData(std::move(ranges), std::move(labels));
}

}  // namespace radnet
