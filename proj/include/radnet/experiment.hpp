#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fusion.hpp"
#include "metrics.hpp"
#include "scenario.hpp"
#include "tracker.hpp"

namespace radnet {

// ============================================================================
// Per-scan tracking pipeline and Monte Carlo experiment harness
// ============================================================================

enum class Variant { spa, nad, ad, arce };

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::spa: return "spa";
        case Variant::nad: return "nad";
        case Variant::ad: return "ad";
        case Variant::arce: return "arce";
    }
    return "?";
}

inline Variant variant_from_name(const std::string& s) {
    if (s == "spa") return Variant::spa;
    if (s == "nad") return Variant::nad;
    if (s == "ad") return Variant::ad;
    if (s == "arce") return Variant::arce;
    throw std::invalid_argument("unknown variant: " + s);
}

namespace detail {

/// Clutter intensity at each of receiver i's measured ranges: expected count
/// (floored for clutter-free scenarios) times the clutter density there.
inline std::vector<double> clutter_intensities(const ScenarioConfig& cfg, std::size_t rx,
                                               const std::vector<double>& ranges,
                                               double rate_floor) {
    const double rate = std::fmax(cfg.clutter_mean, rate_floor);
    const double lo = cfg.baseline_m(rx);
    const double hi = std::fmax(cfg.clutter_range_max_m, lo + 1.0);
    std::vector<double> lam(ranges.size());
    for (std::size_t m = 0; m < ranges.size(); ++m) {
        double density;
        if (cfg.clutter_law == ClutterLaw::linear) {
            const double r = std::fmin(std::fmax(ranges[m], lo), hi);
            density = 2.0 * std::fmax(r, 1.0) / (hi * hi - lo * lo);
        } else {
            density = 1.0 / (hi - lo);
        }
        lam[m] = rate * density;
    }
    return lam;
}

}  // namespace detail

/// One tracker instance advancing scan by scan. Scan simulation is not part
/// of the pipeline; callers feed ScanData in.
class TrackerPipeline {
public:
    TrackerPipeline(const ScenarioConfig& cfg, TrackerParams tp, FusionParams fp,
                    std::uint64_t run_seed)
        : cfg_(cfg),
          tp_(tp),
          fp_(fp),
          run_seed_(run_seed),
          filter_rng_(Rng::stream(run_seed, 0x7f1173u)) {
        tp_.scan_period_s = cfg.scan_period_s;
    }

    const std::vector<Belief>& beliefs() const { return beliefs_; }
    const std::vector<FusionDiagnostic>& diagnostics() const { return diags_; }

    /// Run one scan: prune, predict, births, association, fusion, update,
    /// resampling. Returns the confirmed tracks after the scan.
    std::vector<TrackEstimate> advance(int scan, const ScanData& data) {
        const Vec3& tx = cfg_.tx_position_m;
        const auto& rxs = cfg_.rx_positions_m;

        prune(beliefs_, tp_.prune_threshold);
        for (auto& b : beliefs_) predict(b, tp_, filter_rng_);

        const auto& mono = data.ranges(0);
        std::vector<double> birth_sigmas(mono.size());
        const Vec3 boresight = angles_to_dir(cfg_.beam.azimuth.center, cfg_.beam.elevation.center);
        for (std::size_t m = 0; m < mono.size(); ++m)
            birth_sigmas[m] = sigma_at(cfg_, tx + (0.5 * mono[m]) * boresight, 0);
        auto births = initialize_births(mono, birth_sigmas, tx, cfg_.beam, tp_, next_label_,
                                        filter_rng_);
        for (auto& b : births) beliefs_.push_back(std::move(b));

        std::vector<std::vector<double>> sigma_table(beliefs_.size());
        for (std::size_t l = 0; l < beliefs_.size(); ++l) {
            const Vec3 at = beliefs_[l].mean().position_m;
            sigma_table[l].resize(rxs.size());
            for (std::size_t i = 0; i < rxs.size(); ++i)
                sigma_table[l][i] = sigma_at(cfg_, at, i);
        }
        std::vector<std::vector<double>> lambda(rxs.size());
        for (std::size_t i = 0; i < rxs.size(); ++i)
            lambda[i] = detail::clutter_intensities(cfg_, i, data.ranges(i),
                                                    tp_.clutter_rate_floor);

        const LikelihoodTable table = build_likelihood_table(
            beliefs_, data.all_ranges(), tx, rxs, sigma_table, cfg_.pd, lambda);
        const SoftAssociation soft = spa_iterate(table, tp_.spa_max_iters, tp_.spa_tol);
        const auto hard = hard_associations(soft);

        if (fp_.mode != FusionMode::off) {
            auto d = fusion_step(beliefs_, data.all_ranges(), hard, tx, rxs, cfg_.beam,
                                 sigma_table, fp_, scan, Rng::stream(run_seed_, 0xf0510au, scan));
            diags_.insert(diags_.end(), d.begin(), d.end());
        }

        update(beliefs_, data.all_ranges(), tx, rxs, soft, sigma_table, cfg_.pd, lambda);
        for (auto& b : beliefs_) {
            const double limit =
                tp_.resample_ess_fraction * static_cast<double>(b.particles.size());
            if (tp_.resample_ess_fraction >= 1.0 || effective_sample_size(b) <= limit)
                resample(b, filter_rng_);
        }
        return estimate(beliefs_, tp_.confirm_threshold);
    }

private:
    ScenarioConfig cfg_;
    TrackerParams tp_;
    FusionParams fp_;
    std::uint64_t run_seed_;
    Rng filter_rng_;
    std::vector<Belief> beliefs_;
    std::uint64_t next_label_ = 1;
    std::vector<FusionDiagnostic> diags_;
};

// ============================================================================
// Monte Carlo experiment
// ============================================================================

struct ResultRow {
    int run = 0;
    int scan = 0;
    double gospa_m = 0.0;
    double localization_m = 0.0;  // p-th roots of the decomposition terms
    double missed_m = 0.0;
    double false_m = 0.0;
};

struct TrackRow {
    int run = 0;
    int scan = 0;
    std::uint64_t label = 0;
    double existence = 0.0;
    TargetState state;
};

struct ScanRow {
    int run = 0;
    int scan = 0;
    int receiver = 0;  // 1-based in exports
    double range_m = 0.0;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<std::vector<GospaResult>> per_run;  // [run][scan]
    MgospaCurve curve;
    std::vector<TrackRow> tracks;
    std::vector<ScanRow> scans;
    std::vector<FusionDiagnostic> fusion_diags;
};

struct ExperimentOptions {
    int n_runs = 20;
    std::uint64_t base_seed = 1;
    int n_threads = 1;  // Monte Carlo runs are independent; >1 fans them out
    bool collect_tracks = false;
    bool collect_scans = false;
    bool collect_fusion_diags = false;
};

/// Stand-alone single-snapshot localization of one scan: receivers
/// contributing exactly one measurement feed the constrained localizer within
/// the physical beam (plus the monostatic range interval when available).
inline std::vector<Vec3> arce_snapshot_estimate(const ScenarioConfig& cfg, const ScanData& data,
                                                const FusionParams& fp) {
    std::vector<RangeMeasurement> meas;
    bool have_mono = false;
    double mono_rho = 0.0;
    for (std::size_t i = 0; i < cfg.n_receivers(); ++i) {
        if (data.ranges(i).size() != 1) continue;
        meas.push_back({cfg.rx_positions_m[i], data.ranges(i)[0], 1.0});
        if (i == 0) {
            have_mono = true;
            mono_rho = data.ranges(i)[0];
        }
    }
    if (meas.empty()) return {};
    Beam constraints = cfg.beam;
    if (have_mono) {
        const Vec3 boresight = angles_to_dir(cfg.beam.azimuth.center, cfg.beam.elevation.center);
        const double sigma = sigma_at(cfg, cfg.tx_position_m + (0.5 * mono_rho) * boresight, 0);
        const auto [lo, hi] = range_interval_from_monostatic(mono_rho, sigma, fp.n_sigma_range);
        if (!std::isinf(hi)) {
            const AxisInterval phys{0.5 * (constraints.range_min_m + constraints.range_max_m),
                                    0.5 * (constraints.range_max_m - constraints.range_min_m)};
            const AxisInterval cut =
                detail::intersect_axis(phys, AxisInterval{0.5 * (lo + hi), 0.5 * (hi - lo)}, false);
            constraints.range_min_m = cut.lo();
            constraints.range_max_m = cut.hi();
        }
    }
    return {arce_localize(meas, cfg.tx_position_m, constraints).position_m};
}

namespace detail {

/// Everything one Monte Carlo run produces, reduced into ExperimentResult in
/// run order afterwards so that threading cannot reorder output.
struct RunOutput {
    std::vector<GospaResult> gospa;
    std::vector<ResultRow> rows;
    std::vector<TrackRow> tracks;
    std::vector<ScanRow> scans;
    std::vector<FusionDiagnostic> fusion_diags;
};

inline RunOutput simulate_run(const ScenarioConfig& cfg, const TrackerParams& tp,
                              const FusionParams& fp, const GospaParams& gp, Variant variant,
                              const ExperimentOptions& opt, int run) {
    RunOutput out;
    Rng scen_rng(Rng::stream(opt.base_seed, 0x5ce4a210u, run));
    std::vector<ScanData> scans(cfg.n_scans);
    for (int k = 1; k <= cfg.n_scans; ++k) scans[k - 1] = simulate_scan(cfg, k, scen_rng);
    if (opt.collect_scans)
        for (int k = 1; k <= cfg.n_scans; ++k)
            for (std::size_t i = 0; i < cfg.n_receivers(); ++i)
                for (double r : scans[k - 1].ranges(i))
                    out.scans.push_back({run, k, static_cast<int>(i) + 1, r});

    TrackerPipeline pipeline(cfg, tp, fp, Rng::stream(opt.base_seed, 0x77ac4e11u, run));
    out.gospa.reserve(cfg.n_scans);
    for (int k = 1; k <= cfg.n_scans; ++k) {
        std::vector<Vec3> est_positions;
        if (variant == Variant::arce) {
            est_positions = arce_snapshot_estimate(cfg, scans[k - 1], fp);
        } else {
            const auto tracks = pipeline.advance(k, scans[k - 1]);
            est_positions.reserve(tracks.size());
            for (const auto& t : tracks) est_positions.push_back(t.state.position_m);
            if (opt.collect_tracks)
                for (const auto& t : tracks)
                    out.tracks.push_back({run, k, t.label, t.existence, t.state});
        }
        std::vector<Vec3> truth(cfg.targets.size());
        for (std::size_t j = 0; j < truth.size(); ++j) truth[j] = truth_position(cfg, j, k);
        const GospaResult g = gospa(est_positions, truth, gp);
        out.gospa.push_back(g);
        const double invp = 1.0 / gp.order;
        out.rows.push_back({run, k, g.value, std::pow(g.localization_p, invp),
                            std::pow(g.missed_p, invp), std::pow(g.false_p, invp)});
    }
    if (opt.collect_fusion_diags && variant != Variant::arce) {
        const auto& d = pipeline.diagnostics();
        out.fusion_diags.insert(out.fusion_diags.end(), d.begin(), d.end());
    }
    return out;
}

}  // namespace detail

/// Full Monte Carlo experiment for one variant. Scan simulation streams are
/// derived from (base_seed, run) only, so every variant sees identical scans,
/// and runs are independent, so opt.n_threads > 1 fans them out over a worker
/// pool without changing any output byte.
inline ExperimentResult run_experiment(const ScenarioConfig& cfg, const TrackerParams& tp,
                                       const FusionParams& fp_in, const GospaParams& gp,
                                       Variant variant, const ExperimentOptions& opt) {
    FusionParams fp = fp_in;
    switch (variant) {
        case Variant::spa: fp.mode = FusionMode::off; break;
        case Variant::nad: fp.mode = FusionMode::nad; break;
        case Variant::ad: fp.mode = FusionMode::ad; break;
        case Variant::arce: fp.mode = FusionMode::off; break;
    }

    std::vector<detail::RunOutput> slots(std::max(opt.n_runs, 0));
    const int n_workers = std::clamp(opt.n_threads, 1, std::max(opt.n_runs, 1));
    if (n_workers <= 1) {
        for (int run = 0; run < opt.n_runs; ++run)
            slots[run] = detail::simulate_run(cfg, tp, fp, gp, variant, opt, run);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (int w = 0; w < n_workers; ++w)
            pool.emplace_back([&] {
                for (int run = next.fetch_add(1); run < opt.n_runs; run = next.fetch_add(1))
                    slots[run] = detail::simulate_run(cfg, tp, fp, gp, variant, opt, run);
            });
        for (auto& t : pool) t.join();
    }

    ExperimentResult out;
    out.per_run.reserve(slots.size());
    for (detail::RunOutput& s : slots) {
        out.per_run.push_back(std::move(s.gospa));
        out.rows.insert(out.rows.end(), s.rows.begin(), s.rows.end());
        out.tracks.insert(out.tracks.end(), s.tracks.begin(), s.tracks.end());
        out.scans.insert(out.scans.end(), s.scans.begin(), s.scans.end());
        out.fusion_diags.insert(out.fusion_diags.end(), s.fusion_diags.begin(),
                                s.fusion_diags.end());
    }
    out.curve = mgospa(out.per_run);
    return out;
}

}  // namespace radnet
