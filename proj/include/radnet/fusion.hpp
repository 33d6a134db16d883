#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "arce.hpp"
#include "geom.hpp"
#include "rng.hpp"
#include "tracker.hpp"

namespace radnet {

// ============================================================================
// Constrained-localization fusion into the particle filter
// ============================================================================
//
// Once hard associations are available for a scan, each potential target's
// associated ranges feed the constrained localizer, and the resulting point
// estimate re-seeds the lowest-weight share of the target's particles. The
// angular constraints are either the physical beam (mode nad) or a virtual
// beam tightened around the particle cloud (mode ad); the monostatic range
// constraint comes from the associated monostatic measurement when there is
// one.

enum class FusionMode { off, nad, ad };

struct FusionParams {
    FusionMode mode = FusionMode::off;
    double alpha_r = 0.7;        // weight share kept by surviving particles
    double sigma_arce_m = 500.0; // std of re-seeded particle positions
    double c_tilde = 3.0;        // virtual-beam halfwidth in cloud stds
    bool beam_rejection = false; // zero out-of-beam weights after re-seeding
    double n_sigma_range = 3.0;  // monostatic range interval halfwidth, inf disables
    bool weighted_residuals = false;  // 1/sigma^2 residual weights in the localizer
};

struct FusionDiagnostic {
    int scan = 0;
    std::uint64_t label = 0;
    FusionMode mode = FusionMode::off;
    bool skipped = false;        // no associated measurements (belief passed through)
    int n_measurements = 0;
    int n_replaced = 0;
    double objective = std::numeric_limits<double>::quiet_NaN();
    unsigned active_constraints = 0;
    bool converged = false;
};

/// Largest particle count whose ascending-weight prefix mass stays within the
/// replaceable share (1 - alpha_r) of the total.
inline int select_replacement_count(const std::vector<double>& weights, double alpha_r) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) return 0;
    std::vector<double> sorted(weights);
    std::sort(sorted.begin(), sorted.end());
    const double limit = (1.0 - alpha_r) * total;
    double prefix = 0.0;
    int n = 0;
    for (double w : sorted) {
        prefix += w;
        if (prefix <= limit) ++n;
        else break;
    }
    return n;
}

namespace detail {

struct CircularStats {
    double mean = 0.0;
    double std = 0.0;
};

/// Weighted circular mean and dispersion of angles.
inline CircularStats circular_stats(const std::vector<double>& angles,
                                    const std::vector<double>& weights) {
    double c = 0.0, s = 0.0, total = 0.0;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        c += weights[i] * std::cos(angles[i]);
        s += weights[i] * std::sin(angles[i]);
        total += weights[i];
    }
    if (total <= 0.0 && !angles.empty()) {
        for (double a : angles) {
            c += std::cos(a);
            s += std::sin(a);
        }
        total = static_cast<double>(angles.size());
    }
    CircularStats out;
    if (total <= 0.0) return out;
    out.mean = std::atan2(s / total, c / total);
    const double r = std::fmin(std::hypot(c / total, s / total), 1.0);
    out.std = r > 1e-12 ? std::sqrt(std::fmax(-2.0 * std::log(r), 0.0))
                        : 3.1415926535897932384626433832795;
    return out;
}

}  // namespace detail

/// Tailored beam around the weighted particle cloud, intersected with the
/// physical beam (axis collapse on empty overlap). Halfwidths are c_tilde
/// cloud standard deviations; the range axis stays the physical beam's.
inline Beam virtual_beam(const Belief& b, const Beam& physical, const Vec3& tx, double c_tilde) {
    std::vector<double> az(b.particles.size()), el(b.particles.size());
    for (std::size_t p = 0; p < b.particles.size(); ++p) {
        const Vec3 d = b.particles[p].position_m - tx;
        az[p] = std::atan2(d.y, d.x);
        el[p] = std::atan2(d.z, d.x);
    }
    const auto sa = detail::circular_stats(az, b.weights);
    const auto se = detail::circular_stats(el, b.weights);
    Beam tailored;
    tailored.azimuth = {sa.mean, c_tilde * sa.std};
    tailored.elevation = {se.mean, c_tilde * se.std};
    tailored.range_min_m = physical.range_min_m;
    tailored.range_max_m = physical.range_max_m;
    return intersect_beams(physical, tailored);
}

/// Re-seed the N_g lowest-weight particles at the localizer's estimate.
/// Replaced particles share (1 - alpha_r) of the total weight uniformly and
/// keep their velocities; survivors share alpha_r proportionally. The total
/// (the existence) is preserved. Returns the number of replaced particles.
inline int arce_resample(Belief& b, const Vec3& arce_position, const FusionParams& fp, Rng& rng) {
    const std::size_t n = b.particles.size();
    const double total = b.existence();
    if (n == 0 || !(total > 0.0)) return 0;
    const int n_g = select_replacement_count(b.weights, fp.alpha_r);
    if (n_g <= 0) return 0;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return b.weights[a] < b.weights[c]; });

    double kept_mass = 0.0;
    for (std::size_t k = n_g; k < n; ++k) kept_mass += b.weights[order[k]];

    const double replaced_w = total * (1.0 - fp.alpha_r) / static_cast<double>(n_g);
    for (int k = 0; k < n_g; ++k) {
        const std::size_t p = order[static_cast<std::size_t>(k)];
        b.particles[p].position_m =
            arce_position + Vec3{fp.sigma_arce_m * rng.gaussian(), fp.sigma_arce_m * rng.gaussian(),
                                 fp.sigma_arce_m * rng.gaussian()};
        b.weights[p] = replaced_w;
    }
    if (kept_mass > 0.0) {
        const double scale = total * fp.alpha_r / kept_mass;
        for (std::size_t k = n_g; k < n; ++k) b.weights[order[k]] *= scale;
    }
    return n_g;
}

/// Zero the weights of particles outside the physical beam and rescale the
/// rest to keep the existence total. Left untouched if nothing would remain.
inline void reject_outside_beam(Belief& b, const Beam& physical, const Vec3& tx) {
    const double total = b.existence();
    if (!(total > 0.0)) return;
    std::vector<double> masked(b.weights);
    double kept = 0.0;
    for (std::size_t p = 0; p < b.particles.size(); ++p) {
        if (!in_beam(b.particles[p].position_m, physical, tx)) masked[p] = 0.0;
        kept += masked[p];
    }
    if (kept <= 0.0) return;
    const double scale = total / kept;
    for (std::size_t p = 0; p < b.particles.size(); ++p) b.weights[p] = masked[p] * scale;
}

/// Per-belief fusion pass over one scan. hard[i][m] holds the belief index
/// assigned to receiver i's measurement m (-1 for clutter). Randomness comes
/// from substreams derived from (stream_seed, belief label), so the outcome
/// does not depend on belief processing order. Mode off is a strict no-op.
inline std::vector<FusionDiagnostic> fusion_step(
    std::vector<Belief>& beliefs, const std::vector<std::vector<double>>& scan_ranges,
    const std::vector<std::vector<int>>& hard, const Vec3& tx, const std::vector<Vec3>& rxs,
    const Beam& physical, const std::vector<std::vector<double>>& sigma_table,
    const FusionParams& fp, int scan, std::uint64_t stream_seed) {
    std::vector<FusionDiagnostic> diags;
    if (fp.mode == FusionMode::off) return diags;
    diags.reserve(beliefs.size());

    for (std::size_t l = 0; l < beliefs.size(); ++l) {
        Belief& b = beliefs[l];
        FusionDiagnostic d;
        d.scan = scan;
        d.label = b.label;
        d.mode = fp.mode;

        std::vector<RangeMeasurement> meas;
        bool have_mono = false;
        double mono_rho = 0.0, mono_sigma = 0.0;
        for (std::size_t i = 0; i < rxs.size(); ++i) {
            for (std::size_t m = 0; m < hard[i].size(); ++m) {
                if (hard[i][m] != static_cast<int>(l)) continue;
                const double sigma = sigma_table[l][i];
                const double w =
                    fp.weighted_residuals && sigma > 0.0 ? 1.0 / (sigma * sigma) : 1.0;
                meas.push_back({rxs[i], scan_ranges[i][m], w});
                if (i == 0) {
                    have_mono = true;
                    mono_rho = scan_ranges[i][m];
                    mono_sigma = sigma;
                }
            }
        }
        d.n_measurements = static_cast<int>(meas.size());
        if (meas.empty() || b.particles.empty() || !(b.existence() > 0.0)) {
            d.skipped = true;
            diags.push_back(d);
            continue;
        }

        Beam constraints =
            fp.mode == FusionMode::ad ? virtual_beam(b, physical, tx, fp.c_tilde) : physical;
        if (have_mono) {
            const auto [lo, hi] = range_interval_from_monostatic(mono_rho, mono_sigma,
                                                                 fp.n_sigma_range);
            const AxisInterval phys{0.5 * (constraints.range_min_m + constraints.range_max_m),
                                    0.5 * (constraints.range_max_m - constraints.range_min_m)};
            const AxisInterval mono{std::isinf(hi) ? phys.center : 0.5 * (lo + hi),
                                    std::isinf(hi) ? phys.halfwidth : 0.5 * (hi - lo)};
            const AxisInterval cut = detail::intersect_axis(phys, mono, false);
            constraints.range_min_m = cut.lo();
            constraints.range_max_m = cut.hi();
        }

        const ArceEstimate est = arce_localize(meas, tx, constraints);
        d.objective = est.objective;
        d.active_constraints = est.active_constraints;
        d.converged = est.converged;

        Rng belief_rng(Rng::stream(stream_seed, b.label));
        d.n_replaced = arce_resample(b, est.position_m, fp, belief_rng);
        if (fp.beam_rejection) reject_outside_beam(b, physical, tx);
        diags.push_back(d);
    }
    return diags;
}

}  // namespace radnet
