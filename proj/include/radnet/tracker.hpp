#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "assoc.hpp"
#include "geom.hpp"
#include "rng.hpp"

namespace radnet {

// ============================================================================
// Particle-based Bernoulli beliefs over potential targets
// ============================================================================

struct TargetState {
    Vec3 position_m;
    Vec3 velocity_mps;
};

/// One potential target: a labeled particle cloud whose total weight is the
/// probability of existence (kept in [0, 1]).
struct Belief {
    std::uint64_t label = 0;
    std::vector<TargetState> particles;
    std::vector<double> weights;

    double existence() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    /// Weighted mean state (plain mean when total weight is zero).
    TargetState mean() const {
        TargetState m{};
        double total = 0.0;
        for (std::size_t p = 0; p < particles.size(); ++p) {
            const double w = weights[p];
            m.position_m += w * particles[p].position_m;
            m.velocity_mps += w * particles[p].velocity_mps;
            total += w;
        }
        if (total <= 0.0) {
            m = {};
            for (const auto& s : particles) {
                m.position_m += s.position_m;
                m.velocity_mps += s.velocity_mps;
            }
            total = static_cast<double>(particles.size());
        }
        if (total > 0.0) {
            m.position_m = (1.0 / total) * m.position_m;
            m.velocity_mps = (1.0 / total) * m.velocity_mps;
        }
        return m;
    }
};

struct TrackerParams {
    int n_particles = 500;
    double survival_prob = 0.999;
    double birth_prob = 0.01;             // existence of a newly initialized belief
    double confirm_threshold = 0.5;       // existence needed to report a track
    double prune_threshold = 1e-3;        // beliefs below this are dropped
    double process_noise_accel_mps2 = 0.05;
    double max_speed_mps = 15.0;
    double velocity_prior_kappa = 2.0;    // birth velocity std = max_speed / kappa
    double clutter_rate_floor = 1.0;      // assumed false alarms per receiver per scan, floor
    int spa_max_iters = 20;
    double spa_tol = 1e-6;
    double scan_period_s = 10.0;
    // Resample when ESS <= fraction * n_particles; 1.0 resamples every scan.
    double resample_ess_fraction = 1.0;
};

struct TrackEstimate {
    std::uint64_t label = 0;
    TargetState state;
    double existence = 0.0;
};

inline double normal_pdf(double x, double sigma) {
    const double inv = 1.0 / (sigma * 2.5066282746310005024);
    const double t = x / sigma;
    return inv * std::exp(-0.5 * t * t);
}

// ============================================================================
// Filtering steps
// ============================================================================

/// Nearly-constant-velocity prediction; the same white acceleration drives the
/// position and velocity of each particle. Weights scale by survival.
inline void predict(Belief& b, const TrackerParams& tp, Rng& rng) {
    const double dt = tp.scan_period_s;
    const double sa = tp.process_noise_accel_mps2;
    for (auto& s : b.particles) {
        const Vec3 a{sa * rng.gaussian(), sa * rng.gaussian(), sa * rng.gaussian()};
        s.position_m += dt * s.velocity_mps + (0.5 * dt * dt) * a;
        s.velocity_mps += dt * a;
    }
    for (auto& w : b.weights) w *= tp.survival_prob;
}

/// One belief per monostatic measurement: particle one-way ranges around
/// rho/2 with std sigma/2, directions uniform over the beam, zero-mean
/// Gaussian velocities with std max_speed/kappa per axis.
inline std::vector<Belief> initialize_births(const std::vector<double>& monostatic_ranges,
                                             const std::vector<double>& sigmas, const Vec3& tx,
                                             const Beam& beam, const TrackerParams& tp,
                                             std::uint64_t& next_label, Rng& rng) {
    std::vector<Belief> births;
    births.reserve(monostatic_ranges.size());
    const double vel_std = tp.max_speed_mps / tp.velocity_prior_kappa;
    for (std::size_t m = 0; m < monostatic_ranges.size(); ++m) {
        Belief b;
        b.label = next_label++;
        b.particles.resize(tp.n_particles);
        b.weights.assign(tp.n_particles, tp.birth_prob / tp.n_particles);
        for (auto& s : b.particles) {
            const double az = rng.uniform(beam.azimuth.lo(), beam.azimuth.hi());
            const double el = rng.uniform(beam.elevation.lo(), beam.elevation.hi());
            const double r =
                std::fmax(rng.gaussian(0.5 * monostatic_ranges[m], 0.5 * sigmas[m]), 0.0);
            s.position_m = tx + r * angles_to_dir(az, el);
            s.velocity_mps = {vel_std * rng.gaussian(), vel_std * rng.gaussian(),
                              vel_std * rng.gaussian()};
        }
        births.push_back(std::move(b));
    }
    return births;
}

/// Existence-normalized particle average of the range likelihood.
inline double spatial_likelihood(const Belief& b, double range_m, const Vec3& tx, const Vec3& rx,
                                 double sigma_m) {
    double num = 0.0, den = 0.0;
    for (std::size_t p = 0; p < b.particles.size(); ++p) {
        const double w = b.weights[p];
        num += w * normal_pdf(range_m - bistatic_range(b.particles[p].position_m, tx, rx), sigma_m);
        den += w;
    }
    return den > 0.0 ? num / den : 0.0;
}

/// Association inputs for one scan. sigma_table[l][i] is the range-noise std
/// for belief l at receiver i; lambda[i][m] the clutter intensity at
/// receiver i's measurement m.
inline LikelihoodTable build_likelihood_table(const std::vector<Belief>& beliefs,
                                              const std::vector<std::vector<double>>& scan_ranges,
                                              const Vec3& tx, const std::vector<Vec3>& rxs,
                                              const std::vector<std::vector<double>>& sigma_table,
                                              const std::vector<double>& pd,
                                              const std::vector<std::vector<double>>& lambda) {
    LikelihoodTable table;
    table.existence.reserve(beliefs.size());
    for (const auto& b : beliefs) table.existence.push_back(std::fmin(b.existence(), 1.0));
    table.receivers.resize(rxs.size());
    for (std::size_t i = 0; i < rxs.size(); ++i) {
        ReceiverLikelihood& rl = table.receivers[i];
        rl.n_targets = static_cast<int>(beliefs.size());
        rl.n_meas = static_cast<int>(scan_ranges[i].size());
        rl.pd = pd[i];
        rl.clutter_intensity = lambda[i];
        rl.g.assign(static_cast<std::size_t>(rl.n_targets) * rl.n_meas, 0.0);
        for (int l = 0; l < rl.n_targets; ++l)
            for (int m = 0; m < rl.n_meas; ++m)
                rl.g[static_cast<std::size_t>(l) * rl.n_meas + m] = spatial_likelihood(
                    beliefs[l], scan_ranges[i][m], tx, rxs[i], sigma_table[l][i]);
    }
    return table;
}

/// Measurement update. Per receiver, every particle weight is multiplied by
///   p(miss)*(1-pd) + sum_m p(l->m) * pd * N(rho_m; h_i(x_p), sigma_li) / lambda_im
/// and afterwards the weights are rescaled so the belief's total equals the
/// updated existence S / (S + 1 - prior), where S is the post-multiplier sum.
inline void update(std::vector<Belief>& beliefs,
                   const std::vector<std::vector<double>>& scan_ranges, const Vec3& tx,
                   const std::vector<Vec3>& rxs, const SoftAssociation& soft,
                   const std::vector<std::vector<double>>& sigma_table,
                   const std::vector<double>& pd,
                   const std::vector<std::vector<double>>& lambda) {
    for (std::size_t l = 0; l < beliefs.size(); ++l) {
        Belief& b = beliefs[l];
        if (b.particles.empty()) continue;
        const double prior = std::fmin(b.existence(), 1.0);
        for (std::size_t i = 0; i < rxs.size(); ++i) {
            const ReceiverAssociation& ra = soft.receivers[i];
            const int nm = ra.n_meas;
            const double miss = ra.target_prob(static_cast<int>(l), 0) * (1.0 - pd[i]);
            if (nm == 0) {
                for (auto& w : b.weights) w *= (1.0 - pd[i]);
                continue;
            }
            const double sigma = sigma_table[l][i];
            for (std::size_t p = 0; p < b.particles.size(); ++p) {
                double k = miss;
                const double h = bistatic_range(b.particles[p].position_m, tx, rxs[i]);
                for (int m = 0; m < nm; ++m)
                    k += ra.target_prob(static_cast<int>(l), m + 1) * pd[i] *
                         normal_pdf(scan_ranges[i][m] - h, sigma) / lambda[i][m];
                b.weights[p] *= k;
            }
        }
        double s = 0.0;
        for (double w : b.weights) s += w;
        const double denom = s + std::fmax(1.0 - prior, 0.0);
        const double post = denom > 0.0 ? std::fmin(s / denom, 1.0) : 0.0;
        if (s > 0.0) {
            const double scale = post / s;
            for (auto& w : b.weights) w *= scale;
        } else {
            std::fill(b.weights.begin(), b.weights.end(), 0.0);
        }
    }
}

/// Drop beliefs whose existence is strictly below the threshold.
inline void prune(std::vector<Belief>& beliefs, double threshold) {
    std::erase_if(beliefs, [&](const Belief& b) { return b.existence() < threshold; });
}

/// Systematic resampling to equal weights that keep the existence total.
/// Effective sample size (sum w)^2 / sum w^2; 0 for a dead belief.
inline double effective_sample_size(const Belief& b) {
    double s = 0.0, s2 = 0.0;
    for (double w : b.weights) {
        s += w;
        s2 += w * w;
    }
    return s2 > 0.0 ? s * s / s2 : 0.0;
}

inline void resample(Belief& b, Rng& rng) {
    const std::size_t n = b.particles.size();
    const double total = b.existence();
    if (n == 0 || total <= 0.0) return;
    const double step = total / static_cast<double>(n);
    const double start = rng.uniform01() * step;
    std::vector<TargetState> out;
    out.reserve(n);
    double cum = b.weights[0];
    std::size_t idx = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double u = start + step * static_cast<double>(j);
        while (cum < u && idx + 1 < n) cum += b.weights[++idx];
        out.push_back(b.particles[idx]);
    }
    b.particles = std::move(out);
    std::fill(b.weights.begin(), b.weights.end(), step);
}

/// Confirmed tracks: beliefs at or above the confirmation threshold.
inline std::vector<TrackEstimate> estimate(const std::vector<Belief>& beliefs,
                                           double confirm_threshold) {
    std::vector<TrackEstimate> out;
    for (const auto& b : beliefs) {
        const double e = b.existence();
        if (e >= confirm_threshold) out.push_back({b.label, b.mean(), e});
    }
    return out;
}

}  // namespace radnet
