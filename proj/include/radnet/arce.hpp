#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "geom.hpp"

namespace radnet {

// ============================================================================
// Constrained single-snapshot localization from bistatic ranges
// ============================================================================
//
// Estimate a target position from one scan's bistatic ranges by least squares
// restricted to a box in (azimuth, elevation, monostatic range) about the
// transmitter. The box is searched by enumerating constraint-activity
// patterns (every combination of {interior, lower, upper} per axis), solving
// each reduced problem numerically from several seeds, and keeping the best
// feasible candidate. A deterministic grid+descent oracle of the same
// objective is provided for cross-checking.

struct RangeMeasurement {
    Vec3 rx_position_m;
    double range_m = 0.0;  // measured bistatic range
    double weight = 1.0;   // residual weight (1, or 1/sigma^2 for weighted LS)
};

/// Active-constraint bits of an estimate at the box boundary.
enum ArceActive : unsigned {
    arce_az_lo = 1u << 0,
    arce_az_hi = 1u << 1,
    arce_el_lo = 1u << 2,
    arce_el_hi = 1u << 3,
    arce_range_lo = 1u << 4,
    arce_range_hi = 1u << 5,
};

struct ArceEstimate {
    Vec3 position_m;
    double objective = std::numeric_limits<double>::infinity();
    unsigned active_constraints = 0;
    bool converged = false;
};

/// Weighted sum of squared range residuals at `pos`.
inline double arce_objective(const std::vector<RangeMeasurement>& meas, const Vec3& tx,
                             const Vec3& pos) {
    double f = 0.0;
    for (const auto& m : meas) {
        const double r = m.range_m - bistatic_range(pos, tx, m.rx_position_m);
        f += m.weight * r * r;
    }
    return f;
}

/// Monostatic-range box from the monostatic measurement: the one-way range
/// rho/2 padded by n_sigma halves of the range noise std. n_sigma = inf
/// disables the constraint (lower bound 0, upper bound unbounded).
inline std::pair<double, double> range_interval_from_monostatic(double rho, double sigma,
                                                                double n_sigma) {
    if (std::isinf(n_sigma))
        return {0.0, std::numeric_limits<double>::infinity()};
    const double half = 0.5 * rho;
    const double pad = 0.5 * n_sigma * sigma;
    return {std::fmax(0.0, half - pad), half + pad};
}

namespace detail {

struct ArceAxes {
    std::array<double, 3> lo, hi;  // azimuth, elevation, range
};

inline ArceAxes arce_axes(const Beam& box, const std::vector<RangeMeasurement>& meas) {
    ArceAxes a;
    a.lo = {box.azimuth.lo(), box.elevation.lo(), box.range_min_m};
    a.hi = {box.azimuth.hi(), box.elevation.hi(), box.range_max_m};
    if (std::isinf(a.hi[2])) {
        // Any feasible point's monostatic range is bounded by every bistatic sum.
        double cap = std::numeric_limits<double>::infinity();
        for (const auto& m : meas) cap = std::fmin(cap, m.range_m);
        a.hi[2] = std::fmax(a.lo[2], cap);
    }
    for (int k = 0; k < 3; ++k)
        if (!(a.lo[k] <= a.hi[k])) throw std::invalid_argument("arce: empty constraint box");
    return a;
}

inline Vec3 arce_point(const Vec3& tx, const std::array<double, 3>& u) {
    return tx + u[2] * angles_to_dir(u[0], u[1]);
}

/// Residuals and Jacobian columns of the objective in (az, el, range).
struct ArceModel {
    const std::vector<RangeMeasurement>& meas;
    Vec3 tx;

    double value(const std::array<double, 3>& u) const {
        return arce_objective(meas, tx, arce_point(tx, u));
    }

    /// Gradient g and Gauss-Newton Hessian H of the objective at u.
    void derivatives(const std::array<double, 3>& u, std::array<double, 3>& g,
                     std::array<std::array<double, 3>, 3>& h) const {
        const double ca = std::cos(u[0]), sa = std::sin(u[0]);
        const double ce = std::cos(u[1]), se = std::sin(u[1]);
        const double nv = std::sqrt(1.0 - sa * sa * se * se);
        const Vec3 v{ca * ce, sa * ce, ca * se};
        const Vec3 d = (1.0 / nv) * v;
        const Vec3 dv_az{-sa * ce, ca * ce, -sa * se};
        const Vec3 dv_el{-ca * se, -sa * se, ca * ce};
        // d(d)/dtheta = (I - d d^T) dv/dtheta / |v|
        const Vec3 d_az = (1.0 / nv) * (dv_az - d.dot(dv_az) * d);
        const Vec3 d_el = (1.0 / nv) * (dv_el - d.dot(dv_el) * d);

        const Vec3 x = tx + u[2] * d;
        g = {0.0, 0.0, 0.0};
        for (auto& row : h) row = {0.0, 0.0, 0.0};
        for (const auto& m : meas) {
            const Vec3 e = x - m.rx_position_m;
            const double n = e.norm();
            const Vec3 ue = n > 1e-9 ? (1.0 / n) * e : Vec3{};
            const double res = m.range_m - (u[2] + n);
            // dh/du per axis
            const std::array<double, 3> dh = {u[2] * ue.dot(d_az), u[2] * ue.dot(d_el),
                                              1.0 + ue.dot(d)};
            for (int a = 0; a < 3; ++a) {
                g[a] += -2.0 * m.weight * res * dh[a];
                for (int b = 0; b < 3; ++b) h[a][b] += 2.0 * m.weight * dh[a] * dh[b];
            }
        }
    }
};

/// Solve (A + lm*diag(A)) x = -b for n<=3 via Gaussian elimination.
inline bool solve_damped(int n, std::array<std::array<double, 3>, 3> a, std::array<double, 3> b,
                         double lm, std::array<double, 3>& x) {
    for (int i = 0; i < n; ++i) {
        a[i][i] += lm * std::fmax(a[i][i], 1e-12);
        b[i] = -b[i];
    }
    for (int c = 0; c < n; ++c) {
        int p = c;
        for (int r = c + 1; r < n; ++r)
            if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
        if (std::fabs(a[p][c]) < 1e-300) return false;
        std::swap(a[p], a[c]);
        std::swap(b[p], b[c]);
        for (int r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (int k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
        x[r] = s / a[r][r];
    }
    return true;
}

/// Projected Levenberg-Marquardt over the free axes of one activity pattern.
/// Returns the reached point (always inside the box) and a convergence flag.
inline bool lm_solve(const ArceModel& model, const ArceAxes& axes,
                     const std::array<int, 3>& free_axes, int n_free,
                     std::array<double, 3>& u) {
    const auto clamp_axis = [&](int k) {
        if (u[k] < axes.lo[k]) u[k] = axes.lo[k];
        if (u[k] > axes.hi[k]) u[k] = axes.hi[k];
    };
    std::array<double, 3> scale;
    for (int k = 0; k < 3; ++k) scale[k] = std::fmax(axes.hi[k] - axes.lo[k], k == 2 ? 1.0 : 1e-3);

    double f = model.value(u);
    double lm = 1e-3;
    int stall = 0;
    for (int it = 0; it < 120; ++it) {
        std::array<double, 3> g;
        std::array<std::array<double, 3>, 3> h;
        model.derivatives(u, g, h);

        // Restrict to free axes.
        std::array<double, 3> gr{};
        std::array<std::array<double, 3>, 3> hr{};
        for (int a = 0; a < n_free; ++a) {
            gr[a] = g[free_axes[a]];
            for (int b = 0; b < n_free; ++b) hr[a][b] = h[free_axes[a]][free_axes[b]];
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 24; ++attempt) {
            std::array<double, 3> step{};
            if (!solve_damped(n_free, hr, gr, lm, step)) break;
            std::array<double, 3> trial = u;
            for (int a = 0; a < n_free; ++a) trial[free_axes[a]] += step[a];
            for (int a = 0; a < n_free; ++a) {
                const int k = free_axes[a];
                if (trial[k] < axes.lo[k]) trial[k] = axes.lo[k];
                if (trial[k] > axes.hi[k]) trial[k] = axes.hi[k];
            }
            const double ft = model.value(trial);
            if (ft < f) {
                double rel_step = 0.0;
                for (int a = 0; a < n_free; ++a) {
                    const int k = free_axes[a];
                    rel_step = std::fmax(rel_step, std::fabs(trial[k] - u[k]) / scale[k]);
                }
                const bool tiny_gain = (f - ft) <= 1e-15 * (1.0 + f);
                u = trial;
                f = ft;
                lm = std::fmax(lm / 3.0, 1e-12);
                accepted = true;
                if (rel_step < 1e-12 || tiny_gain) ++stall;
                else stall = 0;
                break;
            }
            lm *= 4.0;
            if (lm > 1e12) break;
        }
        if (!accepted) ++stall;
        if (stall >= 2) {
            for (int k = 0; k < 3; ++k) clamp_axis(k);
            return true;
        }
    }
    for (int k = 0; k < 3; ++k) clamp_axis(k);
    return false;
}

inline unsigned active_mask(const ArceAxes& axes, const std::array<double, 3>& u) {
    unsigned mask = 0;
    const std::array<unsigned, 3> lo_bit = {arce_az_lo, arce_el_lo, arce_range_lo};
    const std::array<unsigned, 3> hi_bit = {arce_az_hi, arce_el_hi, arce_range_hi};
    for (int k = 0; k < 3; ++k) {
        const double tol = 1e-9 * (1.0 + std::fabs(axes.lo[k]) + std::fabs(axes.hi[k]));
        if (u[k] - axes.lo[k] <= tol) mask |= lo_bit[k];
        if (axes.hi[k] - u[k] <= tol) mask |= hi_bit[k];
    }
    return mask;
}

struct ArceCandidate {
    std::array<double, 3> u{};
    double objective = std::numeric_limits<double>::infinity();
    bool converged = false;
    bool valid = false;
};

/// Deterministic preference: lower objective, ties by range, azimuth, elevation.
inline bool candidate_better(const ArceCandidate& a, const ArceCandidate& b) {
    if (!b.valid) return a.valid;
    if (!a.valid) return false;
    const double tol = 1e-9 * (1.0 + std::fmin(a.objective, b.objective));
    if (a.objective < b.objective - tol) return true;
    if (b.objective < a.objective - tol) return false;
    if (a.u[2] != b.u[2]) return a.u[2] < b.u[2];
    if (a.u[0] != b.u[0]) return a.u[0] < b.u[0];
    return a.u[1] < b.u[1];
}

}  // namespace detail

/// Constrained least-squares localization over the (az, el, range) box.
inline ArceEstimate arce_localize(const std::vector<RangeMeasurement>& meas, const Vec3& tx,
                                  const Beam& box) {
    if (meas.empty()) throw std::invalid_argument("arce_localize: no measurements");
    const detail::ArceAxes axes = detail::arce_axes(box, meas);
    const detail::ArceModel model{meas, tx};

    const auto evaluate = [&](const std::array<double, 3>& u, bool converged) {
        detail::ArceCandidate c;
        c.u = u;
        c.objective = arce_objective(meas, tx, detail::arce_point(tx, u));
        c.converged = converged;
        c.valid = true;
        return c;
    };

    detail::ArceCandidate best;
    static constexpr double seed_fractions[3] = {0.25, 0.5, 0.75};

    // Axis states: 0 = free, 1 = at lower bound, 2 = at upper bound.
    for (int s0 = 0; s0 < 3; ++s0)
        for (int s1 = 0; s1 < 3; ++s1)
            for (int s2 = 0; s2 < 3; ++s2) {
                const std::array<int, 3> state = {s0, s1, s2};
                std::array<int, 3> free_axes{};
                int n_free = 0;
                bool skip = false;
                std::array<double, 3> base{};
                for (int k = 0; k < 3; ++k) {
                    const bool degenerate = axes.hi[k] <= axes.lo[k];
                    if (degenerate && state[k] != 1) skip = true;  // lo==hi: keep one copy
                    if (state[k] == 0) free_axes[n_free++] = k;
                    else base[k] = state[k] == 1 ? axes.lo[k] : axes.hi[k];
                }
                if (skip) continue;

                if (n_free == 0) {
                    const auto c = evaluate(base, true);
                    if (detail::candidate_better(c, best)) best = c;
                    continue;
                }
                const int n_seeds = n_free == 1 ? 3 : (n_free == 2 ? 9 : 27);
                for (int s = 0; s < n_seeds; ++s) {
                    std::array<double, 3> u = base;
                    int ss = s;
                    for (int a = 0; a < n_free; ++a) {
                        const int k = free_axes[a];
                        u[k] = axes.lo[k] + seed_fractions[ss % 3] * (axes.hi[k] - axes.lo[k]);
                        ss /= 3;
                    }
                    const bool conv = detail::lm_solve(model, axes, free_axes, n_free, u);
                    const auto c = evaluate(u, conv);
                    if (detail::candidate_better(c, best)) best = c;
                }
            }

    ArceEstimate out;
    out.position_m = detail::arce_point(tx, best.u);
    out.objective = best.objective;
    out.active_constraints = detail::active_mask(axes, best.u);
    out.converged = best.converged;
    return out;
}

/// Independent reference localizer: exhaustive grid over the box followed by
/// axis-wise golden-section refinement. Deterministic; shares only the
/// objective with arce_localize.
inline ArceEstimate grid_oracle_localize(const std::vector<RangeMeasurement>& meas, const Vec3& tx,
                                         const Beam& box, int resolution = 41) {
    if (meas.empty()) throw std::invalid_argument("grid_oracle_localize: no measurements");
    if (resolution < 2) resolution = 2;
    const detail::ArceAxes axes = detail::arce_axes(box, meas);

    const auto value = [&](const std::array<double, 3>& u) {
        return arce_objective(meas, tx, detail::arce_point(tx, u));
    };
    const auto axis_points = [&](int k) { return axes.hi[k] > axes.lo[k] ? resolution : 1; };
    const auto axis_coord = [&](int k, int i) {
        const int n = axis_points(k);
        return n == 1 ? axes.lo[k] : axes.lo[k] + (axes.hi[k] - axes.lo[k]) * i / (n - 1.0);
    };

    std::array<double, 3> best{};
    double best_f = std::numeric_limits<double>::infinity();
    for (int ir = 0; ir < axis_points(2); ++ir)
        for (int ia = 0; ia < axis_points(0); ++ia)
            for (int ie = 0; ie < axis_points(1); ++ie) {
                const std::array<double, 3> u = {axis_coord(0, ia), axis_coord(1, ie),
                                                 axis_coord(2, ir)};
                const double f = value(u);
                if (f < best_f) {
                    best_f = f;
                    best = u;
                }
            }

    // Axis-wise golden-section descent from the best grid cell.
    const double phi = 0.6180339887498948482;
    std::array<double, 3> step;
    for (int k = 0; k < 3; ++k)
        step[k] = axis_points(k) == 1 ? 0.0 : (axes.hi[k] - axes.lo[k]) / (resolution - 1.0);
    for (int sweep = 0; sweep < 80; ++sweep) {
        double max_rel = 0.0;
        for (int k = 0; k < 3; ++k) {
            if (step[k] <= 0.0) continue;
            double a = std::fmax(axes.lo[k], best[k] - step[k]);
            double b = std::fmin(axes.hi[k], best[k] + step[k]);
            double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
            auto at = [&](double v) {
                auto u = best;
                u[k] = v;
                return value(u);
            };
            double f1 = at(x1), f2 = at(x2);
            for (int it = 0; it < 48; ++it) {
                if (f1 < f2) {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - phi * (b - a);
                    f1 = at(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + phi * (b - a);
                    f2 = at(x2);
                }
            }
            const double v = f1 < f2 ? x1 : x2;
            const double fv = std::fmin(f1, f2);
            if (fv < best_f) {
                best_f = fv;
                best[k] = v;
            }
            step[k] *= 0.5;
            max_rel = std::fmax(max_rel, step[k] / std::fmax(axes.hi[k] - axes.lo[k], 1e-12));
        }
        if (max_rel < 1e-10) break;
    }

    ArceEstimate out;
    out.position_m = detail::arce_point(tx, best);
    out.objective = best_f;
    out.active_constraints = detail::active_mask(axes, best);
    out.converged = true;
    return out;
}

}  // namespace radnet
