#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "geom.hpp"

namespace radnet {

// ============================================================================
// GOSPA metric (alpha = 2) with exact assignment and decomposition
// ============================================================================

struct GospaParams {
    double cutoff_m = 2000.0;  // c
    double order = 2.0;        // p
};

struct GospaResult {
    double value = 0.0;         // metric in meters
    double localization_p = 0.0;  // p-domain decomposition terms:
    double missed_p = 0.0;        //   value^p == localization_p + missed_p + false_p
    double false_p = 0.0;
    int n_matched = 0;  // pairs matched below the cutoff
};

namespace detail {

/// Min-cost full assignment of rows to columns (n <= m) by the classic
/// potentials / shortest-augmenting-path method. Returns the row assigned to
/// each column (-1 if unassigned); cost(i, j) must be finite.
template <typename CostFn>
std::vector<int> assign_min_cost(int n, int m, CostFn cost) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_of_col(m, -1);
    for (int j = 1; j <= m; ++j) row_of_col[j - 1] = p[j] - 1;  // -1 where p[j] == 0
    return row_of_col;
}

}  // namespace detail

/// GOSPA between estimated and true position sets. Matched pairs closer than
/// the cutoff contribute their distance^p; every other cardinality mismatch
/// (missed truth, false estimate) contributes c^p / 2.
inline GospaResult gospa(const std::vector<Vec3>& estimates, const std::vector<Vec3>& truths,
                         const GospaParams& gp) {
    GospaResult out;
    const double c = gp.cutoff_m, p = gp.order;
    const double cap = std::pow(c, p);
    const int ne = static_cast<int>(estimates.size());
    const int nt = static_cast<int>(truths.size());
    if (ne == 0 && nt == 0) return out;

    // Assign the smaller set fully; a capped pair costs the same as leaving
    // both sides unmatched, so the full assignment loses no generality.
    const bool est_rows = ne <= nt;
    const int n = est_rows ? ne : nt;
    const int m = est_rows ? nt : ne;
    const auto cost = [&](int i, int j) {
        const Vec3& a = est_rows ? estimates[i] : truths[i];
        const Vec3& b = est_rows ? truths[j] : estimates[j];
        return std::fmin(std::pow((a - b).norm(), p), cap);
    };
    const std::vector<int> row_of_col =
        n > 0 ? detail::assign_min_cost(n, m, cost) : std::vector<int>(m, -1);

    int matched = 0;
    double loc = 0.0;
    for (int j = 0; j < m; ++j) {
        const int i = row_of_col[j];
        if (i < 0) continue;
        const Vec3& a = est_rows ? estimates[i] : truths[i];
        const Vec3& b = est_rows ? truths[j] : estimates[j];
        const double d = (a - b).norm();
        if (d < c) {
            loc += std::pow(d, p);
            ++matched;
        }
    }
    out.n_matched = matched;
    out.localization_p = loc;
    out.missed_p = 0.5 * cap * (nt - matched);
    out.false_p = 0.5 * cap * (ne - matched);
    out.value = std::pow(out.localization_p + out.missed_p + out.false_p, 1.0 / p);
    return out;
}

/// Per-scan means across runs; results[run][scan].
struct MgospaCurve {
    std::vector<double> value;
    std::vector<double> localization_p;
    std::vector<double> missed_p;
    std::vector<double> false_p;
};

inline MgospaCurve mgospa(const std::vector<std::vector<GospaResult>>& results) {
    MgospaCurve curve;
    if (results.empty()) return curve;
    const std::size_t n_scans = results.front().size();
    curve.value.assign(n_scans, 0.0);
    curve.localization_p.assign(n_scans, 0.0);
    curve.missed_p.assign(n_scans, 0.0);
    curve.false_p.assign(n_scans, 0.0);
    for (const auto& run : results)
        for (std::size_t k = 0; k < n_scans; ++k) {
            curve.value[k] += run[k].value;
            curve.localization_p[k] += run[k].localization_p;
            curve.missed_p[k] += run[k].missed_p;
            curve.false_p[k] += run[k].false_p;
        }
    const double inv = 1.0 / static_cast<double>(results.size());
    for (std::size_t k = 0; k < n_scans; ++k) {
        curve.value[k] *= inv;
        curve.localization_p[k] *= inv;
        curve.missed_p[k] *= inv;
        curve.false_p[k] *= inv;
    }
    return curve;
}

}  // namespace radnet
