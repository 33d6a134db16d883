#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace radnet {

// ============================================================================
// Probabilistic data association by iterative message passing
// ============================================================================
//
// Each receiver contributes an independent bipartite association problem
// between potential targets and that receiver's measurements. Targets carry
// an existence probability; a measurement is explained by exactly one target
// or by clutter, and a target generates at most one measurement per receiver.
// Association weights (per receiver):
//   beta(l, miss) = 1 - existence_l * pd
//   beta(l, m)    = existence_l * pd * g(l, m) / lambda_c(m)
// so the clutter hypothesis has unit weight. Marginal association
// probabilities are approximated by loopy sum-product iteration, which is
// exact whenever the receiver's graph is a tree (single target or single
// measurement).

struct ReceiverLikelihood {
    int n_targets = 0;
    int n_meas = 0;
    std::vector<double> g;                  // n_targets x n_meas, row-major
    std::vector<double> clutter_intensity;  // per measurement, > 0
    double pd = 1.0;

    double likelihood(int l, int m) const { return g[static_cast<std::size_t>(l) * n_meas + m]; }
};

struct LikelihoodTable {
    std::vector<ReceiverLikelihood> receivers;
    std::vector<double> existence;  // per target, shared across receivers
};

struct ReceiverAssociation {
    int n_targets = 0;
    int n_meas = 0;
    // target_probs[l * (n_meas+1) + 0] = miss, + (m+1) = measurement m
    std::vector<double> target_probs;
    // meas_probs[m * (n_targets+1) + 0] = clutter, + (l+1) = target l
    std::vector<double> meas_probs;

    double target_prob(int l, int m_plus_1) const {
        return target_probs[static_cast<std::size_t>(l) * (n_meas + 1) + m_plus_1];
    }
    double meas_prob(int m, int l_plus_1) const {
        return meas_probs[static_cast<std::size_t>(m) * (n_targets + 1) + l_plus_1];
    }
};

struct SoftAssociation {
    std::vector<ReceiverAssociation> receivers;
    int iterations = 0;          // max over receivers
    bool converged = false;      // all receivers reached tol
    std::uint64_t message_ops = 0;  // total message updates, for complexity checks
};

namespace detail {

constexpr double mu_cap = 1e150;
constexpr double denom_floor = 1e-300;

inline void association_weights(const ReceiverLikelihood& rl, const std::vector<double>& existence,
                                std::vector<double>& beta0, std::vector<double>& beta) {
    const int nl = rl.n_targets, nm = rl.n_meas;
    beta0.assign(nl, 1.0);
    beta.assign(static_cast<std::size_t>(nl) * nm, 0.0);
    for (int l = 0; l < nl; ++l) {
        const double epd = existence[l] * rl.pd;
        beta0[l] = std::fmax(1.0 - epd, 0.0);
        for (int m = 0; m < nm; ++m) {
            const double lam = rl.clutter_intensity[m];
            if (!(lam > 0.0)) throw std::invalid_argument("assoc: clutter intensity must be > 0");
            beta[static_cast<std::size_t>(l) * nm + m] = epd * rl.likelihood(l, m) / lam;
        }
    }
}

}  // namespace detail

/// Loopy sum-product association for every receiver in the table.
inline SoftAssociation spa_iterate(const LikelihoodTable& table, int max_iters = 20,
                                   double tol = 1e-6) {
    SoftAssociation out;
    out.converged = true;
    out.receivers.reserve(table.receivers.size());

    std::vector<double> beta0, beta, mu, nu, nu_prev, sum_mu, t_sum;
    for (const auto& rl : table.receivers) {
        const int nl = rl.n_targets, nm = rl.n_meas;
        if (static_cast<std::size_t>(nl) > table.existence.size())
            throw std::invalid_argument("spa_iterate: existence vector too short");
        detail::association_weights(rl, table.existence, beta0, beta);

        mu.assign(static_cast<std::size_t>(nl) * nm, 1.0);  // target -> measurement
        nu.assign(static_cast<std::size_t>(nm) * nl, 1.0);  // measurement -> target
        int iters = 0;
        bool conv = (nl == 0 || nm == 0);
        for (int it = 0; it < max_iters && !conv; ++it) {
            iters = it + 1;
            nu_prev = nu;
            // measurement -> target: exclude the receiving target's own message
            sum_mu.assign(nm, 0.0);
            for (int l = 0; l < nl; ++l)
                for (int m = 0; m < nm; ++m) sum_mu[m] += mu[static_cast<std::size_t>(l) * nm + m];
            for (int m = 0; m < nm; ++m)
                for (int l = 0; l < nl; ++l) {
                    const double d = 1.0 + sum_mu[m] - mu[static_cast<std::size_t>(l) * nm + m];
                    nu[static_cast<std::size_t>(m) * nl + l] =
                        1.0 / std::fmax(d, detail::denom_floor);
                }
            // target -> measurement: exclude the receiving measurement's own term
            t_sum.assign(nl, 0.0);
            for (int l = 0; l < nl; ++l) {
                double s = beta0[l];
                for (int m = 0; m < nm; ++m)
                    s += beta[static_cast<std::size_t>(l) * nm + m] *
                         nu[static_cast<std::size_t>(m) * nl + l];
                t_sum[l] = s;
            }
            for (int l = 0; l < nl; ++l)
                for (int m = 0; m < nm; ++m) {
                    const std::size_t lm = static_cast<std::size_t>(l) * nm + m;
                    const double d =
                        t_sum[l] - beta[lm] * nu[static_cast<std::size_t>(m) * nl + l];
                    mu[lm] = std::fmin(beta[lm] / std::fmax(d, detail::denom_floor),
                                       detail::mu_cap);
                }
            out.message_ops += static_cast<std::uint64_t>(nl) * nm * 2;
            double delta = 0.0;
            for (std::size_t i = 0; i < nu.size(); ++i)
                delta = std::fmax(delta, std::fabs(nu[i] - nu_prev[i]));
            conv = delta < tol;
        }
        out.converged = out.converged && conv;
        out.iterations = std::max(out.iterations, iters);

        ReceiverAssociation ra;
        ra.n_targets = nl;
        ra.n_meas = nm;
        ra.target_probs.assign(static_cast<std::size_t>(nl) * (nm + 1), 0.0);
        ra.meas_probs.assign(static_cast<std::size_t>(nm) * (nl + 1), 0.0);
        for (int l = 0; l < nl; ++l) {
            double* row = &ra.target_probs[static_cast<std::size_t>(l) * (nm + 1)];
            row[0] = beta0[l];
            double s = beta0[l];
            for (int m = 0; m < nm; ++m) {
                row[m + 1] = beta[static_cast<std::size_t>(l) * nm + m] *
                             nu[static_cast<std::size_t>(m) * nl + l];
                s += row[m + 1];
            }
            if (s > 0.0)
                for (int m = 0; m <= nm; ++m) row[m] /= s;
            else
                row[0] = 1.0;
        }
        for (int m = 0; m < nm; ++m) {
            double* row = &ra.meas_probs[static_cast<std::size_t>(m) * (nl + 1)];
            row[0] = 1.0;
            double s = 1.0;
            for (int l = 0; l < nl; ++l) {
                row[l + 1] = mu[static_cast<std::size_t>(l) * nm + m];
                s += row[l + 1];
            }
            for (int l = 0; l <= nl; ++l) row[l] /= s;
        }
        out.receivers.push_back(std::move(ra));
    }
    return out;
}

/// Hard measurement-to-target assignments from the measurement-oriented pmfs.
/// Per receiver, each entry is the target index or -1 for clutter; at most one
/// measurement maps to a given target. Conflicts are repaired greedily: the
/// higher-probability claimant keeps the target, the loser drops to its next
/// best non-forfeited option (clutter is always available).
inline std::vector<std::vector<int>> hard_associations(const SoftAssociation& soft) {
    std::vector<std::vector<int>> out;
    out.reserve(soft.receivers.size());
    for (const auto& ra : soft.receivers) {
        const int nl = ra.n_targets, nm = ra.n_meas;
        std::vector<std::vector<char>> forfeited(nm, std::vector<char>(nl, 0));
        std::vector<int> assign(nm, -1);

        const auto repick = [&](int m) {
            int best = -1;  // clutter
            double best_p = ra.meas_prob(m, 0);
            for (int l = 0; l < nl; ++l) {
                if (forfeited[m][l]) continue;
                const double p = ra.meas_prob(m, l + 1);
                if (p > best_p) {
                    best_p = p;
                    best = l;
                }
            }
            assign[m] = best;
        };
        for (int m = 0; m < nm; ++m) repick(m);

        for (bool changed = true; changed;) {
            changed = false;
            for (int l = 0; l < nl && !changed; ++l) {
                int keeper = -1;
                double keeper_p = -1.0;
                for (int m = 0; m < nm; ++m) {
                    if (assign[m] != l) continue;
                    const double p = ra.meas_prob(m, l + 1);
                    if (keeper < 0 || p > keeper_p) {
                        keeper = m;
                        keeper_p = p;
                    }
                }
                for (int m = 0; m < nm; ++m) {
                    if (assign[m] == l && m != keeper) {
                        forfeited[m][l] = 1;
                        repick(m);
                        changed = true;
                    }
                }
            }
        }
        out.push_back(std::move(assign));
    }
    return out;
}

}  // namespace radnet
