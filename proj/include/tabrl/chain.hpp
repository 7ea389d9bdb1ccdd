#pragma once

// Statistics of the Markov chain a behavior policy induces on (s,a) pairs:
// stationary distribution, minimum occupancy, mixing time, visit counts.
// Also evaluates the Bernstein-style martingale deviation level used by the
// concentration property tests.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "tabrl/errors.hpp"
#include "tabrl/linalg.hpp"
#include "tabrl/mdp.hpp"
#include "tabrl/sampling.hpp"

namespace tabrl {

/// Kernel over (s,a) pairs: K((s,a) -> (s',a')) = P(s'|s,a) * pi_b(a'|s').
inline std::vector<double> behavior_chain(const TabularMdp& mdp, const BehaviorPolicy& behavior) {
    validate_behavior(mdp, behavior);
    const int S = mdp.num_states, A = mdp.num_actions, SA = S * A;
    std::vector<double> kernel(static_cast<size_t>(SA) * SA, 0.0);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
            const size_t base = static_cast<size_t>(mdp.pair_index(s, a)) * SA;
            for (int s2 = 0; s2 < S; ++s2) {
                const double p = mdp.p(s, a, s2);
                if (p == 0.0) continue;
                for (int a2 = 0; a2 < A; ++a2)
                    kernel[base + mdp.pair_index(s2, a2)] = p * behavior[mdp.pair_index(s2, a2)];
            }
        }
    return kernel;
}

inline double tv_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

struct StationaryResult {
    std::vector<double> distribution;
    bool ergodic = false;
    long long iterations = 0;
};

/// Power iteration from two distinct starts; the chain is declared ergodic
/// only if both converge to the same distribution within tolerance.
inline StationaryResult stationary_distribution(const std::vector<double>& kernel, int n,
                                                double tol = 1e-10,
                                                long long max_iters = 100000) {
    if (kernel.size() != static_cast<size_t>(n) * n)
        throw std::invalid_argument("stationary_distribution: dimension mismatch");
    auto iterate = [&](std::vector<double> mu, long long& used) {
        for (long long it = 1; it <= max_iters; ++it) {
            std::vector<double> next = vec_mat(mu, kernel, n, n);
            const double moved = tv_distance(mu, next);
            mu = std::move(next);
            if (moved <= tol) {
                used = it;
                return std::make_pair(mu, true);
            }
        }
        used = max_iters;
        return std::make_pair(mu, false);
    };

    std::vector<double> point(n, 0.0);
    point[0] = 1.0;
    std::vector<double> uniform(n, 1.0 / n);
    long long used_a = 0, used_b = 0;
    auto [mu_a, ok_a] = iterate(std::move(point), used_a);
    auto [mu_b, ok_b] = iterate(std::move(uniform), used_b);

    StationaryResult out;
    out.iterations = std::max(used_a, used_b);
    out.distribution = mu_b;
    out.ergodic = ok_a && ok_b && tv_distance(mu_a, mu_b) <= std::max(100.0 * tol, 1e-8);
    return out;
}

/// Smallest t with max_row d_TV(K^t(row,.), mu) <= 1/4. Starts a doubling
/// bracket and then bisects; valid because the max-row distance to a
/// stationary mu never increases with t.
inline long long mixing_time(const std::vector<double>& kernel, const std::vector<double>& mu,
                             long long cap = 1000000,
                             const std::vector<int>* rows = nullptr) {
    const size_t n = mu.size();
    if (kernel.size() != n * n) throw std::invalid_argument("mixing_time: dimension mismatch");

    auto worst_tv = [&](const std::vector<double>& power) {
        double worst = 0.0;
        auto row_tv = [&](size_t r) {
            return tv_distance({power.data() + r * n, n}, {mu.data(), n});
        };
        if (rows) {
            for (int r : *rows) worst = std::max(worst, row_tv(static_cast<size_t>(r)));
        } else {
            for (size_t r = 0; r < n; ++r) worst = std::max(worst, row_tv(r));
        }
        return worst;
    };

    // Cached powers K^(2^j) for bracket and bisection.
    std::vector<std::vector<double>> squares{kernel};
    std::vector<double> at_t = kernel;
    long long t = 1;
    double tv = worst_tv(at_t);
    while (tv > 0.25) {
        if (2 * t > cap)
            throw ConvergenceError("mixing_time: cap of " + std::to_string(cap) +
                                       " exceeded (last TV " + std::to_string(tv) + ")",
                                   tv);
        squares.push_back(mat_mat(squares.back(), squares.back(), n, n, n));
        at_t = squares.back();
        t *= 2;
        tv = worst_tv(at_t);
    }
    if (t == 1) return 1;

    auto power_of = [&](long long m) {
        std::vector<double> acc;
        for (size_t j = 0; j < squares.size(); ++j)
            if (m & (1LL << j))
                acc = acc.empty() ? squares[j] : mat_mat(acc, squares[j], n, n, n);
        return acc;
    };

    long long lo = t / 2, hi = t; // TV(lo) > 1/4 >= TV(hi)
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        if (worst_tv(power_of(mid)) <= 0.25) hi = mid;
        else lo = mid;
    }
    return hi;
}

/// K_t(s,a): visits of (s,a) among the first t trajectory entries.
inline std::vector<long long> visit_counts(const std::vector<std::pair<int, int>>& trajectory,
                                           long long t, int num_states, int num_actions) {
    if (t < 0 || t > static_cast<long long>(trajectory.size()))
        throw std::invalid_argument("visit_counts: t exceeds trajectory length");
    std::vector<long long> counts(static_cast<size_t>(num_states) * num_actions, 0);
    for (long long k = 0; k < t; ++k) {
        const auto& [s, a] = trajectory[static_cast<size_t>(k)];
        ++counts[static_cast<size_t>(s) * num_actions + a];
    }
    return counts;
}

/// Deviation level tau such that a martingale with increments bounded by R
/// and predictable variation W_n <= sigma_sq exceeds tau with probability
/// at most delta:
///   tau = sqrt(8 max{W_n, sigma_sq / 2^K} log(2K/delta)) + (4/3) R log(2K/delta).
inline double freedman_bound(double w_n, double sigma_sq, double r, int k, double delta) {
    if (!(w_n >= 0.0 && w_n <= sigma_sq))
        throw std::invalid_argument("freedman_bound: require 0 <= W_n <= sigma_sq");
    if (r < 0.0) throw std::invalid_argument("freedman_bound: R must be >= 0");
    if (k < 1) throw std::invalid_argument("freedman_bound: K must be >= 1");
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("freedman_bound: delta must be in (0,1)");
    const double log_term = std::log(2.0 * k / delta);
    const double var_floor = sigma_sq / std::pow(2.0, k);
    return std::sqrt(8.0 * std::max(w_n, var_floor) * log_term) + (4.0 / 3.0) * r * log_term;
}

struct ChainDiagnostics {
    std::vector<double> stationary; // over (s,a) pairs
    double mu_min = 0.0;            // min over allowed pairs
    long long t_mix = 0;            // 0 when not ergodic
    bool ergodic = false;
};

inline ChainDiagnostics diagnose_chain(const TabularMdp& mdp, const BehaviorPolicy& behavior,
                                       double tol = 1e-10, long long mix_cap = 1000000) {
    const int SA = mdp.num_pairs();
    const std::vector<double> kernel = behavior_chain(mdp, behavior);
    const StationaryResult st = stationary_distribution(kernel, SA, tol);

    ChainDiagnostics out;
    out.stationary = st.distribution;
    out.ergodic = st.ergodic;
    if (!st.ergodic) return out;

    std::vector<int> allowed_rows;
    double mu_min = std::numeric_limits<double>::infinity();
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a)
            if (mdp.allowed(s, a)) {
                allowed_rows.push_back(mdp.pair_index(s, a));
                mu_min = std::min(mu_min, st.distribution[mdp.pair_index(s, a)]);
            }
    out.mu_min = mu_min;
    out.t_mix = mixing_time(kernel, st.distribution, mix_cap, &allowed_rows);
    return out;
}

} // namespace tabrl
