#pragma once

// The 4-state instance on which Q-learning is provably slow, its
// closed-form optimal values, and Monte Carlo probes of the bias/variance
// split of the value estimate on it.
//
// Layout (0-based states and actions; the construction's action labels
// 1,2 map to indices 0,1):
//   state 0: one action, absorbing, reward 0;
//   state 1: two actions with identical rows: stay with prob p, fall to
//            state 0 otherwise, reward 1 — the pair whose argmax drives
//            over-estimation;
//   state 2: one action, same row shape as state 1, reward 1;
//   state 3: one action, absorbing, reward 1.
// The single-action states are padded to two actions with a mask.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tabrl/bellman.hpp"
#include "tabrl/learners.hpp"
#include "tabrl/mdp.hpp"
#include "tabrl/parallel.hpp"
#include "tabrl/rng.hpp"

namespace tabrl {

inline constexpr double kHardGammaMin = 0.75;

/// Stay probability p = (4*gamma - 1) / (3*gamma).
inline double hard_mdp_p(double gamma) {
    if (!(gamma >= kHardGammaMin && gamma < 1.0))
        throw std::domain_error("hard mdp: gamma must be in [0.75, 1)");
    return (4.0 * gamma - 1.0) / (3.0 * gamma);
}

inline TabularMdp build_hard_mdp(double gamma) {
    const double p = hard_mdp_p(gamma);
    TabularMdp m;
    m.num_states = 4;
    m.num_actions = 2;
    m.discount = gamma;
    m.reward.assign(8, 0.0);
    m.transition.assign(8 * 4, 0.0);
    m.action_mask = {1, 0, 1, 1, 1, 0, 1, 0};

    auto set_row = [&](int s, int a, int s2, double prob, int s3 = -1, double prob2 = 0.0) {
        const size_t base = static_cast<size_t>(m.pair_index(s, a)) * 4;
        m.transition[base + s2] = prob;
        if (s3 >= 0) m.transition[base + s3] = prob2;
    };
    set_row(0, 0, 0, 1.0);                 // absorbing, reward 0
    set_row(1, 0, 1, p, 0, 1.0 - p);
    set_row(1, 1, 1, p, 0, 1.0 - p);
    set_row(2, 0, 2, p, 0, 1.0 - p);
    set_row(3, 0, 3, 1.0);                 // absorbing, reward 1
    m.reward[m.pair_index(1, 0)] = 1.0;
    m.reward[m.pair_index(1, 1)] = 1.0;
    m.reward[m.pair_index(2, 0)] = 1.0;
    m.reward[m.pair_index(3, 0)] = 1.0;
    // masked pairs: reward 0 and a self-loop
    set_row(0, 1, 0, 1.0);
    set_row(2, 1, 2, 1.0);
    set_row(3, 1, 3, 1.0);
    return m;
}

/// Closed-form optimal values of the hard instance.
struct HardMdpOracle {
    double gamma = 0.0;
    double p = 0.0;
    VTable v_star;  // (0, 3/(4(1-g)), 3/(4(1-g)), 1/(1-g))
    QTable q_star;  // masked entries are 0
};

inline HardMdpOracle hard_oracle(double gamma) {
    HardMdpOracle o;
    o.gamma = gamma;
    o.p = hard_mdp_p(gamma);
    const double v_mid = 3.0 / (4.0 * (1.0 - gamma)); // = 1/(1 - gamma p)
    const double v_top = 1.0 / (1.0 - gamma);
    o.v_star = {0.0, v_mid, v_mid, v_top};
    o.q_star = QTable(4, 2, 0.0);
    o.q_star(1, 0) = v_mid;
    o.q_star(1, 1) = v_mid;
    o.q_star(2, 0) = v_mid;
    o.q_star(3, 0) = v_top;
    return o;
}

/// The matched policy-evaluation counterpart: the hard instance restricted
/// to its first action, as a reward process.
inline TabularMrp hard_mrp(double gamma) {
    DeterministicPolicy pi;
    pi.action_of = {0, 0, 0, 0};
    return mrp_under_policy(build_hard_mdp(gamma), pi);
}

/// Empirical split of E[(V_T(s) - V*(s))^2] into squared bias and variance.
/// Estimators are matched (variance normalized by the run count), so
/// mse == squared_bias + variance holds as an identity of the sample.
struct BiasVarianceEstimate {
    int state = 0;
    int num_runs = 0;
    double mean_estimate = 0.0;
    double bias = 0.0; // mean_estimate - V*(state), sign preserved
    double squared_bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    double se_mean = 0.0; // jackknife standard errors
    double se_squared_bias = 0.0;
    double se_variance = 0.0;
    double se_mse = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

template <typename Stat>
double jackknife_se(const std::vector<double>& x, Stat stat) {
    const size_t n = x.size();
    if (n < 2) return 0.0;
    std::vector<double> loo(n);
    std::vector<double> rest(n - 1);
    for (size_t i = 0; i < n; ++i) {
        rest.clear();
        for (size_t j = 0; j < n; ++j)
            if (j != i) rest.push_back(x[j]);
        loo[i] = stat(rest);
    }
    double mean = 0.0;
    for (double v : loo) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

} // namespace detail

/// Summarizes independent samples of V_T(state) against the exact value.
inline BiasVarianceEstimate summarize_bias_variance(const std::vector<double>& values,
                                                    double v_star, int state) {
    const int n = static_cast<int>(values.size());
    if (n < 2) throw std::invalid_argument("bias_variance: need at least 2 runs");
    auto mean_of = [](const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) m += v;
        return m / static_cast<double>(x.size());
    };
    auto var_of = [&](const std::vector<double>& x) {
        const double m = mean_of(x);
        double ss = 0.0;
        for (double v : x) ss += (v - m) * (v - m);
        return ss / static_cast<double>(x.size());
    };
    auto mse_of = [&](const std::vector<double>& x) {
        double ss = 0.0;
        for (double v : x) ss += (v - v_star) * (v - v_star);
        return ss / static_cast<double>(x.size());
    };

    BiasVarianceEstimate out;
    out.state = state;
    out.num_runs = n;
    out.mean_estimate = mean_of(values);
    out.bias = out.mean_estimate - v_star;
    out.squared_bias = out.bias * out.bias;
    out.variance = var_of(values);
    out.mse = mse_of(values);
    out.se_mean = detail::jackknife_se(values, mean_of);
    out.se_squared_bias = detail::jackknife_se(values, [&](const std::vector<double>& x) {
        const double b = mean_of(x) - v_star;
        return b * b;
    });
    out.se_variance = detail::jackknife_se(values, var_of);
    out.se_mse = detail::jackknife_se(values, mse_of);
    return out;
}

/// Runs synchronous Q-learning on the hard instance once per seed in
/// run_seeds (in parallel) and summarizes V_T(state).
inline BiasVarianceEstimate bias_variance_probe(double gamma, const Schedule& schedule,
                                                long long iterations,
                                                const std::vector<uint64_t>& run_seeds,
                                                int state) {
    if (run_seeds.size() < 2)
        throw std::invalid_argument("bias_variance_probe: need at least 2 runs");
    if (state < 0 || state > 3) throw std::invalid_argument("bias_variance_probe: bad state");
    const TabularMdp mdp = build_hard_mdp(gamma);
    const HardMdpOracle oracle = hard_oracle(gamma);

    std::vector<double> values(run_seeds.size());
    parallel_for(static_cast<long long>(run_seeds.size()), [&](long long i) {
        RunConfig cfg;
        cfg.schedule = schedule;
        cfg.iterations = iterations;
        cfg.seed = run_seeds[static_cast<size_t>(i)];
        const RunRecord<QTable> rec = run_sync_q(mdp, cfg);
        values[static_cast<size_t>(i)] = greedy_value(rec.final_estimate, mdp, state);
    });

    BiasVarianceEstimate out = summarize_bias_variance(values, oracle.v_star[state], state);
    std::vector<uint64_t> sorted = run_seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        out.warnings.push_back("degenerate seeds: duplicate run seeds collapse the variance");
    if (run_seeds.size() < 8)
        out.warnings.push_back("insufficient runs: standard errors dominate the estimates");
    return out;
}

/// Convenience overload: run r uses the sub-seed derived from (seed, r).
inline BiasVarianceEstimate bias_variance_probe(double gamma, const Schedule& schedule,
                                                long long iterations, int num_runs,
                                                uint64_t seed, int state) {
    std::vector<uint64_t> run_seeds(static_cast<size_t>(num_runs));
    for (int r = 0; r < num_runs; ++r)
        run_seeds[static_cast<size_t>(r)] = derive_seed(seed, static_cast<uint64_t>(r));
    return bias_variance_probe(gamma, schedule, iterations, run_seeds, state);
}

} // namespace tabrl
