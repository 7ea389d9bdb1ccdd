#pragma once

// Seeded sampling against an MDP: per-pair generative-model tables,
// the sampled Bellman operator, and single trajectory steps.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tabrl/bellman.hpp"
#include "tabrl/mdp.hpp"
#include "tabrl/rng.hpp"

namespace tabrl {

/// Precomputed row CDFs for inverse-CDF categorical draws. A draw with
/// uniform u picks the smallest index whose cumulative sum is >= u, so a
/// u landing exactly on a boundary resolves to the lower index.
struct RowSampler {
    int ncols = 0;
    std::vector<double> cdf; // row-major, same shape as the source matrix

    RowSampler() = default;
    RowSampler(const std::vector<double>& rows, int ncols_) : ncols(ncols_), cdf(rows) {
        const size_t nrows = rows.size() / ncols_;
        for (size_t r = 0; r < nrows; ++r) {
            double acc = 0.0;
            for (int c = 0; c < ncols_; ++c) {
                acc += rows[r * ncols_ + c];
                cdf[r * ncols_ + c] = acc;
            }
            cdf[r * ncols_ + ncols_ - 1] = 1.0; // guard against rounding shortfall
        }
    }

    int draw(size_t row, double u) const {
        const double* begin = cdf.data() + row * ncols;
        int lo = 0, hi = ncols - 1;
        while (lo < hi) {
            const int mid = (lo + hi) / 2;
            if (begin[mid] >= u) hi = mid;
            else lo = mid + 1;
        }
        return lo;
    }
};

/// One sampled next state per (s,a) pair, as produced by a generative model.
struct SyncSampleTable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<int> next_state; // pair-indexed

    int at(int s, int a) const { return next_state[static_cast<size_t>(s) * num_actions + a]; }
};

/// Draws the (s,a) entry from the row CDF with the stream word keyed by the
/// pair index, so a table is a pure function of (seed, stream_id) and the
/// draws for distinct pairs are independent. Forbidden pairs self-loop.
inline SyncSampleTable draw_sync_samples(const TabularMdp& mdp, const RowSampler& sampler,
                                         const RngStream& rng) {
    SyncSampleTable out;
    out.num_states = mdp.num_states;
    out.num_actions = mdp.num_actions;
    out.next_state.resize(mdp.num_pairs());
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            const int idx = mdp.pair_index(s, a);
            out.next_state[idx] =
                mdp.allowed(s, a) ? sampler.draw(idx, rng.double_at(idx)) : s;
        }
    return out;
}

inline SyncSampleTable draw_sync_samples(const TabularMdp& mdp, const RngStream& rng) {
    return draw_sync_samples(mdp, RowSampler(mdp.transition, mdp.num_states), rng);
}

/// Sampled Bellman update: out(s,a) = r(s,a) + gamma * max_{a'} q(s', a')
/// at the sampled next state s' of the pair. Unbiased for the exact
/// operator conditional on q.
inline QTable empirical_bellman(const QTable& q, const SyncSampleTable& samples,
                                const TabularMdp& mdp) {
    if (q.num_states != mdp.num_states || q.num_actions != mdp.num_actions ||
        samples.num_states != mdp.num_states || samples.num_actions != mdp.num_actions)
        throw std::invalid_argument("empirical_bellman: dimension mismatch");
    const VTable v = state_values(q, mdp);
    QTable out(mdp.num_states, mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            const int s2 = samples.at(s, a);
            if (s2 < 0 || s2 >= mdp.num_states)
                throw std::invalid_argument("empirical_bellman: invalid sample index");
            out(s, a) = mdp.r(s, a) + mdp.discount * v[s2];
        }
    return out;
}

/// Stochastic behavior policy: row-stochastic (state, action) table placing
/// zero mass on forbidden actions.
using BehaviorPolicy = std::vector<double>;

inline void validate_behavior(const TabularMdp& mdp, const BehaviorPolicy& behavior) {
    if (behavior.size() != static_cast<size_t>(mdp.num_pairs()))
        throw std::invalid_argument("behavior policy: dimension mismatch");
    for (int s = 0; s < mdp.num_states; ++s) {
        double sum = 0.0;
        for (int a = 0; a < mdp.num_actions; ++a) {
            const double p = behavior[mdp.pair_index(s, a)];
            if (p < 0.0) throw std::invalid_argument("behavior policy: negative probability");
            if (p > 0.0 && !mdp.allowed(s, a))
                throw std::invalid_argument("behavior policy: mass on forbidden action");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("behavior policy: row " + std::to_string(s) +
                                        " sums to " + std::to_string(sum));
    }
}

inline BehaviorPolicy uniform_behavior(const TabularMdp& mdp) {
    BehaviorPolicy b(mdp.num_pairs(), 0.0);
    for (int s = 0; s < mdp.num_states; ++s) {
        int n = 0;
        for (int a = 0; a < mdp.num_actions; ++a)
            if (mdp.allowed(s, a)) ++n;
        for (int a = 0; a < mdp.num_actions; ++a)
            if (mdp.allowed(s, a)) b[mdp.pair_index(s, a)] = 1.0 / n;
    }
    return b;
}

struct StepResult {
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
};

/// One Markovian step under a behavior policy; consumes two stream draws.
inline StepResult trajectory_step(const TabularMdp& mdp, const BehaviorPolicy& behavior,
                                  int state, RngStream& rng) {
    validate_behavior(mdp, behavior);
    RowSampler action_sampler(behavior, mdp.num_actions);
    RowSampler next_sampler(mdp.transition, mdp.num_states);
    StepResult out;
    out.action = action_sampler.draw(state, rng.next_double());
    out.reward = mdp.r(state, out.action);
    out.next_state = next_sampler.draw(mdp.pair_index(state, out.action), rng.next_double());
    return out;
}

} // namespace tabrl
