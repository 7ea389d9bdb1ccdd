#pragma once

// The four stochastic learners: synchronous Q-learning, synchronous TD
// learning, asynchronous (single-trajectory) Q-learning, and synchronous
// Q-learning for finite-horizon MDPs.
//
// Reproducibility contract: a run is a pure function of its config. Sample
// tables at iteration t come from the stream (seed, t) with draws keyed by
// the pair index, so extending T extends, rather than reshuffles, the
// sample sequence of earlier iterations. Trajectory draws use the stream
// (seed, stream_id) with stream_id conventionally the run index.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabrl/bellman.hpp"
#include "tabrl/chain.hpp"
#include "tabrl/mdp.hpp"
#include "tabrl/rng.hpp"
#include "tabrl/sampling.hpp"
#include "tabrl/schedule.hpp"

namespace tabrl {

enum class InitKind { zeros, optimal, custom };

struct RunConfig {
    Schedule schedule;
    long long iterations = 0;
    uint64_t seed = 0;
    uint64_t stream_id = 0; // run index for trajectory-based learners
    InitKind init = InitKind::zeros;
    QTable custom_q;                // init == custom (sync/async)
    VTable custom_v;                // init == custom (TD)
    std::vector<QTable> custom_qh;  // init == custom (finite horizon)
    long long checkpoint_every = 0; // 0 = record the final iterate only
    bool store_snapshots = false;
    int start_state = 0; // async trajectory start

    // Optional relabeling of the per-pair sample keys; used to verify that
    // relabeling actions together with their streams is a symmetry.
    std::vector<int> sample_key_perm;
};

struct Checkpoint {
    long long t = 0;
    double sup_error = 0.0;
};

template <typename Estimate>
struct RunRecord {
    Estimate final_estimate;
    std::vector<Checkpoint> checkpoints; // only recorded when an oracle is supplied
    std::vector<Estimate> snapshots;     // only when store_snapshots
    RunConfig config;
    double wall_seconds = 0.0; // informational; not part of the determinism contract
    std::vector<std::string> warnings;
    std::vector<long long> visit_counts; // async only: updates per (s,a)
};

namespace detail {

// Iterates must stay in [0, bound]; allow a little headroom for rounding.
inline void check_range(const double* data, size_t n, double bound, const char* who) {
    for (size_t i = 0; i < n; ++i)
        if (!(data[i] >= -1e-9 && data[i] <= bound + 1e-9))
            throw std::logic_error(std::string(who) + ": iterate left [0, " +
                                   std::to_string(bound) + "]: " + std::to_string(data[i]));
}

class Stopwatch {
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();

  public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
};

inline bool checkpoint_due(const RunConfig& cfg, long long t) {
    return (cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0) || t == cfg.iterations;
}

} // namespace detail

/// Synchronous Q-learning: per iteration draw one next state for every
/// (s,a) and take the convex step toward the sampled Bellman update.
inline RunRecord<QTable> run_sync_q(const TabularMdp& mdp, const RunConfig& cfg,
                                    const QTable* oracle = nullptr) {
    if (cfg.iterations < 1) throw std::invalid_argument("run_sync_q: iterations must be >= 1");
    cfg.schedule.validate();
    const detail::Stopwatch clock;
    const int S = mdp.num_states, A = mdp.num_actions;
    const double vmax = 1.0 / (1.0 - mdp.discount);

    QTable q;
    switch (cfg.init) {
        case InitKind::zeros: q = QTable(S, A, 0.0); break;
        case InitKind::optimal:
            if (!oracle) throw std::invalid_argument("run_sync_q: optimal init needs an oracle");
            q = *oracle;
            break;
        case InitKind::custom: q = cfg.custom_q; break;
    }
    if (!q.same_shape(QTable(S, A)))
        throw std::invalid_argument("run_sync_q: initial table has wrong shape");
    detail::check_range(q.data.data(), q.data.size(), vmax, "run_sync_q init");

    const RowSampler sampler(mdp.transition, mdp.num_states);
    const bool permuted = !cfg.sample_key_perm.empty();
    if (permuted && static_cast<int>(cfg.sample_key_perm.size()) != S * A)
        throw std::invalid_argument("run_sync_q: sample_key_perm has wrong size");

    RunRecord<QTable> rec;
    rec.config = cfg;
    VTable v(S);
    for (long long t = 1; t <= cfg.iterations; ++t) {
        const double eta = cfg.schedule.rate(t);
        for (int s = 0; s < S; ++s) v[s] = greedy_value(q, mdp, s);
        const RngStream stream(cfg.seed, static_cast<uint64_t>(t));
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                const int idx = mdp.pair_index(s, a);
                const int key = permuted ? cfg.sample_key_perm[idx] : idx;
                const int s2 = mdp.allowed(s, a)
                                   ? sampler.draw(idx, stream.double_at(static_cast<uint64_t>(key)))
                                   : s;
                const double target = mdp.reward[idx] + mdp.discount * v[s2];
                q.data[idx] = (1.0 - eta) * q.data[idx] + eta * target;
            }
        if (detail::checkpoint_due(cfg, t)) {
            detail::check_range(q.data.data(), q.data.size(), vmax, "run_sync_q");
            if (oracle) rec.checkpoints.push_back({t, sup_error(q, *oracle, mdp)});
            if (cfg.store_snapshots) rec.snapshots.push_back(q);
        }
    }
    rec.final_estimate = std::move(q);
    rec.wall_seconds = clock.seconds();
    return rec;
}

/// Synchronous TD learning on a reward process, one independent next-state
/// draw per state per iteration.
inline RunRecord<VTable> run_sync_td(const TabularMrp& mrp, const RunConfig& cfg,
                                     const VTable* oracle = nullptr) {
    if (cfg.iterations < 1) throw std::invalid_argument("run_sync_td: iterations must be >= 1");
    cfg.schedule.validate();
    const detail::Stopwatch clock;
    const int S = mrp.num_states;
    const double vmax = 1.0 / (1.0 - mrp.discount);

    VTable v;
    switch (cfg.init) {
        case InitKind::zeros: v.assign(S, 0.0); break;
        case InitKind::optimal:
            if (!oracle) throw std::invalid_argument("run_sync_td: optimal init needs an oracle");
            v = *oracle;
            break;
        case InitKind::custom: v = cfg.custom_v; break;
    }
    if (static_cast<int>(v.size()) != S)
        throw std::invalid_argument("run_sync_td: initial table has wrong shape");
    detail::check_range(v.data(), v.size(), vmax, "run_sync_td init");

    const RowSampler sampler(mrp.transition, mrp.num_states);
    RunRecord<VTable> rec;
    rec.config = cfg;
    VTable prev(S);
    for (long long t = 1; t <= cfg.iterations; ++t) {
        const double eta = cfg.schedule.rate(t);
        prev = v;
        const RngStream stream(cfg.seed, static_cast<uint64_t>(t));
        for (int s = 0; s < S; ++s) {
            const int s2 = sampler.draw(s, stream.double_at(static_cast<uint64_t>(s)));
            v[s] = (1.0 - eta) * prev[s] + eta * (mrp.reward[s] + mrp.discount * prev[s2]);
        }
        if (detail::checkpoint_due(cfg, t)) {
            detail::check_range(v.data(), v.size(), vmax, "run_sync_td");
            if (oracle) rec.checkpoints.push_back({t, sup_error(v, *oracle)});
            if (cfg.store_snapshots) rec.snapshots.push_back(v);
        }
    }
    rec.final_estimate = std::move(v);
    rec.wall_seconds = clock.seconds();
    return rec;
}

/// Asynchronous Q-learning along a single behavior-policy trajectory with a
/// constant step size; exactly one (s,a) entry changes per iteration.
inline RunRecord<QTable> run_async_q(const TabularMdp& mdp, const BehaviorPolicy& behavior,
                                     const RunConfig& cfg, const QTable* oracle = nullptr) {
    if (cfg.iterations < 1) throw std::invalid_argument("run_async_q: iterations must be >= 1");
    if (cfg.schedule.kind != ScheduleKind::constant)
        throw std::invalid_argument("run_async_q: constant step size required");
    cfg.schedule.validate();
    validate_behavior(mdp, behavior);
    if (cfg.start_state < 0 || cfg.start_state >= mdp.num_states)
        throw std::invalid_argument("run_async_q: start state out of range");
    const detail::Stopwatch clock;
    const int S = mdp.num_states, A = mdp.num_actions;
    const double vmax = 1.0 / (1.0 - mdp.discount);
    const double eta = cfg.schedule.eta;

    QTable q;
    switch (cfg.init) {
        case InitKind::zeros: q = QTable(S, A, 0.0); break;
        case InitKind::optimal:
            if (!oracle) throw std::invalid_argument("run_async_q: optimal init needs an oracle");
            q = *oracle;
            break;
        case InitKind::custom: q = cfg.custom_q; break;
    }
    detail::check_range(q.data.data(), q.data.size(), vmax, "run_async_q init");

    RunRecord<QTable> rec;
    rec.config = cfg;

    const ChainDiagnostics diag = diagnose_chain(mdp, behavior);
    if (!diag.ergodic)
        rec.warnings.push_back("behavior chain not detected as ergodic; coverage may be partial");

    const RowSampler action_sampler(behavior, A);
    const RowSampler next_sampler(mdp.transition, S);
    rec.visit_counts.assign(static_cast<size_t>(S) * A, 0);
    RngStream rng(cfg.seed, cfg.stream_id);

    int state = cfg.start_state;
    for (long long t = 1; t <= cfg.iterations; ++t) {
        const int action = action_sampler.draw(state, rng.next_double());
        const int idx = mdp.pair_index(state, action);
        const int next = next_sampler.draw(idx, rng.next_double());
        const double target = mdp.reward[idx] + mdp.discount * greedy_value(q, mdp, next);
        q.data[idx] = (1.0 - eta) * q.data[idx] + eta * target;
        ++rec.visit_counts[idx];
        state = next;
        if (detail::checkpoint_due(cfg, t)) {
            detail::check_range(q.data.data(), q.data.size(), vmax, "run_async_q");
            if (oracle) rec.checkpoints.push_back({t, sup_error(q, *oracle, mdp)});
            if (cfg.store_snapshots) rec.snapshots.push_back(q);
        }
    }
    rec.final_estimate = std::move(q);
    rec.wall_seconds = clock.seconds();
    return rec;
}

/// Synchronous Q-learning for finite-horizon MDPs: per iteration the steps
/// are refreshed from h = H down to 1, each using the just-updated values
/// of step h+1 as its continuation; values are undiscounted. When the
/// kernel is time-invariant a single sample table per iteration is shared
/// by all steps.
inline RunRecord<std::vector<QTable>> run_finite_horizon_q(
    const FiniteHorizonMdp& fmdp, const RunConfig& cfg,
    const std::vector<QTable>* oracle = nullptr) {
    if (cfg.iterations < 1)
        throw std::invalid_argument("run_finite_horizon_q: iterations must be >= 1");
    cfg.schedule.validate();
    const detail::Stopwatch clock;
    const int S = fmdp.num_states, A = fmdp.num_actions, H = fmdp.horizon;
    const int pairs = S * A;

    std::vector<QTable> q;
    switch (cfg.init) {
        case InitKind::zeros: q.assign(H, QTable(S, A, 0.0)); break;
        case InitKind::optimal:
            if (!oracle)
                throw std::invalid_argument("run_finite_horizon_q: optimal init needs an oracle");
            q = *oracle;
            break;
        case InitKind::custom: q = cfg.custom_qh; break;
    }
    if (static_cast<int>(q.size()) != H)
        throw std::invalid_argument("run_finite_horizon_q: initial tables have wrong shape");
    for (int h = 1; h <= H; ++h)
        detail::check_range(q[h - 1].data.data(), q[h - 1].data.size(),
                            static_cast<double>(H - h + 1), "run_finite_horizon_q init");

    std::vector<RowSampler> samplers;
    for (const auto& kernel : fmdp.transition_h) samplers.emplace_back(kernel, S);
    const bool shared = fmdp.time_invariant_kernel();

    auto sup_error_all = [&](const std::vector<QTable>& est, const std::vector<QTable>& ref) {
        double worst = 0.0;
        for (int h = 0; h < H; ++h)
            for (size_t i = 0; i < est[h].data.size(); ++i)
                worst = std::max(worst, std::abs(est[h].data[i] - ref[h].data[i]));
        return worst;
    };

    RunRecord<std::vector<QTable>> rec;
    rec.config = cfg;
    VTable v_next(S);
    for (long long t = 1; t <= cfg.iterations; ++t) {
        const double eta = cfg.schedule.rate(t);
        const RngStream stream(cfg.seed, static_cast<uint64_t>(t));
        std::fill(v_next.begin(), v_next.end(), 0.0); // no value beyond the horizon
        for (int h = H; h >= 1; --h) {
            QTable& qh = q[h - 1];
            const RowSampler& sampler = samplers[shared ? 0 : h - 1];
            const uint64_t key_base = shared ? 0 : static_cast<uint64_t>(h - 1) * pairs;
            const auto& rewards = fmdp.rewards(h);
            for (int idx = 0; idx < pairs; ++idx) {
                const int s2 = sampler.draw(idx, stream.double_at(key_base + idx));
                qh.data[idx] = (1.0 - eta) * qh.data[idx] + eta * (rewards[idx] + v_next[s2]);
            }
            for (int s = 0; s < S; ++s) {
                double best = qh(s, 0);
                for (int a = 1; a < A; ++a) best = std::max(best, qh(s, a));
                v_next[s] = best;
            }
        }
        if (detail::checkpoint_due(cfg, t)) {
            for (int h = 1; h <= H; ++h)
                detail::check_range(q[h - 1].data.data(), q[h - 1].data.size(),
                                    static_cast<double>(H - h + 1), "run_finite_horizon_q");
            if (oracle) rec.checkpoints.push_back({t, sup_error_all(q, *oracle)});
            if (cfg.store_snapshots) rec.snapshots.push_back(q);
        }
    }
    rec.final_estimate = std::move(q);
    rec.wall_seconds = clock.seconds();
    return rec;
}

} // namespace tabrl
