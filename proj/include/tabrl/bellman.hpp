#pragma once

// Bellman machinery: the optimality operator, greedy policies, the
// policy-induced kernels, and the per-pair next-state variance.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tabrl/mdp.hpp"

namespace tabrl {

/// Greedy state value max_a q(s,a) over allowed actions.
inline double greedy_value(const QTable& q, const TabularMdp& mdp, int s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < q.num_actions; ++a)
        if (mdp.allowed(s, a)) best = std::max(best, q(s, a));
    return best;
}

inline VTable state_values(const QTable& q, const TabularMdp& mdp) {
    VTable v(q.num_states);
    for (int s = 0; s < q.num_states; ++s) v[s] = greedy_value(q, mdp, s);
    return v;
}

/// One application of the optimality operator:
/// out(s,a) = r(s,a) + gamma * sum_{s'} P(s'|s,a) max_{a'} q(s',a').
inline QTable bellman_optimality(const TabularMdp& mdp, const QTable& q) {
    if (q.num_states != mdp.num_states || q.num_actions != mdp.num_actions)
        throw std::invalid_argument("bellman_optimality: dimension mismatch");
    const VTable v = state_values(q, mdp);
    QTable out(mdp.num_states, mdp.num_actions);
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            auto row = mdp.row(s, a);
            double acc = 0.0;
            for (int s2 = 0; s2 < mdp.num_states; ++s2) acc += row[s2] * v[s2];
            out(s, a) = mdp.r(s, a) + mdp.discount * acc;
        }
    return out;
}

/// Smallest-index argmax per state; ties go to the lower action index.
inline DeterministicPolicy greedy_policy(const QTable& q, const TabularMdp& mdp) {
    DeterministicPolicy pi;
    pi.action_of.resize(q.num_states);
    for (int s = 0; s < q.num_states; ++s) {
        int best_a = -1;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < q.num_actions; ++a) {
            if (!mdp.allowed(s, a)) continue;
            const double val = q(s, a);
            if (std::isnan(val)) throw std::invalid_argument("greedy_policy: NaN entry");
            if (val > best) {
                best = val;
                best_a = a;
            }
        }
        pi.action_of[s] = best_a;
    }
    return pi;
}

/// Unmasked overload.
inline DeterministicPolicy greedy_policy(const QTable& q) {
    TabularMdp dummy;
    dummy.num_states = q.num_states;
    dummy.num_actions = q.num_actions;
    return greedy_policy(q, dummy);
}

struct PolicyMatrices {
    std::vector<double> state_action; // (SA x SA): P(s'|s,a) * 1[a' == pi(s')]
    std::vector<double> state;        // (S x S):  P(s'|s,pi(s))
};

inline PolicyMatrices policy_matrices(const TabularMdp& mdp, const DeterministicPolicy& pi) {
    if (static_cast<int>(pi.action_of.size()) != mdp.num_states)
        throw std::invalid_argument("policy_matrices: dimension mismatch");
    const int S = mdp.num_states, A = mdp.num_actions, SA = S * A;
    PolicyMatrices out;
    out.state_action.assign(static_cast<size_t>(SA) * SA, 0.0);
    out.state.assign(static_cast<size_t>(S) * S, 0.0);
    for (int s = 0; s < S; ++s) {
        const int a_pi = pi.action_of[s];
        if (a_pi < 0 || a_pi >= A)
            throw std::invalid_argument("policy_matrices: invalid action index");
        for (int s2 = 0; s2 < S; ++s2)
            out.state[static_cast<size_t>(s) * S + s2] = mdp.p(s, a_pi, s2);
        for (int a = 0; a < A; ++a) {
            const size_t base = static_cast<size_t>(mdp.pair_index(s, a)) * SA;
            for (int s2 = 0; s2 < S; ++s2)
                out.state_action[base + mdp.pair_index(s2, pi.action_of[s2])] = mdp.p(s, a, s2);
        }
    }
    return out;
}

namespace detail {

// Rounding can push a true zero a hair negative; clamp tiny values,
// report anything larger as a genuine defect.
inline double clamp_variance(double v) {
    if (v >= 0.0) return v;
    if (v >= -1e-12) return 0.0;
    throw std::logic_error("var_p: negative variance " + std::to_string(v));
}

inline double row_variance(std::span<const double> row, const VTable& v) {
    double m1 = 0.0, m2 = 0.0;
    for (size_t s2 = 0; s2 < row.size(); ++s2) {
        m1 += row[s2] * v[s2];
        m2 += row[s2] * v[s2] * v[s2];
    }
    return clamp_variance(m2 - m1 * m1);
}

} // namespace detail

/// Per-(s,a) variance of v(s') under P(.|s,a).
inline std::vector<double> var_p(const TabularMdp& mdp, const VTable& v) {
    if (static_cast<int>(v.size()) != mdp.num_states)
        throw std::invalid_argument("var_p: dimension mismatch");
    std::vector<double> out(mdp.num_pairs());
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a)
            out[mdp.pair_index(s, a)] = detail::row_variance(mdp.row(s, a), v);
    return out;
}

inline std::vector<double> var_p(const TabularMrp& mrp, const VTable& v) {
    if (static_cast<int>(v.size()) != mrp.num_states)
        throw std::invalid_argument("var_p: dimension mismatch");
    std::vector<double> out(mrp.num_states);
    for (int s = 0; s < mrp.num_states; ++s) out[s] = detail::row_variance(mrp.row(s), v);
    return out;
}

} // namespace tabrl
