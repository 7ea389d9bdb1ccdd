#pragma once

// Exact ground-truth solvers: fixed-point iteration for Q*, direct linear
// solve for policy values, and backward induction for finite horizons.
// These back every statistical experiment, so their default tolerances sit
// orders of magnitude below any learner's noise floor.

#include <stdexcept>
#include <vector>

#include "tabrl/bellman.hpp"
#include "tabrl/errors.hpp"
#include "tabrl/linalg.hpp"
#include "tabrl/mdp.hpp"

namespace tabrl {

struct ValueIterationResult {
    QTable q_star;
    VTable v_star;
    long long iterations = 0;
    double residual = 0.0;
};

/// Iterates the optimality operator until the sup-norm residual drops to
/// `tol`; the returned table is then within tol/(1-gamma) of the fixed point.
inline ValueIterationResult value_iteration(const TabularMdp& mdp, double tol = 1e-10,
                                            long long max_iters = 1000000) {
    if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");
    QTable q(mdp.num_states, mdp.num_actions, 0.0);
    double residual = 0.0;
    for (long long it = 1; it <= max_iters; ++it) {
        QTable next = bellman_optimality(mdp, q);
        residual = 0.0;
        for (size_t i = 0; i < q.data.size(); ++i)
            residual = std::max(residual, std::abs(next.data[i] - q.data[i]));
        q = std::move(next);
        if (residual <= tol)
            return {q, state_values(q, mdp), it, residual};
    }
    throw ConvergenceError("value_iteration: no convergence after " +
                               std::to_string(max_iters) + " iterations",
                           residual);
}

/// Policy value by direct solve of (I - gamma P_pi) V = r_pi.
inline VTable exact_policy_value(const TabularMdp& mdp, const DeterministicPolicy& pi) {
    const int S = mdp.num_states;
    const PolicyMatrices pm = policy_matrices(mdp, pi);
    std::vector<double> a(static_cast<size_t>(S) * S);
    std::vector<double> b(S);
    for (int s = 0; s < S; ++s) {
        b[s] = mdp.r(s, pi.action_of[s]);
        for (int s2 = 0; s2 < S; ++s2)
            a[static_cast<size_t>(s) * S + s2] =
                (s == s2 ? 1.0 : 0.0) - mdp.discount * pm.state[static_cast<size_t>(s) * S + s2];
    }
    VTable v = lu_solve(a, b);
    double res = 0.0;
    for (int s = 0; s < S; ++s) {
        double lhs = v[s];
        for (int s2 = 0; s2 < S; ++s2)
            lhs -= mdp.discount * pm.state[static_cast<size_t>(s) * S + s2] * v[s2];
        res = std::max(res, std::abs(lhs - b[s]));
    }
    if (res > 1e-9)
        throw ConvergenceError("exact_policy_value: linear solve residual too large", res);
    return v;
}

inline VTable exact_mrp_value(const TabularMrp& mrp) {
    DeterministicPolicy pi;
    pi.action_of.assign(mrp.num_states, 0);
    return exact_policy_value(mdp_from_mrp(mrp), pi);
}

/// Optimal per-step tables Q_h for h = 1..H (index h-1 in the result);
/// terminal step has Q_H = r_H, and values are undiscounted.
inline std::vector<QTable> backward_induction(const FiniteHorizonMdp& m) {
    auto violations = validate(m);
    if (!violations.empty())
        throw std::invalid_argument("backward_induction: invalid instance: " +
                                    violations.front().constraint);
    const int S = m.num_states, A = m.num_actions, H = m.horizon;
    std::vector<QTable> q(H, QTable(S, A));
    VTable next_v(S, 0.0); // value of step h+1; zero beyond the horizon
    for (int h = H; h >= 1; --h) {
        QTable& qh = q[h - 1];
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) {
                double acc = 0.0;
                for (int s2 = 0; s2 < S; ++s2) acc += m.p(h, s, a, s2) * next_v[s2];
                qh(s, a) = m.r(h, s, a) + acc;
            }
        for (int s = 0; s < S; ++s) {
            double best = qh(s, 0);
            for (int a = 1; a < A; ++a) best = std::max(best, qh(s, a));
            next_v[s] = best;
        }
    }
    return q;
}

} // namespace tabrl
