#pragma once

// Tabular MDP / MRP containers and their validity rules.
//
// Conventions used throughout the library:
//   - states and actions are 0-based indices;
//   - (s,a) tables are stored row-major as flat vectors, pair index s*A + a;
//   - an optional action mask marks forbidden (s,a) pairs: a forbidden pair
//     carries reward 0 and a deterministic self-loop, and is excluded from
//     maxima, sampling and error norms.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabrl {

using VTable = std::vector<double>;

/// Dense (state, action) table of reals.
struct QTable {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> data;

    QTable() = default;
    QTable(int s, int a, double fill = 0.0)
        : num_states(s), num_actions(a),
          data(static_cast<size_t>(s) * a, fill) {}

    double& operator()(int s, int a) { return data[static_cast<size_t>(s) * num_actions + a]; }
    double operator()(int s, int a) const { return data[static_cast<size_t>(s) * num_actions + a]; }

    bool same_shape(const QTable& o) const {
        return num_states == o.num_states && num_actions == o.num_actions;
    }
};

/// Deterministic policy: one action index per state.
struct DeterministicPolicy {
    std::vector<int> action_of;
};

/// Finite state/action MDP with rewards in [0,1] and discount in (0,1).
struct TabularMdp {
    int num_states = 0;
    int num_actions = 0;
    double discount = 0.0;
    std::vector<double> reward;       // (s,a)
    std::vector<double> transition;   // (s,a,s'), rows of length num_states
    std::vector<uint8_t> action_mask; // (s,a), 1 = allowed; empty = all allowed

    int pair_index(int s, int a) const { return s * num_actions + a; }
    int num_pairs() const { return num_states * num_actions; }

    bool allowed(int s, int a) const {
        return action_mask.empty() || action_mask[pair_index(s, a)] != 0;
    }
    bool has_mask() const { return !action_mask.empty(); }

    double r(int s, int a) const { return reward[pair_index(s, a)]; }
    double p(int s, int a, int s2) const {
        return transition[static_cast<size_t>(pair_index(s, a)) * num_states + s2];
    }
    std::span<const double> row(int s, int a) const {
        return {transition.data() + static_cast<size_t>(pair_index(s, a)) * num_states,
                static_cast<size_t>(num_states)};
    }
};

/// Markov reward process: the single-action specialization.
struct TabularMrp {
    int num_states = 0;
    double discount = 0.0;
    std::vector<double> reward;     // per state
    std::vector<double> transition; // (s,s')

    std::span<const double> row(int s) const {
        return {transition.data() + static_cast<size_t>(s) * num_states,
                static_cast<size_t>(num_states)};
    }
};

/// Finite-horizon MDP. transition_h/reward_h hold either one shared table
/// (time-invariant) or one table per step h = 1..H.
struct FiniteHorizonMdp {
    int num_states = 0;
    int num_actions = 0;
    int horizon = 0;
    std::vector<std::vector<double>> transition_h; // size 1 or horizon, each (s,a,s')
    std::vector<std::vector<double>> reward_h;     // size 1 or horizon, each (s,a)

    bool time_invariant_kernel() const { return transition_h.size() == 1; }

    const std::vector<double>& kernel(int h) const { // h in [1, horizon]
        return transition_h[transition_h.size() == 1 ? 0 : h - 1];
    }
    const std::vector<double>& rewards(int h) const {
        return reward_h[reward_h.size() == 1 ? 0 : h - 1];
    }
    double p(int h, int s, int a, int s2) const {
        return kernel(h)[(static_cast<size_t>(s) * num_actions + a) * num_states + s2];
    }
    double r(int h, int s, int a) const {
        return rewards(h)[static_cast<size_t>(s) * num_actions + a];
    }
};

/// One broken invariant, naming the offending index and constraint.
struct Violation {
    std::string constraint; // "row-sum", "negative-probability", "reward-range", ...
    int state = -1;
    int action = -1;
    std::string message;
};

namespace detail {

inline constexpr double kRowSumTol = 1e-9;

inline void check_row(std::span<const double> row, int s, int a,
                      std::vector<Violation>& out) {
    double sum = 0.0;
    for (size_t i = 0; i < row.size(); ++i) {
        if (row[i] < 0.0) {
            out.push_back({"negative-probability", s, a,
                           "transition[" + std::to_string(i) + "] = " + std::to_string(row[i])});
        }
        sum += row[i];
    }
    if (std::abs(sum - 1.0) > kRowSumTol || !std::isfinite(sum)) {
        out.push_back({"row-sum", s, a, "row sums to " + std::to_string(sum)});
    }
}

} // namespace detail

/// Collects every invariant violation; never throws.
inline std::vector<Violation> validate(const TabularMdp& mdp) {
    std::vector<Violation> out;
    if (mdp.num_states <= 0 || mdp.num_actions <= 0) {
        out.push_back({"dimensions", -1, -1, "num_states and num_actions must be positive"});
        return out;
    }
    const size_t pairs = static_cast<size_t>(mdp.num_pairs());
    if (mdp.reward.size() != pairs)
        out.push_back({"dimensions", -1, -1, "reward table has wrong size"});
    if (mdp.transition.size() != pairs * mdp.num_states)
        out.push_back({"dimensions", -1, -1, "transition table has wrong size"});
    if (!mdp.action_mask.empty() && mdp.action_mask.size() != pairs)
        out.push_back({"dimensions", -1, -1, "action mask has wrong size"});
    if (!out.empty()) return out;

    if (!(mdp.discount > 0.0 && mdp.discount < 1.0))
        out.push_back({"discount-range", -1, -1,
                       "discount = " + std::to_string(mdp.discount) + " not in (0,1)"});

    for (int s = 0; s < mdp.num_states; ++s) {
        bool any_allowed = false;
        for (int a = 0; a < mdp.num_actions; ++a) {
            detail::check_row(mdp.row(s, a), s, a, out);
            const double r = mdp.r(s, a);
            if (!(r >= 0.0 && r <= 1.0))
                out.push_back({"reward-range", s, a, "reward = " + std::to_string(r)});
            if (mdp.allowed(s, a)) any_allowed = true;
        }
        if (!any_allowed)
            out.push_back({"mask-empty-state", s, -1, "state has no allowed action"});
    }
    return out;
}

inline std::vector<Violation> validate(const TabularMrp& mrp) {
    std::vector<Violation> out;
    if (mrp.num_states <= 0) {
        out.push_back({"dimensions", -1, -1, "num_states must be positive"});
        return out;
    }
    if (mrp.reward.size() != static_cast<size_t>(mrp.num_states) ||
        mrp.transition.size() != static_cast<size_t>(mrp.num_states) * mrp.num_states) {
        out.push_back({"dimensions", -1, -1, "table sizes do not match num_states"});
        return out;
    }
    if (!(mrp.discount > 0.0 && mrp.discount < 1.0))
        out.push_back({"discount-range", -1, -1, "discount not in (0,1)"});
    for (int s = 0; s < mrp.num_states; ++s) {
        detail::check_row(mrp.row(s), s, -1, out);
        if (!(mrp.reward[s] >= 0.0 && mrp.reward[s] <= 1.0))
            out.push_back({"reward-range", s, -1, "reward = " + std::to_string(mrp.reward[s])});
    }
    return out;
}

inline std::vector<Violation> validate(const FiniteHorizonMdp& m) {
    std::vector<Violation> out;
    if (m.num_states <= 0 || m.num_actions <= 0 || m.horizon < 1) {
        out.push_back({"dimensions", -1, -1, "require positive sizes and horizon >= 1"});
        return out;
    }
    const size_t pairs = static_cast<size_t>(m.num_states) * m.num_actions;
    auto sized = [&](size_t n, size_t want) { return n == 1 || n == want; };
    if (!sized(m.transition_h.size(), static_cast<size_t>(m.horizon)) ||
        !sized(m.reward_h.size(), static_cast<size_t>(m.horizon))) {
        out.push_back({"dimensions", -1, -1, "per-step tables must have size 1 or horizon"});
        return out;
    }
    for (const auto& k : m.transition_h)
        if (k.size() != pairs * m.num_states) {
            out.push_back({"dimensions", -1, -1, "kernel has wrong size"});
            return out;
        }
    for (const auto& r : m.reward_h)
        if (r.size() != pairs) {
            out.push_back({"dimensions", -1, -1, "reward table has wrong size"});
            return out;
        }
    for (int h = 1; h <= m.horizon; ++h) {
        if (h > 1 && m.time_invariant_kernel() && m.reward_h.size() == 1) break;
        for (int s = 0; s < m.num_states; ++s)
            for (int a = 0; a < m.num_actions; ++a) {
                std::span<const double> row{
                    m.kernel(h).data() + (static_cast<size_t>(s) * m.num_actions + a) * m.num_states,
                    static_cast<size_t>(m.num_states)};
                detail::check_row(row, s, a, out);
                const double r = m.r(h, s, a);
                if (!(r >= 0.0 && r <= 1.0))
                    out.push_back({"reward-range", s, a,
                                   "reward = " + std::to_string(r) + " at step " + std::to_string(h)});
            }
    }
    return out;
}

inline void require_valid(const TabularMdp& mdp) {
    auto v = validate(mdp);
    if (!v.empty())
        throw std::invalid_argument("invalid MDP: " + v.front().constraint + " (" +
                                    v.front().message + ")");
}

/// Views a single-action slice of an MDP under a fixed policy as an MRP.
inline TabularMrp mrp_under_policy(const TabularMdp& mdp, const DeterministicPolicy& pi) {
    if (static_cast<int>(pi.action_of.size()) != mdp.num_states)
        throw std::invalid_argument("policy size does not match num_states");
    TabularMrp out;
    out.num_states = mdp.num_states;
    out.discount = mdp.discount;
    out.reward.resize(mdp.num_states);
    out.transition.resize(static_cast<size_t>(mdp.num_states) * mdp.num_states);
    for (int s = 0; s < mdp.num_states; ++s) {
        const int a = pi.action_of[s];
        if (a < 0 || a >= mdp.num_actions || !mdp.allowed(s, a))
            throw std::invalid_argument("policy selects invalid action at state " + std::to_string(s));
        out.reward[s] = mdp.r(s, a);
        auto row = mdp.row(s, a);
        std::copy(row.begin(), row.end(),
                  out.transition.begin() + static_cast<size_t>(s) * mdp.num_states);
    }
    return out;
}

/// Lifts an MRP to a one-action MDP (shared machinery runs on MDPs).
inline TabularMdp mdp_from_mrp(const TabularMrp& mrp) {
    TabularMdp out;
    out.num_states = mrp.num_states;
    out.num_actions = 1;
    out.discount = mrp.discount;
    out.reward = mrp.reward;
    out.transition = mrp.transition;
    return out;
}

/// Sup-norm distance between Q tables, skipping forbidden pairs.
inline double sup_error(const QTable& q, const QTable& ref, const TabularMdp& mdp) {
    double worst = 0.0;
    for (int s = 0; s < q.num_states; ++s)
        for (int a = 0; a < q.num_actions; ++a) {
            if (!mdp.allowed(s, a)) continue;
            worst = std::max(worst, std::abs(q(s, a) - ref(s, a)));
        }
    return worst;
}

inline double sup_error(const VTable& v, const VTable& ref) {
    double worst = 0.0;
    for (size_t i = 0; i < v.size(); ++i) worst = std::max(worst, std::abs(v[i] - ref[i]));
    return worst;
}

} // namespace tabrl
