#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "tabrl/bellman.hpp"
#include "tabrl/experiments.hpp"
#include "tabrl/rng.hpp"
#include "tabrl/sampling.hpp"

using namespace tabrl;

TEST_CASE("operator maps zero rewards and zero table to zero", "[bellman]") {
    TabularMdp m = random_mdp(3, 2, 11, 0.9);
    std::fill(m.reward.begin(), m.reward.end(), 0.0);
    const QTable out = bellman_optimality(m, QTable(3, 2, 0.0));
    for (double v : out.data) CHECK(v == 0.0);
}

TEST_CASE("operator agrees with direct summation and contracts", "[bellman]") {
    const TabularMdp m = random_mdp(3, 2, 5, 0.85);
    RngStream rng(99, 0);
    for (int trial = 0; trial < 20; ++trial) {
        QTable q1(3, 2), q2(3, 2);
        for (auto& v : q1.data) v = 10.0 * rng.next_double();
        for (auto& v : q2.data) v = 10.0 * rng.next_double();
        const QTable t1 = bellman_optimality(m, q1);
        const QTable t2 = bellman_optimality(m, q2);
        const QTable d1 = oracles::direct_bellman(m, q1);
        for (size_t i = 0; i < t1.data.size(); ++i)
            CHECK(std::abs(t1.data[i] - d1.data[i]) < 1e-12);

        double dq = 0.0, dt = 0.0;
        for (size_t i = 0; i < q1.data.size(); ++i) {
            dq = std::max(dq, std::abs(q1.data[i] - q2.data[i]));
            dt = std::max(dt, std::abs(t1.data[i] - t2.data[i]));
        }
        CHECK(dt <= m.discount * dq + 1e-12);
    }
}

TEST_CASE("greedy policy breaks ties toward the smallest index", "[bellman]") {
    QTable q(3, 3, 0.0);
    q(0, 0) = 1.0;
    q(0, 1) = 3.0; // unique argmax
    q(1, 0) = 2.0;
    q(1, 1) = 2.0; // two-way tie
    q(2, 0) = 5.0;
    q(2, 1) = 5.0;
    q(2, 2) = 5.0; // full tie
    const DeterministicPolicy pi = greedy_policy(q);
    CHECK(pi.action_of[0] == 1);
    CHECK(pi.action_of[1] == 0);
    CHECK(pi.action_of[2] == 0);
}

TEST_CASE("greedy policy rejects NaN and honors masks", "[bellman]") {
    QTable q(1, 2, 0.0);
    q(0, 0) = std::nan("");
    CHECK_THROWS_AS(greedy_policy(q), std::invalid_argument);

    TabularMdp m = random_mdp(1, 2, 3, 0.9);
    m.action_mask = {0, 1};
    QTable q2(1, 2);
    q2(0, 0) = 10.0; // masked, may not win
    q2(0, 1) = 1.0;
    CHECK(greedy_policy(q2, m).action_of[0] == 1);
}

TEST_CASE("greedy policy is invariant to per-state shifts and positive scaling", "[bellman]") {
    const TabularMdp m = random_mdp(4, 3, 17, 0.9);
    RngStream rng(4, 0);
    QTable q(4, 3);
    for (auto& v : q.data) v = rng.next_double();
    const auto base = greedy_policy(q).action_of;

    QTable shifted = q, scaled = q;
    for (int s = 0; s < 4; ++s)
        for (int a = 0; a < 3; ++a) {
            shifted(s, a) += 2.5;
            scaled(s, a) *= 7.0;
        }
    CHECK(greedy_policy(shifted).action_of == base);
    CHECK(greedy_policy(scaled).action_of == base);
}

TEST_CASE("policy matrices of the degenerate chain are identities", "[bellman]") {
    TabularMdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.discount = 0.5;
    m.reward = {1.0};
    m.transition = {1.0};
    DeterministicPolicy pi;
    pi.action_of = {0};
    const PolicyMatrices pm = policy_matrices(m, pi);
    REQUIRE(pm.state_action.size() == 1);
    REQUIRE(pm.state.size() == 1);
    CHECK(pm.state_action[0] == 1.0);
    CHECK(pm.state[0] == 1.0);
}

TEST_CASE("policy matrices are row-stochastic and match direct lookup", "[bellman]") {
    const TabularMdp m = random_mdp(2, 2, 23, 0.9);
    DeterministicPolicy pi;
    pi.action_of = {1, 0};
    const PolicyMatrices pm = policy_matrices(m, pi);

    const int SA = 4;
    for (int row = 0; row < SA; ++row) {
        double sum = 0.0;
        for (int col = 0; col < SA; ++col) sum += pm.state_action[row * SA + col];
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    for (int s = 0; s < 2; ++s) {
        double sum = 0.0;
        for (int s2 = 0; s2 < 2; ++s2) {
            sum += pm.state[s * 2 + s2];
            CHECK(pm.state[s * 2 + s2] == m.p(s, pi.action_of[s], s2));
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    // state-action kernel: mass of (s,a) lands on (s', pi(s')) only
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            for (int s2 = 0; s2 < 2; ++s2)
                for (int a2 = 0; a2 < 2; ++a2) {
                    const double got = pm.state_action[m.pair_index(s, a) * SA + m.pair_index(s2, a2)];
                    const double want = a2 == pi.action_of[s2] ? m.p(s, a, s2) : 0.0;
                    CHECK(got == want);
                }
}

TEST_CASE("next-state variance handles the forced cases", "[bellman]") {
    TabularMdp m;
    m.num_states = 2;
    m.num_actions = 1;
    m.discount = 0.9;
    m.reward = {0.0, 0.0};
    m.transition = {0.5, 0.5, 1.0, 0.0};

    SECTION("constant value has zero variance") {
        const auto var = var_p(m, VTable{3.0, 3.0});
        CHECK(var[0] == 0.0);
        CHECK(var[1] == 0.0);
    }
    SECTION("a point-mass row has zero variance") {
        const auto var = var_p(m, VTable{0.0, 2.0});
        CHECK(var[1] == 0.0);
    }
    SECTION("two-outcome row matches p(1-p)(a-b)^2 and a Monte Carlo estimate") {
        const auto var = var_p(m, VTable{0.0, 2.0});
        CHECK(std::abs(var[0] - 1.0) < 1e-12); // 0.5*4 - 1
        RngStream rng(8, 0);
        const RowSampler sampler(m.transition, 2);
        const int n = 200000;
        double sum = 0.0, sumsq = 0.0;
        const VTable v{0.0, 2.0};
        for (int i = 0; i < n; ++i) {
            const double x = v[static_cast<size_t>(sampler.draw(0, rng.next_double()))];
            sum += x;
            sumsq += x * x;
        }
        const double mc = sumsq / n - (sum / n) * (sum / n);
        CHECK(std::abs(mc - 1.0) < 0.02);
    }
}

TEST_CASE("variance is shift-invariant and nonnegative", "[bellman]") {
    const TabularMdp m = random_mdp(4, 2, 31, 0.9);
    RngStream rng(5, 0);
    VTable v(4);
    for (auto& x : v) x = 10.0 * rng.next_double();
    const auto base = var_p(m, v);
    VTable shifted = v;
    for (auto& x : shifted) x += 17.5;
    const auto moved = var_p(m, shifted);
    for (size_t i = 0; i < base.size(); ++i) {
        CHECK(base[i] >= 0.0);
        CHECK(std::abs(base[i] - moved[i]) < 1e-9);
    }
}

TEST_CASE("max_row_l1 reports the largest row-wise l1 norm", "[bellman]") {
    const std::vector<double> m{1.0, -2.0, 0.5, 0.25};
    CHECK(max_row_l1(m, 2, 2) == 3.0);
}
