#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "tabrl/experiments.hpp"
#include "tabrl/hard_mdp.hpp"
#include "tabrl/solve.hpp"

using namespace tabrl;

TEST_CASE("zero rewards solve to the zero table", "[solve]") {
    TabularMdp m = random_mdp(3, 2, 41, 0.9);
    std::fill(m.reward.begin(), m.reward.end(), 0.0);
    const auto sol = value_iteration(m);
    for (double v : sol.q_star.data) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("value iteration recovers the hard instance's closed forms", "[solve]") {
    const auto sol = value_iteration(build_hard_mdp(0.8));
    REQUIRE(sol.v_star.size() == 4);
    CHECK(std::abs(sol.v_star[0] - 0.0) < 1e-7);
    CHECK(std::abs(sol.v_star[1] - 3.75) < 1e-7);
    CHECK(std::abs(sol.v_star[2] - 3.75) < 1e-7);
    CHECK(std::abs(sol.v_star[3] - 5.0) < 1e-7);
}

TEST_CASE("value iteration matches exhaustive policy enumeration", "[solve]") {
    const TabularMdp m = random_mdp(4, 3, 4243, 0.9);
    const auto sol = value_iteration(m);
    const QTable brute = oracles::enumerate_optimal_q(m);
    for (size_t i = 0; i < brute.data.size(); ++i)
        CHECK(std::abs(sol.q_star.data[i] - brute.data[i]) < 1e-7);
}

TEST_CASE("returned table is a fixed point to within 10x tolerance", "[solve]") {
    const TabularMdp m = random_mdp(5, 2, 77, 0.95);
    const double tol = 1e-10;
    const auto sol = value_iteration(m, tol);
    const QTable mapped = bellman_optimality(m, sol.q_star);
    double res = 0.0;
    for (size_t i = 0; i < mapped.data.size(); ++i)
        res = std::max(res, std::abs(mapped.data[i] - sol.q_star.data[i]));
    CHECK(res <= 10.0 * tol);
}

TEST_CASE("iteration cap raises an error carrying the residual", "[solve]") {
    const TabularMdp m = random_mdp(3, 2, 99, 0.99);
    try {
        value_iteration(m, 1e-12, 3);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual > 1e-12);
    }
}

TEST_CASE("policy value of an absorbing zero-reward state is zero", "[solve]") {
    TabularMdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.discount = 0.9;
    m.reward = {0.0};
    m.transition = {1.0};
    DeterministicPolicy pi;
    pi.action_of = {0};
    CHECK(exact_policy_value(m, pi)[0] == 0.0);
}

TEST_CASE("hard instance state 3 evaluates to 1/(1-gamma)", "[solve]") {
    const TabularMdp m = build_hard_mdp(0.9);
    DeterministicPolicy pi;
    pi.action_of = {0, 0, 0, 0};
    const VTable v = exact_policy_value(m, pi);
    CHECK(std::abs(v[3] - 10.0) < 1e-9);
}

TEST_CASE("policy evaluation matches the truncated power series", "[solve]") {
    const TabularMrp mrp = random_mrp(5, 321, 0.9);
    const VTable direct = exact_mrp_value(mrp);
    const VTable series = oracles::power_series_value(mrp, 2000);
    for (int s = 0; s < 5; ++s) CHECK(std::abs(direct[s] - series[s]) < 1e-6);
}

TEST_CASE("value iteration and policy evaluation agree on single-action instances", "[solve]") {
    const TabularMdp m = random_mdp(4, 1, 55, 0.9);
    const double tol = 1e-10;
    const auto sol = value_iteration(m, tol);
    DeterministicPolicy pi;
    pi.action_of = {0, 0, 0, 0};
    const VTable exact = exact_policy_value(m, pi);
    for (int s = 0; s < 4; ++s)
        CHECK(std::abs(sol.v_star[s] - exact[s]) <= tol / (1.0 - m.discount));
}

TEST_CASE("terminal-step tables equal the terminal rewards", "[solve]") {
    const FiniteHorizonMdp f = random_fmdp(3, 2, 1, 61);
    const auto q = backward_induction(f);
    REQUIRE(q.size() == 1);
    for (int s = 0; s < 3; ++s)
        for (int a = 0; a < 2; ++a) CHECK(q[0](s, a) == f.r(1, s, a));
}

TEST_CASE("unit rewards on a self-loop chain telescope to H-h+1", "[solve]") {
    FiniteHorizonMdp f;
    f.num_states = 2;
    f.num_actions = 1;
    f.horizon = 3;
    f.transition_h = {{1.0, 0.0, 0.0, 1.0}};
    f.reward_h = {{1.0, 1.0}};
    const auto q = backward_induction(f);
    for (int h = 1; h <= 3; ++h)
        for (int s = 0; s < 2; ++s) CHECK(q[h - 1](s, 0) == static_cast<double>(3 - h + 1));
}

TEST_CASE("backward induction matches exhaustive policy-tree enumeration", "[solve]") {
    const FiniteHorizonMdp f = random_fmdp(2, 2, 4, 4242);
    const auto fast = backward_induction(f);
    const auto brute = oracles::enumerate_finite_q(f);
    for (int h = 0; h < 4; ++h)
        for (size_t i = 0; i < fast[h].data.size(); ++i)
            CHECK(fast[h].data[i] == brute[h].data[i]);
    // range: Q_h in [0, H-h+1]
    for (int h = 1; h <= 4; ++h)
        for (double v : fast[h - 1].data) {
            CHECK(v >= 0.0);
            CHECK(v <= static_cast<double>(4 - h + 1));
        }
}

TEST_CASE("lu_solve rejects singular systems", "[solve]") {
    CHECK_THROWS_AS(lu_solve({1.0, 2.0, 2.0, 4.0}, {1.0, 2.0}), std::runtime_error);
}
