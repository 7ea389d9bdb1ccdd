#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "tabrl/chain.hpp"
#include "tabrl/experiments.hpp"
#include "tabrl/linalg.hpp"

using namespace tabrl;

TEST_CASE("the degenerate chain's kernel is the 1x1 identity", "[chain]") {
    TabularMdp m;
    m.num_states = 1;
    m.num_actions = 1;
    m.discount = 0.9;
    m.reward = {0.5};
    m.transition = {1.0};
    const auto kernel = behavior_chain(m, uniform_behavior(m));
    REQUIRE(kernel.size() == 1);
    CHECK(kernel[0] == 1.0);
}

TEST_CASE("behavior-chain rows are stochastic and match the product formula", "[chain]") {
    const TabularMdp m = random_mdp(2, 2, 1201, 0.9);
    const BehaviorPolicy b = uniform_behavior(m);
    const auto kernel = behavior_chain(m, b);
    const int SA = 4;
    for (int row = 0; row < SA; ++row) {
        double sum = 0.0;
        for (int col = 0; col < SA; ++col) sum += kernel[static_cast<size_t>(row) * SA + col];
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 2; ++a)
            for (int s2 = 0; s2 < 2; ++s2)
                for (int a2 = 0; a2 < 2; ++a2)
                    CHECK(kernel[static_cast<size_t>(m.pair_index(s, a)) * SA +
                                 m.pair_index(s2, a2)] ==
                          m.p(s, a, s2) * b[static_cast<size_t>(m.pair_index(s2, a2))]);
}

TEST_CASE("the symmetric two-state chain is uniform at stationarity", "[chain]") {
    const std::vector<double> kernel{0.5, 0.5, 0.5, 0.5};
    const auto st = stationary_distribution(kernel, 2);
    REQUIRE(st.ergodic);
    CHECK(std::abs(st.distribution[0] - 0.5) < 1e-10);
    CHECK(std::abs(st.distribution[1] - 0.5) < 1e-10);
}

TEST_CASE("the identity kernel is flagged non-ergodic", "[chain]") {
    const std::vector<double> kernel{1.0, 0.0, 0.0, 1.0};
    const auto st = stationary_distribution(kernel, 2);
    CHECK_FALSE(st.ergodic);
}

TEST_CASE("power iteration matches the left-eigenvector linear solve", "[chain]") {
    const TabularMdp m = random_mdp(3, 2, 1301, 0.9);
    const auto kernel = behavior_chain(m, uniform_behavior(m));
    const int n = 6;
    const auto st = stationary_distribution(kernel, n);
    REQUIRE(st.ergodic);

    // solve mu (K - I) = 0 with sum(mu) = 1 by replacing one equation
    std::vector<double> a(static_cast<size_t>(n) * n);
    std::vector<double> rhs(n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            a[static_cast<size_t>(r) * n + c] =
                kernel[static_cast<size_t>(c) * n + r] - (r == c ? 1.0 : 0.0);
    for (int c = 0; c < n; ++c) a[static_cast<size_t>(n - 1) * n + c] = 1.0;
    rhs[n - 1] = 1.0;
    const auto mu = lu_solve(a, rhs);
    for (int i = 0; i < n; ++i) CHECK(std::abs(st.distribution[i] - mu[i]) < 1e-8);
}

TEST_CASE("the stationary distribution is invariant under one more step", "[chain]") {
    const TabularMdp m = random_mdp(3, 2, 1401, 0.9);
    const auto kernel = behavior_chain(m, uniform_behavior(m));
    const auto st = stationary_distribution(kernel, 6, 1e-12);
    REQUIRE(st.ergodic);
    const auto moved = vec_mat(st.distribution, kernel, 6, 6);
    CHECK(tv_distance(st.distribution, moved) < 1e-10);
}

TEST_CASE("a kernel whose rows equal the target mixes in one step", "[chain]") {
    const std::vector<double> mu{0.3, 0.7};
    const std::vector<double> kernel{0.3, 0.7, 0.3, 0.7};
    CHECK(mixing_time(kernel, mu) == 1);
}

TEST_CASE("the identity kernel never mixes and errors at the cap", "[chain]") {
    const std::vector<double> kernel{1.0, 0.0, 0.0, 1.0};
    const std::vector<double> mu{0.5, 0.5};
    try {
        mixing_time(kernel, mu, 1000);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual >= 0.25);
    }
}

TEST_CASE("mixing time matches explicit matrix powers", "[chain]") {
    const std::vector<double> kernel{0.9, 0.1, 0.1, 0.9};
    const std::vector<double> mu{0.5, 0.5};
    const long long got = mixing_time(kernel, mu);

    long long expected = -1;
    for (long long t = 1; t < 100 && expected < 0; ++t) {
        const auto power = oracles::matrix_power(kernel, 2, t);
        double worst = 0.0;
        for (int r = 0; r < 2; ++r) {
            double tv = 0.0;
            for (int c = 0; c < 2; ++c)
                tv += std::abs(power[static_cast<size_t>(r) * 2 + c] - mu[static_cast<size_t>(c)]);
            worst = std::max(worst, 0.5 * tv);
        }
        if (worst <= 0.25) expected = t;
    }
    CHECK(got == expected);

    // threshold property: above 1/4 one step earlier, at most 1/4 at t_mix
    const auto before = oracles::matrix_power(kernel, 2, got - 1);
    double tv_before = 0.0;
    for (int c = 0; c < 2; ++c) tv_before += std::abs(before[c] - mu[static_cast<size_t>(c)]);
    CHECK(0.5 * tv_before > 0.25);
}

TEST_CASE("visit counts accumulate and stay monotone", "[chain]") {
    std::vector<std::pair<int, int>> traj;
    for (int k = 0; k < 50; ++k) traj.emplace_back(k % 3, k % 2);
    CHECK(visit_counts(traj, 0, 3, 2) == std::vector<long long>(6, 0));

    const auto at20 = visit_counts(traj, 20, 3, 2);
    const auto at50 = visit_counts(traj, 50, 3, 2);
    long long sum20 = 0, sum50 = 0;
    for (size_t i = 0; i < at20.size(); ++i) {
        CHECK(at50[i] >= at20[i]);
        sum20 += at20[i];
        sum50 += at50[i];
    }
    CHECK(sum20 == 20);
    CHECK(sum50 == 50);

    std::vector<std::pair<int, int>> constant(10, {1, 1});
    CHECK(visit_counts(constant, 10, 2, 2)[3] == 10);
    CHECK_THROWS_AS(visit_counts(constant, 11, 2, 2), std::invalid_argument);
}

TEST_CASE("long-run visit frequencies approach the stationary law", "[chain]") {
    const TabularMdp m = random_mdp(3, 2, 1501, 0.9);
    const BehaviorPolicy b = uniform_behavior(m);
    const auto diag = diagnose_chain(m, b);
    REQUIRE(diag.ergodic);

    const RowSampler actions(b, 2);
    const RowSampler next(m.transition, 3);
    RngStream rng(31337, 0);
    std::vector<long long> counts(6, 0);
    int state = 0;
    const long long T = 1000000;
    for (long long t = 0; t < T; ++t) {
        const int a = actions.draw(state, rng.next_double());
        ++counts[static_cast<size_t>(m.pair_index(state, a))];
        state = next.draw(m.pair_index(state, a), rng.next_double());
    }
    for (int i = 0; i < 6; ++i)
        CHECK(std::abs(static_cast<double>(counts[static_cast<size_t>(i)]) / T -
                       diag.stationary[static_cast<size_t>(i)]) < 0.02);
}

TEST_CASE("deviation evaluator handles the degenerate and collapsed cases", "[chain]") {
    CHECK(freedman_bound(0.0, 0.0, 0.0, 1, 0.05) == 0.0);
    const double sigma_sq = 2.5, r = 0.8, delta = 0.1;
    const double expected =
        std::sqrt(8.0 * sigma_sq * std::log(2.0 / delta)) + (4.0 / 3.0) * r * std::log(2.0 / delta);
    CHECK(freedman_bound(sigma_sq, sigma_sq, r, 1, delta) ==
          Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("deviation evaluator is monotone in each argument", "[chain]") {
    const double base = freedman_bound(1.0, 2.0, 0.5, 2, 0.1);
    CHECK(freedman_bound(1.5, 2.0, 0.5, 2, 0.1) >= base);
    CHECK(freedman_bound(1.0, 3.0, 0.5, 2, 0.1) >= base);
    CHECK(freedman_bound(1.0, 2.0, 0.9, 2, 0.1) >= base);
    CHECK(freedman_bound(1.0, 2.0, 0.5, 3, 0.1) >= base);
    CHECK(freedman_bound(1.0, 2.0, 0.5, 2, 0.05) >= base);
}

TEST_CASE("deviation evaluator rejects bad arguments", "[chain]") {
    CHECK_THROWS_AS(freedman_bound(3.0, 2.0, 0.5, 2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(freedman_bound(1.0, 2.0, -0.5, 2, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(freedman_bound(1.0, 2.0, 0.5, 0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(freedman_bound(1.0, 2.0, 0.5, 2, 1.0), std::invalid_argument);
}

TEST_CASE("simulated martingales respect the deviation level", "[chain]") {
    const int n = 1000, trials = 2000;
    const double r = 1.0, delta = 0.05;
    int violations = 0;
    for (int trial = 0; trial < trials; ++trial) {
        const auto path = oracles::simulate_martingale(n, r, 777, static_cast<uint64_t>(trial));
        const double bound = freedman_bound(path.w_n, path.w_n, r, 1, delta);
        if (std::abs(path.y_n) > bound) ++violations;
    }
    const double limit = delta + 3.0 * std::sqrt(delta * (1.0 - delta) / trials);
    CHECK(static_cast<double>(violations) / trials <= limit);
}
