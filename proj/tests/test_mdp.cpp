#include <catch2/catch_amalgamated.hpp>

#include "tabrl/mdp.hpp"

using namespace tabrl;

namespace {

TabularMdp two_state_mdp() {
    TabularMdp m;
    m.num_states = 2;
    m.num_actions = 2;
    m.discount = 0.9;
    m.reward = {0.0, 0.5, 1.0, 0.25};
    m.transition = {
        1.0, 0.0, 0.5, 0.5, // state 0, actions 0/1
        0.2, 0.8, 0.0, 1.0, // state 1, actions 0/1
    };
    return m;
}

} // namespace

TEST_CASE("well-formed instance validates cleanly", "[mdp]") {
    CHECK(validate(two_state_mdp()).empty());
}

TEST_CASE("row-sum violation names the offending pair", "[mdp]") {
    TabularMdp m = two_state_mdp();
    m.transition[0] = 0.9; // row (0,0) now sums to 0.9
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].constraint == "row-sum");
    CHECK(v[0].state == 0);
    CHECK(v[0].action == 0);
}

TEST_CASE("reward outside [0,1] is reported", "[mdp]") {
    TabularMdp m = two_state_mdp();
    m.reward[0] = 1.5;
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].constraint == "reward-range");
    CHECK(v[0].state == 0);
    CHECK(v[0].action == 0);
}

TEST_CASE("negative probability and bad discount are both caught", "[mdp]") {
    TabularMdp m = two_state_mdp();
    m.transition[0] = -0.1;
    m.transition[1] = 1.1;
    m.discount = 1.0;
    const auto v = validate(m);
    bool saw_negative = false, saw_discount = false;
    for (const auto& violation : v) {
        if (violation.constraint == "negative-probability") saw_negative = true;
        if (violation.constraint == "discount-range") saw_discount = true;
    }
    CHECK(saw_negative);
    CHECK(saw_discount);
}

TEST_CASE("a state with every action masked is invalid", "[mdp]") {
    TabularMdp m = two_state_mdp();
    m.action_mask = {0, 0, 1, 1};
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].constraint == "mask-empty-state");
    CHECK(v[0].state == 0);
}

TEST_CASE("mrp_under_policy picks the chosen rows", "[mdp]") {
    const TabularMdp m = two_state_mdp();
    DeterministicPolicy pi;
    pi.action_of = {1, 0};
    const TabularMrp mrp = mrp_under_policy(m, pi);
    CHECK(mrp.reward[0] == 0.5);
    CHECK(mrp.reward[1] == 1.0);
    CHECK(mrp.transition[0] == 0.5);
    CHECK(mrp.transition[2] == 0.2);
    CHECK(validate(mrp).empty());
}

TEST_CASE("sup_error skips forbidden pairs", "[mdp]") {
    TabularMdp m = two_state_mdp();
    m.action_mask = {1, 0, 1, 1};
    QTable a(2, 2, 0.0), b(2, 2, 0.0);
    a(0, 1) = 100.0; // masked, must not count
    a(1, 1) = 0.25;
    CHECK(sup_error(a, b, m) == 0.25);
}

TEST_CASE("finite-horizon validation accepts shared tables", "[mdp]") {
    FiniteHorizonMdp f;
    f.num_states = 2;
    f.num_actions = 1;
    f.horizon = 3;
    f.transition_h = {{0.0, 1.0, 1.0, 0.0}};
    f.reward_h = {{1.0, 0.0}};
    CHECK(validate(f).empty());
    f.reward_h[0][0] = -0.5;
    CHECK(validate(f).size() == 1);
}
