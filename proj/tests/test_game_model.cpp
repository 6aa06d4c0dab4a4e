#include <catch2/catch.hpp>

#include "helpers.hpp"
#include "sfpsg/sfpsg.hpp"

using namespace sfpsg;
using sfpsg::testing::mixed_benchmark_game;

TEST_CASE("turn-based validator accepts games built per the definition") {
    const auto g = mixed_benchmark_game();
    const auto rep = validate_turn_based_controller(g);
    REQUIRE(rep.ok);
    REQUIRE(rep.witness_sets[0] == std::vector<int>{0});
    REQUIRE(rep.witness_sets[1] == std::vector<int>{1});
    REQUIRE(rep.chosen == std::vector<int>{0, 1});
}

TEST_CASE("single-controller game yields a constant controller map") {
    GeneratorParams p;
    p.players = 2;
    p.states = 3;
    p.actions = {2, 3};
    p.structures = {StageStructure::Tag::IdenticalInterest};
    p.controller_policy = GeneratorParams::ControllerPolicy::List;
    p.controller_list = {1, 1, 1};
    const auto g = generate_game(p, 7);
    const auto rep = validate_turn_based_controller(g);
    REQUIRE(rep.ok);
    for (int s = 0; s < g.num_states; ++s)
        REQUIRE(std::find(rep.witness_sets[s].begin(), rep.witness_sets[s].end(), 1) !=
                rep.witness_sets[s].end());
}

TEST_CASE("transitions depending on two players produce a violation with witnesses") {
    auto g = mixed_benchmark_game();
    // make state 1's row depend on both actions
    g.transition[1] = {0.8, 0.2, 0.2, 0.8, 0.3, 0.7, 0.6, 0.4};
    const auto rep = validate_turn_based_controller(g);
    REQUIRE_FALSE(rep.ok);
    REQUIRE(rep.violation.has_value());
    REQUIRE(rep.violation->state == 1);
    const auto& a = rep.violation->profile_a;
    const auto& b = rep.violation->profile_b;
    REQUIRE(a[0] == b[0]);  // witnesses agree on player 0's action
    const auto space = g.space();
    bool rows_differ = false;
    for (int sp = 0; sp < g.num_states; ++sp)
        if (g.trans(1, space.index(a), sp) != g.trans(1, space.index(b), sp))
            rows_differ = true;
    REQUIRE(rows_differ);
}

TEST_CASE("transitions constant in every action give every player as witness") {
    auto g = mixed_benchmark_game();
    g.transition[0] = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    const auto rep = validate_turn_based_controller(g);
    REQUIRE(rep.ok);
    REQUIRE(rep.witness_sets[0] == std::vector<int>{0, 1});
    REQUIRE(rep.chosen[0] == 0);  // ties break to the lowest index

    // any declared controller from the witness set is accepted
    g.controllers[0] = 1;
    REQUIRE(validate_game(g).ok);
}

TEST_CASE("stage game classification") {
    const auto g = mixed_benchmark_game();
    REQUIRE(classify_stage_game(g, 0).tag == StageStructure::Tag::ZeroSum);
    REQUIRE(classify_stage_game(g, 1).tag == StageStructure::Tag::IdenticalInterest);

    SECTION("neither condition -> unstructured") {
        auto h = g;
        h.payoffs[0][0] = {1, 0, 0, 1};
        h.payoffs[1][0] = {1, 1, 0, 0};
        REQUIRE(classify_stage_game(h, 0).tag == StageStructure::Tag::Unstructured);
        REQUIRE_FALSE(validate_game(h).ok);
    }
    SECTION("all-zero payoffs classify identical-interest, not zero-sum") {
        auto h = g;
        h.payoffs[0][0] = {0, 0, 0, 0};
        h.payoffs[1][0] = {0, 0, 0, 0};
        REQUIRE(classify_stage_game(h, 0).tag == StageStructure::Tag::IdenticalInterest);
    }
    SECTION("invariant under permutation of action indices") {
        auto h = g;
        // swap player 1's action labels at state 0: profile (a0,a1) -> (a0,1-a1)
        for (int i = 0; i < 2; ++i) {
            h.payoffs[i][0][0] = g.payoffs[i][0][1];
            h.payoffs[i][0][1] = g.payoffs[i][0][0];
            h.payoffs[i][0][2] = g.payoffs[i][0][3];
            h.payoffs[i][0][3] = g.payoffs[i][0][2];
        }
        REQUIRE(classify_stage_game(h, 0).tag == classify_stage_game(g, 0).tag);
    }
}

TEST_CASE("connectivity checks") {
    SECTION("mutually reachable pair is connected") {
        REQUIRE(check_connectivity(mixed_benchmark_game()).ok);
    }
    SECTION("absorbing state disconnects") {
        auto g = mixed_benchmark_game();
        g.transition[1] = {0, 1, 0, 1, 0, 1, 0, 1};  // state 1 self-loop only
        const auto rep = check_connectivity(g);
        REQUIRE_FALSE(rep.ok);
        REQUIRE(rep.from == 1);
        REQUIRE(rep.to == 0);
    }
    SECTION("directed 3-cycle is strongly connected") {
        GeneratorParams p;
        p.players = 2;
        p.states = 3;
        p.actions = {1, 1};  // single action: transition graph is a pure chain
        p.structures = {StageStructure::Tag::IdenticalInterest};
        StochasticGame g;
        g.num_players = 2;
        g.num_states = 3;
        g.action_counts = {1, 1};
        g.discounts = {0.5, 0.5};
        g.controllers = {0, 0, 0};
        g.payoffs = {{{1}, {1}, {1}}, {{1}, {1}, {1}}};
        g.transition = {{0, 1, 0}, {0, 0, 1}, {1, 0, 0}};
        REQUIRE(check_connectivity(g).ok);
    }
    SECTION("single state with self-loop is connected") {
        REQUIRE(check_connectivity(sfpsg::testing::repeated_zero_sum_game()).ok);
    }
}

TEST_CASE("controller payoff decomposition") {
    const auto g = mixed_benchmark_game();

    SECTION("Q equal to the stage payoffs gives zero shift and residual") {
        const auto dec = decompose_controller_payoff(g, 0, 0, g.payoffs[0][0]);
        REQUIRE(dec.residual == 0.0);
        for (double gv : dec.shift) REQUIRE(gv == Approx(0.0).margin(1e-15));
    }
    SECTION("oracle Q-rows decompose within certificate tolerance") {
        const auto sol =
            backward_induction(g, 4, PerturbationSpec{PerturbationSpec::Kind::Entropy, 2.0});
        for (int k = 0; k < 3; ++k)
            for (int s = 0; s < 2; ++s)
                for (int i = 0; i < 2; ++i) {
                    const auto dec = decompose_controller_payoff(g, s, i, sol.stages[k][s].q[i]);
                    REQUIRE(dec.residual <= 1e-10);
                }
    }
    SECTION("noise depending on the opponents' actions shows up as residual") {
        auto q = g.payoffs[0][0];
        q[0] += 0.25;  // profile (0,0): perturbation varies with player 1's action
        const auto dec = decompose_controller_payoff(g, 0, 0, q);
        REQUIRE(dec.residual > 0.05);
    }
    SECTION("wrong shape is rejected") {
        std::vector<double> bad(3, 0.0);
        REQUIRE_THROWS_AS(decompose_controller_payoff(g, 0, 0, bad), ShapeError);
    }
}

TEST_CASE("generator produces valid mixed-structure games deterministically") {
    GeneratorParams p;
    p.players = 2;
    p.states = 2;
    p.actions = {2, 2};
    p.structures = {StageStructure::Tag::ZeroSum, StageStructure::Tag::IdenticalInterest};
    p.controller_policy = GeneratorParams::ControllerPolicy::List;
    p.controller_list = {0, 1};
    p.discounts = {0.9, 0.8};

    const auto g = generate_game(p, 123);
    REQUIRE(validate_game(g).ok);
    REQUIRE(classify_stage_game(g, 0).tag == StageStructure::Tag::ZeroSum);
    REQUIRE(classify_stage_game(g, 1).tag == StageStructure::Tag::IdenticalInterest);

    SECTION("same seed, same game") {
        const auto h = generate_game(p, 123);
        REQUIRE(g.payoffs == h.payoffs);
        REQUIRE(g.transition == h.transition);
    }
    SECTION("different seed, different game") {
        const auto h = generate_game(p, 124);
        REQUIRE(g.payoffs != h.payoffs);
    }
    SECTION("forced self-loop state is infeasible") {
        auto bad = p;
        bad.absorbing_states = {0};
        bad.max_attempts = 20;
        REQUIRE_THROWS_AS(generate_game(bad, 123), InfeasibleError);
    }
    SECTION("rows are stochastic after generation") {
        REQUIRE(check_row_stochastic(g).ok);
    }
}

TEST_CASE("generator input validation") {
    GeneratorParams p;
    p.players = 3;
    p.states = 2;
    p.structures = {StageStructure::Tag::ZeroSum};
    REQUIRE_THROWS_AS(generate_game(p, 1), DomainError);  // zero-sum needs 2 players
}

TEST_CASE("row stochasticity catches bad rows") {
    auto g = mixed_benchmark_game();
    g.transition[0][0] = 0.81;
    const auto rep = check_row_stochastic(g);
    REQUIRE_FALSE(rep.ok);
    REQUIRE(rep.state == 0);
}
