#include <catch2/catch.hpp>

#include <cmath>

#include "helpers.hpp"
#include "sfpsg/sfpsg.hpp"

using namespace sfpsg;

namespace {

// Independent oracle: expected payoff by explicit enumeration of the four
// profiles of a 2x2 game. Kept separate from the library's odometer loop.
double brute_expected_2x2(const std::vector<double>& q, const Mixed& own, const Mixed& opp) {
    double total = 0.0;
    for (int a0 = 0; a0 < 2; ++a0)
        for (int a1 = 0; a1 < 2; ++a1) total += q[a0 * 2 + a1] * own[a0] * opp[a1];
    return total;
}

const ActionSpace kSpace22{{2, 2}};

}  // namespace

TEST_CASE("expected payoff") {
    SECTION("constant tensor returns the constant") {
        const std::vector<double> q(4, 3.25);
        const std::vector<Mixed> strats{{0.3, 0.7}, {0.9, 0.1}};
        REQUIRE(expected_payoff(kSpace22, q, strats) == Approx(3.25).epsilon(1e-14));
    }
    SECTION("matching pennies under uniform play is zero") {
        const std::vector<double> q{1, -1, -1, 1};
        const std::vector<Mixed> strats{{0.5, 0.5}, {0.5, 0.5}};
        REQUIRE(expected_payoff(kSpace22, q, strats) == Approx(0.0).margin(1e-15));
    }
    SECTION("agrees with the brute-force enumeration oracle") {
        const std::vector<double> q{2, 0, 1, 3};
        const Mixed own{0.5, 0.5};
        const Mixed opp{0.25, 0.75};
        // frozen from brute_expected_2x2: 0.5*(0.25*2) + 0.5*(0.25*1 + 0.75*3) = 1.5
        REQUIRE(brute_expected_2x2(q, own, opp) == Approx(1.5).epsilon(1e-14));
        REQUIRE(expected_payoff(kSpace22, q, {{own, opp}}) == Approx(1.5).epsilon(1e-14));
        // swapped roles for coverage: 0.25*(0.5*2) + 0.75*(0.5*1 + 0.5*3) = 1.75
        REQUIRE(brute_expected_2x2(q, opp, own) == Approx(1.75).epsilon(1e-14));
        REQUIRE(expected_payoff(kSpace22, q, {{opp, own}}) == Approx(1.75).epsilon(1e-14));
    }
    SECTION("shape mismatch throws") {
        const std::vector<double> q(3, 0.0);
        const std::vector<Mixed> strats{{0.5, 0.5}, {0.5, 0.5}};
        REQUIRE_THROWS_AS(expected_payoff(kSpace22, q, strats), ShapeError);
    }
}

TEST_CASE("marginal payoffs") {
    SECTION("constant tensor gives constant marginals") {
        const std::vector<double> q(4, -2.0);
        const auto u = marginal_payoffs(kSpace22, q, 0, {{Mixed{0.5, 0.5}, Mixed{0.2, 0.8}}});
        REQUIRE(u[0] == Approx(-2.0));
        REQUIRE(u[1] == Approx(-2.0));
    }
    SECTION("matching pennies against uniform is flat zero") {
        const std::vector<double> q{1, -1, -1, 1};
        const auto u = marginal_payoffs(kSpace22, q, 0, {{Mixed{1, 0}, Mixed{0.5, 0.5}}});
        REQUIRE(u[0] == Approx(0.0).margin(1e-15));
        REQUIRE(u[1] == Approx(0.0).margin(1e-15));
    }
    SECTION("direct sums") {
        const std::vector<double> q{2, 0, 1, 3};
        const auto u = marginal_payoffs(kSpace22, q, 0, {{Mixed{0.5, 0.5}, Mixed{0.25, 0.75}}});
        REQUIRE(u[0] == Approx(0.5).epsilon(1e-14));   // 0.25*2 + 0.75*0
        REQUIRE(u[1] == Approx(2.5).epsilon(1e-14));   // 0.25*1 + 0.75*3
    }
    SECTION("matches expected_payoff at point masses") {
        const std::vector<double> q{0.3, -1.2, 2.2, 0.9};
        const std::vector<Mixed> beliefs{{0.5, 0.5}, {0.6, 0.4}};
        const auto u = marginal_payoffs(kSpace22, q, 0, beliefs);
        for (int a = 0; a < 2; ++a) {
            Mixed point(2, 0.0);
            point[a] = 1.0;
            REQUIRE(u[a] ==
                    Approx(expected_payoff(kSpace22, q, {{point, beliefs[1]}})).epsilon(1e-14));
        }
    }
}

TEST_CASE("logit choice") {
    SECTION("flat utilities give the uniform distribution") {
        const auto m = logit_choice(std::vector<double>{0, 0, 0}, 0.7);
        for (double p : m) REQUIRE(p == Approx(1.0 / 3).epsilon(1e-14));
    }
    SECTION("closed form at tau = 1") {
        const auto m = logit_choice(std::vector<double>{1, 0}, 1.0);
        const double e = std::exp(1.0);
        REQUIRE(m[0] == Approx(e / (e + 1)).epsilon(1e-12));
        REQUIRE(m[1] == Approx(1 / (e + 1)).epsilon(1e-12));
        REQUIRE(m[0] == Approx(0.731059).margin(5e-7));
    }
    SECTION("high temperature approaches uniform") {
        const auto m = logit_choice(std::vector<double>{1, 0}, 1000.0);
        REQUIRE(std::abs(m[0] - 0.5) < 1e-3);
        REQUIRE(std::abs(m[1] - 0.5) < 1e-3);
    }
    SECTION("tiny temperature does not overflow") {
        const auto m = logit_choice(std::vector<double>{5, -5}, 1e-6);
        REQUIRE(std::isfinite(m[0]));
        REQUIRE(m[0] == Approx(1.0));
        REQUIRE(m[0] + m[1] == Approx(1.0));
    }
    SECTION("non-positive temperature is rejected") {
        REQUIRE_THROWS_AS(logit_choice(std::vector<double>{1, 0}, 0.0), DomainError);
    }
}

TEST_CASE("smoothed best response") {
    const PerturbationSpec perturb{PerturbationSpec::Kind::Entropy, 1.0};

    SECTION("non-finite payoffs are rejected") {
        std::vector<double> q{1, std::numeric_limits<double>::quiet_NaN(), 0, 0};
        const std::vector<Mixed> beliefs{{0.5, 0.5}, {0.5, 0.5}};
        REQUIRE_THROWS_AS(smoothed_best_response(kSpace22, q, 0, beliefs, perturb),
                          NonFiniteError);
    }
    SECTION("all entries strictly positive") {
        const std::vector<double> q{4, -4, -4, 4};
        const auto m = smoothed_best_response(kSpace22, q, 0, {{Mixed{1, 0}, Mixed{0.9, 0.1}}},
                                              perturb);
        REQUIRE(m[0] > 0.0);
        REQUIRE(m[1] > 0.0);
        REQUIRE(m[0] + m[1] == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("best response value composes the audited operations") {
    const PerturbationSpec perturb{PerturbationSpec::Kind::Entropy, 1.0};
    SECTION("constant tensor") {
        const std::vector<double> q(4, 1.5);
        const std::vector<Mixed> beliefs{{0.5, 0.5}, {0.3, 0.7}};
        REQUIRE(best_response_value(kSpace22, q, 0, beliefs, perturb) == Approx(1.5));
    }
    SECTION("matching pennies under uniform beliefs") {
        const std::vector<double> q{1, -1, -1, 1};
        const std::vector<Mixed> beliefs{{0.5, 0.5}, {0.5, 0.5}};
        REQUIRE(best_response_value(kSpace22, q, 0, beliefs, perturb) ==
                Approx(0.0).margin(1e-14));
    }
    SECTION("derived composition") {
        const std::vector<double> q{2, 0, 1, 3};
        const std::vector<Mixed> beliefs{{0.5, 0.5}, {0.25, 0.75}};
        const auto u = marginal_payoffs(kSpace22, q, 0, beliefs);
        const auto br = logit_choice(u, 1.0);
        const double expect = br[0] * u[0] + br[1] * u[1];
        REQUIRE(best_response_value(kSpace22, q, 0, beliefs, perturb) ==
                Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("response properties on random instances") {
    SplitMix64 rng = derive(2024, Stream::Scratch);
    const int instances = 200;
    for (int trial = 0; trial < instances; ++trial) {
        const int own_actions = 2 + rng.uniform_int(3);
        const int opp_actions = 2 + rng.uniform_int(3);
        const ActionSpace space{{own_actions, opp_actions}};
        const double tau = 0.3 + 3.0 * rng.uniform01();
        const PerturbationSpec perturb{PerturbationSpec::Kind::Entropy, tau};
        std::vector<double> q(space.num_profiles());
        for (double& v : q) v = -5.0 + 10.0 * rng.uniform01();
        std::vector<Mixed> beliefs{sample_simplex(own_actions, rng),
                                   sample_simplex(opp_actions, rng)};
        const auto u = marginal_payoffs(space, q, 0, beliefs);
        const auto br = smoothed_best_response(space, q, 0, beliefs, perturb);

        // logit stationarity: tau (log pi(a) - log pi(b)) = u(a) - u(b)
        for (int a = 1; a < own_actions; ++a) {
            const double lhs = tau * (std::log(br[a]) - std::log(br[0]));
            REQUIRE(lhs == Approx(u[a] - u[0]).margin(1e-9));
        }

        // optimality of the smoothed response in the perturbed objective
        std::vector<Mixed> with_br = beliefs;
        with_br[0] = br;
        const double best = expected_payoff(space, q, with_br) + tau * entropy(br);
        for (int probe = 0; probe < 50; ++probe) {
            std::vector<Mixed> with_mu = beliefs;
            with_mu[0] = sample_simplex(own_actions, rng);
            const double val =
                expected_payoff(space, q, with_mu) + tau * entropy(with_mu[0]);
            REQUIRE(val <= best + 1e-12);
        }

        // shift invariance: adding any function of the opponent's action
        // leaves the response unchanged
        std::vector<double> shift(opp_actions);
        for (double& v : shift) v = -3.0 + 6.0 * rng.uniform01();
        std::vector<double> shifted = q;
        for (int a0 = 0; a0 < own_actions; ++a0)
            for (int a1 = 0; a1 < opp_actions; ++a1)
                shifted[a0 * opp_actions + a1] += shift[a1];
        const auto br_shifted = smoothed_best_response(space, shifted, 0, beliefs, perturb);
        REQUIRE(sfpsg::testing::linf(br, br_shifted) <= 1e-12);

        // temperature scaling: B(h q, h tau) = B(q, tau) for h > 0
        const double h = 0.1 + 5.0 * rng.uniform01();
        std::vector<double> scaled = q;
        for (double& v : scaled) v *= h;
        const PerturbationSpec scaled_perturb{PerturbationSpec::Kind::Entropy, tau * h};
        const auto br_scaled = smoothed_best_response(space, scaled, 0, beliefs, scaled_perturb);
        REQUIRE(sfpsg::testing::linf(br, br_scaled) <= 1e-12);
    }
}
