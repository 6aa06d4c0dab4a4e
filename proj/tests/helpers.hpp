#pragma once

#include "sfpsg/sfpsg.hpp"

namespace sfpsg::testing {

// The mixed-structure benchmark game: state 0 is matching pennies (zero-sum,
// controlled by player 0), state 1 is a coordination game with identical
// payoffs (controlled by player 1). The controller's action tilts the
// successor distribution between (0.8, 0.2) and (0.2, 0.8).
inline StochasticGame mixed_benchmark_game() {
    StochasticGame g;
    g.num_players = 2;
    g.num_states = 2;
    g.action_counts = {2, 2};
    g.discounts = {0.9, 0.8};
    g.controllers = {0, 1};
    g.payoffs = {
        {{1, -1, -1, 1}, {1, 0, 0, 0.5}},
        {{-1, 1, 1, -1}, {1, 0, 0, 0.5}},
    };
    g.transition = {
        {0.8, 0.2, 0.8, 0.2, 0.2, 0.8, 0.2, 0.8},
        {0.8, 0.2, 0.2, 0.8, 0.8, 0.2, 0.2, 0.8},
    };
    return g;
}

// Single-state zero-sum game with gamma = 0: the epoch dynamics reduce to
// fictitious play on the stage game.
inline StochasticGame repeated_zero_sum_game(bool symmetric = false) {
    StochasticGame g;
    g.num_players = 2;
    g.num_states = 1;
    g.action_counts = {2, 2};
    g.discounts = {0.0, 0.0};
    g.controllers = {0};
    if (symmetric) {
        g.payoffs = {{{1, -1, -1, 1}}, {{-1, 1, 1, -1}}};
    } else {
        g.payoffs = {{{2, 0, -1, 1}}, {{-2, 0, 1, -1}}};
    }
    g.transition = {{1, 1, 1, 1}};
    return g;
}

inline double linf(const Mixed& a, const Mixed& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline double profile_linf(const std::vector<Mixed>& a, const std::vector<Mixed>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, linf(a[i], b[i]));
    return d;
}

}  // namespace sfpsg::testing
