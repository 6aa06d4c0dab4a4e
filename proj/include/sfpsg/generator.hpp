#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "sfpsg/game.hpp"
#include "sfpsg/rng.hpp"

namespace sfpsg {

// Random-game generator. Turn-based transitions and the requested per-state
// payoff structure hold by construction; connectivity is obtained by
// rejection sampling over transition supports.
struct GeneratorParams {
    enum class ControllerPolicy { List, RoundRobin, Random };

    int players = 2;
    int states = 2;
    std::vector<int> actions;                       // |A^i|; broadcast if size 1
    std::vector<StageStructure::Tag> structures;    // per state; broadcast if size 1
    double payoff_lo = -1.0;
    double payoff_hi = 1.0;
    std::vector<double> discounts;                  // broadcast if size 1
    ControllerPolicy controller_policy = ControllerPolicy::RoundRobin;
    std::vector<int> controller_list;               // used with Policy::List
    int successors = 0;                             // support size per controller action; 0 = all states
    std::vector<int> absorbing_states;              // forced self-loop states
    int max_attempts = 100;
};

namespace detail {

inline std::vector<int> broadcast_int(std::vector<int> v, int n, const char* what) {
    if (v.size() == 1) v.assign(n, v[0]);
    if (static_cast<int>(v.size()) != n)
        throw DomainError(std::string("generator: ") + what + " needs 1 or " +
                          std::to_string(n) + " entries");
    return v;
}

inline std::vector<double> broadcast_double(std::vector<double> v, int n, const char* what) {
    if (v.size() == 1) v.assign(n, v[0]);
    if (static_cast<int>(v.size()) != n)
        throw DomainError(std::string("generator: ") + what + " needs 1 or " +
                          std::to_string(n) + " entries");
    return v;
}

}  // namespace detail

inline StochasticGame generate_game(const GeneratorParams& params, std::uint64_t seed) {
    if (params.players < 2) throw DomainError("generator: need at least 2 players");
    if (params.states < 1) throw DomainError("generator: need at least 1 state");
    if (!(params.payoff_lo <= params.payoff_hi))
        throw DomainError("generator: empty payoff range");
    if (params.max_attempts < 1) throw DomainError("generator: max_attempts must be >= 1");

    const auto actions =
        detail::broadcast_int(params.actions.empty() ? std::vector<int>{2} : params.actions,
                              params.players, "actions");
    auto structures = params.structures.empty()
                          ? std::vector<StageStructure::Tag>{StageStructure::Tag::IdenticalInterest}
                          : params.structures;
    if (structures.size() == 1) structures.assign(params.states, structures[0]);
    if (static_cast<int>(structures.size()) != params.states)
        throw DomainError("generator: structures needs 1 or states entries");
    for (auto tag : structures) {
        if (tag == StageStructure::Tag::Unstructured)
            throw DomainError("generator: unstructured states are not generated");
        if (tag == StageStructure::Tag::ZeroSum && params.players != 2)
            throw DomainError("generator: zero-sum states require exactly 2 players");
    }
    const auto discounts = detail::broadcast_double(
        params.discounts.empty() ? std::vector<double>{0.9} : params.discounts,
        params.players, "discounts");
    for (double d : discounts)
        if (!(d >= 0.0 && d < 1.0)) throw DomainError("generator: discounts must lie in [0,1)");
    for (int s : params.absorbing_states)
        if (s < 0 || s >= params.states) throw DomainError("generator: absorbing state out of range");

    SplitMix64 rng = derive(seed, Stream::Generate);

    std::vector<int> controllers(params.states, 0);
    switch (params.controller_policy) {
        case GeneratorParams::ControllerPolicy::List:
            if (static_cast<int>(params.controller_list.size()) != params.states)
                throw DomainError("generator: controller list needs one entry per state");
            controllers = params.controller_list;
            for (int c : controllers)
                if (c < 0 || c >= params.players)
                    throw DomainError("generator: controller index out of range");
            break;
        case GeneratorParams::ControllerPolicy::RoundRobin:
            for (int s = 0; s < params.states; ++s) controllers[s] = s % params.players;
            break;
        case GeneratorParams::ControllerPolicy::Random:
            for (int s = 0; s < params.states; ++s) controllers[s] = rng.uniform_int(params.players);
            break;
    }

    StochasticGame g;
    g.num_players = params.players;
    g.num_states = params.states;
    g.action_counts = actions;
    g.discounts = discounts;
    g.controllers = controllers;
    const ActionSpace space = g.space();
    const std::int64_t profiles = space.num_profiles();

    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        // payoffs per structure tag
        g.payoffs.assign(params.players,
                         std::vector<std::vector<double>>(
                             params.states, std::vector<double>(profiles, 0.0)));
        for (int s = 0; s < params.states; ++s) {
            for (std::int64_t p = 0; p < profiles; ++p) {
                const double u = params.payoff_lo +
                                 (params.payoff_hi - params.payoff_lo) * rng.uniform01();
                if (structures[s] == StageStructure::Tag::ZeroSum) {
                    g.payoffs[0][s][p] = u;
                    g.payoffs[1][s][p] = -u;
                } else {
                    for (int i = 0; i < params.players; ++i) g.payoffs[i][s][p] = u;
                }
            }
        }

        // turn-based transitions: one row per controller action, broadcast
        // over the opponents' actions so the Def-1 property holds exactly
        g.transition.assign(params.states,
                            std::vector<double>(profiles * params.states, 0.0));
        for (int s = 0; s < params.states; ++s) {
            const int ctrl = controllers[s];
            const bool absorbing =
                std::find(params.absorbing_states.begin(), params.absorbing_states.end(), s) !=
                params.absorbing_states.end();
            std::vector<std::vector<double>> rows(actions[ctrl],
                                                  std::vector<double>(params.states, 0.0));
            for (int b = 0; b < actions[ctrl]; ++b) {
                if (absorbing) {
                    rows[b][s] = 1.0;
                    continue;
                }
                std::vector<int> support;
                if (params.successors <= 0 || params.successors >= params.states) {
                    support.resize(params.states);
                    for (int sp = 0; sp < params.states; ++sp) support[sp] = sp;
                } else {
                    std::vector<int> pool(params.states);
                    for (int sp = 0; sp < params.states; ++sp) pool[sp] = sp;
                    for (int pick = 0; pick < params.successors; ++pick) {
                        const int j = pick + rng.uniform_int(params.states - pick);
                        std::swap(pool[pick], pool[j]);
                        support.push_back(pool[pick]);
                    }
                }
                const auto weights = sample_simplex(static_cast<int>(support.size()), rng);
                for (std::size_t u = 0; u < support.size(); ++u)
                    rows[b][support[u]] = weights[u];
            }
            std::vector<int> profile(space.players(), 0);
            for (std::int64_t p = 0; p < profiles; ++p) {
                for (int sp = 0; sp < params.states; ++sp)
                    g.transition[s][p * params.states + sp] = rows[profile[ctrl]][sp];
                space.next(profile);
            }
        }

        if (check_connectivity(g).ok) {
            const auto report = validate_game(g);
            if (!report.ok)
                throw DomainError("generator produced an invalid game: " + report.summary());
            return g;
        }
    }
    throw InfeasibleError(params.max_attempts);
}

}  // namespace sfpsg
