#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sfpsg/action_space.hpp"
#include "sfpsg/errors.hpp"

namespace sfpsg {

// Probability vector over one player's actions.
using Mixed = std::vector<double>;

// Smooth strictly concave perturbation of expected payoff, scaled by the
// temperature. Entropy is the built-in kind; it makes the best response the
// logit choice in closed form.
struct PerturbationSpec {
    enum class Kind { Entropy };
    Kind kind = Kind::Entropy;
    double temperature = 1.0;
};

inline void require_strategy(const ActionSpace& space, int player, const Mixed& m,
                             const char* what) {
    if (static_cast<int>(m.size()) != space.counts[player])
        throw ShapeError(std::string(what) + ": strategy for player " +
                         std::to_string(player) + " has wrong length");
}

inline void require_profile_strategies(const ActionSpace& space,
                                       std::span<const Mixed> strats, const char* what) {
    if (static_cast<int>(strats.size()) != space.players())
        throw ShapeError(std::string(what) + ": need one strategy per player");
    for (int j = 0; j < space.players(); ++j) require_strategy(space, j, strats[j], what);
}

inline double entropy(const Mixed& m) {
    double h = 0.0;
    for (double p : m)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

// Expected value of a payoff tensor under independent play of the given
// strategies (own strategy included in the profile).
inline double expected_payoff(const ActionSpace& space, std::span<const double> q_row,
                              std::span<const Mixed> strategies) {
    require_profile_tensor(space, q_row, "expected_payoff");
    require_profile_strategies(space, strategies, "expected_payoff");
    std::vector<int> profile(space.players(), 0);
    double total = 0.0;
    std::int64_t idx = 0;
    do {
        double w = 1.0;
        for (int j = 0; j < space.players(); ++j) w *= strategies[j][profile[j]];
        total += q_row[idx] * w;
        ++idx;
    } while (space.next(profile));
    return total;
}

// u(a^i) = E_{a^{-i} ~ beliefs}[Q(a^i, a^{-i})]; beliefs[player] is ignored.
inline std::vector<double> marginal_payoffs(const ActionSpace& space,
                                            std::span<const double> q_row, int player,
                                            std::span<const Mixed> beliefs) {
    require_profile_tensor(space, q_row, "marginal_payoffs");
    require_profile_strategies(space, beliefs, "marginal_payoffs");
    std::vector<double> u(space.counts[player], 0.0);
    std::vector<int> profile(space.players(), 0);
    std::int64_t idx = 0;
    do {
        double w = 1.0;
        for (int j = 0; j < space.players(); ++j)
            if (j != player) w *= beliefs[j][profile[j]];
        u[profile[player]] += q_row[idx] * w;
        ++idx;
    } while (space.next(profile));
    return u;
}

// Softmax with max-subtraction; safe down to temperatures around 1e-6.
inline Mixed logit_choice(std::span<const double> utilities, double temperature) {
    if (!(temperature > 0.0)) throw DomainError("temperature must be strictly positive");
    double top = utilities[0];
    for (double u : utilities) top = std::max(top, u);
    Mixed out(utilities.size());
    double z = 0.0;
    for (std::size_t i = 0; i < utilities.size(); ++i) {
        out[i] = std::exp((utilities[i] - top) / temperature);
        z += out[i];
    }
    for (double& p : out) p /= z;
    return out;
}

inline Mixed smoothed_best_response(const ActionSpace& space, std::span<const double> q_row,
                                    int player, std::span<const Mixed> beliefs,
                                    const PerturbationSpec& perturb) {
    for (double v : q_row)
        if (!std::isfinite(v))
            throw NonFiniteError("smoothed_best_response: non-finite payoff entry");
    switch (perturb.kind) {
        case PerturbationSpec::Kind::Entropy: {
            const auto u = marginal_payoffs(space, q_row, player, beliefs);
            return logit_choice(u, perturb.temperature);
        }
    }
    throw DomainError("unknown perturbation kind");
}

// Expected payoff of playing the smoothed best response against the beliefs.
// Unperturbed: the entropy term is not added.
inline double best_response_value(const ActionSpace& space, std::span<const double> q_row,
                                  int player, std::span<const Mixed> beliefs,
                                  const PerturbationSpec& perturb) {
    const Mixed response = smoothed_best_response(space, q_row, player, beliefs, perturb);
    std::vector<Mixed> strategies(beliefs.begin(), beliefs.end());
    strategies[player] = response;
    return expected_payoff(space, q_row, strategies);
}

}  // namespace sfpsg
