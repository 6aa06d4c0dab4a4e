#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sfpsg/action_space.hpp"
#include "sfpsg/errors.hpp"

namespace sfpsg {

// Structural equalities on loaded data are accepted up to 1e-12; games that
// fail by more are rejected, not repaired.
inline constexpr double kStructTol = 1e-12;
// Residual bound certifying the controller-shift decomposition of a Q-row.
inline constexpr double kDecomposeTol = 1e-10;

// Finite n-player stochastic game with state-invariant action sets and a
// designated controlling player per state. Immutable after construction.
struct StochasticGame {
    int num_players = 0;
    int num_states = 0;
    std::vector<int> action_counts;                    // |A^i|
    std::vector<std::vector<std::vector<double>>> payoffs;  // [player][state][profile]
    std::vector<std::vector<double>> transition;       // [state][profile * S + s']
    std::vector<double> discounts;                     // gamma^i in [0, 1)
    std::vector<int> controllers;                      // i_s per state

    ActionSpace space() const { return ActionSpace{action_counts}; }

    double payoff(int player, int state, std::int64_t profile) const {
        return payoffs[player][state][profile];
    }

    double trans(int state, std::int64_t profile, int next) const {
        return transition[state][profile * num_states + next];
    }

    std::span<const double> trans_row(int state, std::int64_t profile) const {
        return std::span<const double>(transition[state]).subspan(profile * num_states,
                                                                  num_states);
    }

    double max_abs_payoff(int player) const {
        double m = 0.0;
        for (const auto& row : payoffs[player])
            for (double x : row) m = std::max(m, std::abs(x));
        return m;
    }
};

// Checks that every field has the advertised shape. Throws ShapeError.
inline void require_consistent_shapes(const StochasticGame& g) {
    if (g.num_players < 2) throw ShapeError("game needs at least 2 players");
    if (g.num_states < 1) throw ShapeError("game needs at least 1 state");
    if (static_cast<int>(g.action_counts.size()) != g.num_players)
        throw ShapeError("action_counts size != players");
    for (int c : g.action_counts)
        if (c < 1) throw ShapeError("every player needs at least one action");
    const std::int64_t profiles = g.space().num_profiles();
    if (static_cast<int>(g.payoffs.size()) != g.num_players)
        throw ShapeError("payoffs: one tensor bank per player expected");
    for (const auto& per_state : g.payoffs) {
        if (static_cast<int>(per_state.size()) != g.num_states)
            throw ShapeError("payoffs: one tensor per state expected");
        for (const auto& row : per_state)
            if (static_cast<std::int64_t>(row.size()) != profiles)
                throw ShapeError("payoffs: tensor does not match action space");
    }
    if (static_cast<int>(g.transition.size()) != g.num_states)
        throw ShapeError("transition: one block per state expected");
    for (const auto& block : g.transition)
        if (static_cast<std::int64_t>(block.size()) != profiles * g.num_states)
            throw ShapeError("transition: block does not match profiles x states");
    if (static_cast<int>(g.discounts.size()) != g.num_players)
        throw ShapeError("discounts size != players");
    for (double d : g.discounts)
        if (!(d >= 0.0 && d < 1.0)) throw DomainError("discount factors must lie in [0, 1)");
    if (static_cast<int>(g.controllers.size()) != g.num_states)
        throw ShapeError("controllers size != states");
    for (int c : g.controllers)
        if (c < 0 || c >= g.num_players) throw ShapeError("controller index out of range");
}

struct StochasticityReport {
    bool ok = true;
    int state = -1;
    std::int64_t profile = -1;
    double row_sum = 0.0;  // offending sum, or min entry if negative
    std::string detail;
};

inline StochasticityReport check_row_stochastic(const StochasticGame& g) {
    StochasticityReport rep;
    const std::int64_t profiles = g.space().num_profiles();
    for (int s = 0; s < g.num_states; ++s) {
        for (std::int64_t p = 0; p < profiles; ++p) {
            double sum = 0.0;
            for (int sp = 0; sp < g.num_states; ++sp) {
                double v = g.trans(s, p, sp);
                if (v < 0.0) {
                    rep.ok = false;
                    rep.state = s;
                    rep.profile = p;
                    rep.row_sum = v;
                    rep.detail = "negative transition probability at state " +
                                 std::to_string(s);
                    return rep;
                }
                sum += v;
            }
            if (std::abs(sum - 1.0) > kStructTol) {
                rep.ok = false;
                rep.state = s;
                rep.profile = p;
                rep.row_sum = sum;
                rep.detail = "transition row at state " + std::to_string(s) +
                             " sums to " + std::to_string(sum);
                return rep;
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Turn-based controller validation.
//
// A state passes when some single player's action alone pins the transition
// row: for each of that player's actions, every transition entry varies by at
// most kStructTol as the opponents' actions range over their profiles.
// ---------------------------------------------------------------------------

struct ControllerViolation {
    int state = -1;
    std::vector<int> profile_a;  // two profiles agreeing on the candidate's action
    std::vector<int> profile_b;  // but with different transition rows
    double deviation = 0.0;
};

struct TurnBasedReport {
    bool ok = true;
    std::vector<std::vector<int>> witness_sets;  // per state: all valid controllers
    std::vector<int> chosen;                     // lowest-index witness per state
    std::optional<ControllerViolation> violation;
};

namespace detail {

// Literal spread check: for each of player i's actions and each transition
// entry, the max-minus-min over the opponents' profiles. Optionally returns
// the witness profile pair realizing the worst spread.
inline double controller_deviation(const StochasticGame& g, int s, int i,
                                   std::vector<int>* wa = nullptr,
                                   std::vector<int>* wb = nullptr) {
    const ActionSpace space = g.space();
    const std::int64_t profiles = space.num_profiles();
    const int own_actions = g.action_counts[i];
    struct Extremum {
        double lo = 0.0, hi = 0.0;
        std::int64_t lo_idx = -1, hi_idx = -1;
    };
    std::vector<Extremum> cells(static_cast<std::size_t>(own_actions) * g.num_states);
    std::vector<int> profile(space.players(), 0);
    for (std::int64_t idx = 0; idx < profiles; ++idx) {
        for (int sp = 0; sp < g.num_states; ++sp) {
            auto& cell = cells[static_cast<std::size_t>(profile[i]) * g.num_states + sp];
            const double v = g.trans(s, idx, sp);
            if (cell.lo_idx < 0 || v < cell.lo) {
                cell.lo = v;
                cell.lo_idx = idx;
            }
            if (cell.hi_idx < 0 || v > cell.hi) {
                cell.hi = v;
                cell.hi_idx = idx;
            }
        }
        space.next(profile);
    }
    double worst = 0.0;
    std::int64_t worst_lo = -1, worst_hi = -1;
    for (const auto& cell : cells) {
        if (cell.lo_idx < 0) continue;
        const double spread = cell.hi - cell.lo;
        if (spread > worst) {
            worst = spread;
            worst_lo = cell.lo_idx;
            worst_hi = cell.hi_idx;
        }
    }
    if (worst_lo >= 0) {
        if (wa) space.decode(worst_lo, *wa);
        if (wb) space.decode(worst_hi, *wb);
    }
    return worst;
}

}  // namespace detail

inline TurnBasedReport validate_turn_based_controller(const StochasticGame& g) {
    TurnBasedReport rep;
    rep.witness_sets.resize(g.num_states);
    rep.chosen.assign(g.num_states, -1);
    for (int s = 0; s < g.num_states; ++s) {
        for (int i = 0; i < g.num_players; ++i) {
            if (detail::controller_deviation(g, s, i) <= kStructTol)
                rep.witness_sets[s].push_back(i);
        }
        if (rep.witness_sets[s].empty()) {
            rep.ok = false;
            ControllerViolation v;
            v.state = s;
            // report the witness pair for the lowest-index player
            v.deviation = detail::controller_deviation(g, s, 0, &v.profile_a, &v.profile_b);
            rep.violation = std::move(v);
            return rep;
        }
        rep.chosen[s] = rep.witness_sets[s].front();
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Stage-game structure.
// ---------------------------------------------------------------------------

struct StageStructure {
    enum class Tag { ZeroSum, IdenticalInterest, Unstructured };
    Tag tag = Tag::Unstructured;
};

inline const char* to_string(StageStructure::Tag t) {
    switch (t) {
        case StageStructure::Tag::ZeroSum: return "zero_sum";
        case StageStructure::Tag::IdenticalInterest: return "identical_interest";
        default: return "unstructured";
    }
}

// Identical-interest is checked first, so all-zero payoffs (which satisfy both
// conditions) classify as identical-interest and remain valid for n > 2.
inline StageStructure classify_stage_game(const StochasticGame& g, int s) {
    const std::int64_t profiles = g.space().num_profiles();
    bool identical = true;
    for (int i = 1; i < g.num_players && identical; ++i)
        for (std::int64_t p = 0; p < profiles; ++p)
            if (std::abs(g.payoff(i, s, p) - g.payoff(0, s, p)) > kStructTol) {
                identical = false;
                break;
            }
    if (identical) return {StageStructure::Tag::IdenticalInterest};
    if (g.num_players == 2) {
        bool zero_sum = true;
        for (std::int64_t p = 0; p < profiles; ++p)
            if (std::abs(g.payoff(0, s, p) + g.payoff(1, s, p)) > kStructTol) {
                zero_sum = false;
                break;
            }
        if (zero_sum) return {StageStructure::Tag::ZeroSum};
    }
    return {StageStructure::Tag::Unstructured};
}

// ---------------------------------------------------------------------------
// Transition graph and connectivity.
// ---------------------------------------------------------------------------

// Adjacency lists over states: edge (s, s') iff p(s'|s,a) > 0 for some
// profile a, threshold exactly > 0.
using TransitionGraph = std::vector<std::vector<int>>;

inline TransitionGraph transition_graph(const StochasticGame& g) {
    TransitionGraph adj(g.num_states);
    const std::int64_t profiles = g.space().num_profiles();
    for (int s = 0; s < g.num_states; ++s) {
        std::vector<bool> seen(g.num_states, false);
        for (std::int64_t p = 0; p < profiles; ++p)
            for (int sp = 0; sp < g.num_states; ++sp)
                if (!seen[sp] && g.trans(s, p, sp) > 0.0) seen[sp] = true;
        for (int sp = 0; sp < g.num_states; ++sp)
            if (seen[sp]) adj[s].push_back(sp);
    }
    return adj;
}

struct ConnectivityReport {
    bool ok = true;
    int from = -1;  // pair with no directed path, when !ok
    int to = -1;
};

inline ConnectivityReport check_connectivity(const StochasticGame& g) {
    const auto adj = transition_graph(g);
    for (int s = 0; s < g.num_states; ++s) {
        std::vector<bool> reach(g.num_states, false);
        reach[s] = true;
        std::deque<int> queue{s};
        while (!queue.empty()) {
            int cur = queue.front();
            queue.pop_front();
            for (int nxt : adj[cur])
                if (!reach[nxt]) {
                    reach[nxt] = true;
                    queue.push_back(nxt);
                }
        }
        for (int sp = 0; sp < g.num_states; ++sp)
            if (!reach[sp]) return {false, s, sp};
    }
    return {};
}

// ---------------------------------------------------------------------------
// Strategic-equivalence decomposition.
//
// For a turn-based state, a Q-row built from the one-step recursion equals the
// stage payoff plus a function of the controller's action alone:
//     Q(a) = r(s, a) + g(a^{i_s}).
// The least-squares g is the mean of Q - r over the opponents' actions; the
// max-abs residual certifies the decomposition.
// ---------------------------------------------------------------------------

struct Decomposition {
    std::vector<double> shift;  // g over the controller's actions
    double residual = 0.0;
};

inline Decomposition decompose_controller_payoff(const StochasticGame& g, int s, int player,
                                                 std::span<const double> q_row) {
    const ActionSpace space = g.space();
    require_profile_tensor(space, q_row, "decompose_controller_payoff");
    const int ctrl = g.controllers[s];
    Decomposition out;
    out.shift.assign(g.action_counts[ctrl], 0.0);
    std::vector<std::int64_t> counts(g.action_counts[ctrl], 0);
    std::vector<int> profile(space.players(), 0);
    const std::int64_t profiles = space.num_profiles();
    for (std::int64_t idx = 0; idx < profiles; ++idx) {
        out.shift[profile[ctrl]] += q_row[idx] - g.payoff(player, s, idx);
        ++counts[profile[ctrl]];
        space.next(profile);
    }
    for (int b = 0; b < g.action_counts[ctrl]; ++b) out.shift[b] /= counts[b];
    std::fill(profile.begin(), profile.end(), 0);
    for (std::int64_t idx = 0; idx < profiles; ++idx) {
        double res =
            std::abs(q_row[idx] - g.payoff(player, s, idx) - out.shift[profile[ctrl]]);
        out.residual = std::max(out.residual, res);
        space.next(profile);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Aggregate validation (what a run requires before simulating).
// ---------------------------------------------------------------------------

struct CheckResult {
    std::string name;
    bool ok = true;
    std::string detail;
};

struct ValidationReport {
    bool ok = true;
    std::vector<CheckResult> checks;

    void add(std::string name, bool check_ok, std::string detail = "") {
        ok = ok && check_ok;
        checks.push_back({std::move(name), check_ok, std::move(detail)});
    }

    std::string summary() const {
        std::string out;
        for (const auto& c : checks) {
            if (c.ok) continue;
            if (!out.empty()) out += "; ";
            out += c.name;
            if (!c.detail.empty()) out += ": " + c.detail;
        }
        return out;
    }
};

inline ValidationReport validate_game(const StochasticGame& g) {
    ValidationReport rep;
    require_consistent_shapes(g);

    const auto stoch = check_row_stochastic(g);
    rep.add("row_stochastic", stoch.ok, stoch.detail);

    const auto turn = validate_turn_based_controller(g);
    if (turn.ok) {
        rep.add("turn_based_controller", true);
        bool declared_ok = true;
        std::string detail;
        for (int s = 0; s < g.num_states; ++s) {
            const auto& ws = turn.witness_sets[s];
            if (std::find(ws.begin(), ws.end(), g.controllers[s]) == ws.end()) {
                declared_ok = false;
                detail = "state " + std::to_string(s) + ": declared controller " +
                         std::to_string(g.controllers[s]) + " does not explain transitions";
                break;
            }
        }
        rep.add("declared_controllers", declared_ok, detail);
    } else {
        const auto& v = *turn.violation;
        auto profile_str = [](const std::vector<int>& p) {
            std::string s = "(";
            for (std::size_t i = 0; i < p.size(); ++i)
                s += (i ? "," : "") + std::to_string(p[i]);
            return s + ")";
        };
        rep.add("turn_based_controller", false,
                "state " + std::to_string(v.state) +
                    ": no single player explains transitions; witness profiles " +
                    profile_str(v.profile_a) + " vs " + profile_str(v.profile_b) +
                    " agree for player 0 but differ by " + std::to_string(v.deviation));
        rep.add("declared_controllers", false, "skipped: turn-based check failed");
    }

    bool structured = true;
    std::string detail;
    for (int s = 0; s < g.num_states; ++s) {
        if (classify_stage_game(g, s).tag == StageStructure::Tag::Unstructured) {
            structured = false;
            detail = "state " + std::to_string(s) +
                     " is neither zero-sum nor identical-interest";
            break;
        }
    }
    rep.add("stage_structure", structured, detail);

    const auto conn = check_connectivity(g);
    rep.add("connectivity", conn.ok,
            conn.ok ? "" : ("no path from state " + std::to_string(conn.from) +
                            " to state " + std::to_string(conn.to)));
    return rep;
}

}  // namespace sfpsg
