#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sfpsg/engine.hpp"
#include "sfpsg/game.hpp"
#include "sfpsg/response.hpp"
#include "sfpsg/rng.hpp"

namespace sfpsg {

// ---------------------------------------------------------------------------
// Ground truth for the learning dynamics: the per-stage Nash distributions
// and Q-functions of a finite-horizon version of the game, computed by
// backward induction. Stage k of a horizon-H solution is the auxiliary game
// H-1-k steps before the end, so the engine's m-indexed bank compares against
// stage H-1-m.
//
// Each per-state stage game is solved by damped fixed-point iteration
//     pi <- (1 - lambda) pi + lambda B(pi)
// from the uniform profile. Ten extra starts from random interior profiles
// give a uniqueness certificate: identical-interest games can have several
// Nash distributions at small temperatures, and only a certified solve pins
// the limit object down.
// ---------------------------------------------------------------------------

struct StageSolveParams {
    double damping = 0.5;
    double tol = 1e-11;
    std::int64_t max_iters = 1000000;
    int multistarts = 10;
    double unique_tol = 1e-6;
    std::uint64_t seed = 0;
    std::uint64_t stream_key = 0;  // disambiguates multistart streams per (stage, state)
};

struct StageSolveResult {
    std::vector<Mixed> profile;  // fixed point, one strategy per player
    double residual = 0.0;
    std::int64_t iterations = 0;
    bool converged_all_starts = true;
    bool unique = true;
    double multistart_spread = 0.0;
    std::vector<std::vector<Mixed>> distinct_points;  // cluster representatives
};

namespace detail {

inline std::vector<Mixed> apply_response_map(const ActionSpace& space,
                                             std::span<const std::vector<double>> q_rows,
                                             const std::vector<Mixed>& profile,
                                             const PerturbationSpec& perturb) {
    std::vector<Mixed> out(profile.size());
    for (int i = 0; i < space.players(); ++i)
        out[i] = smoothed_best_response(space, q_rows[i], i, profile, perturb);
    return out;
}

inline double profile_distance(const std::vector<Mixed>& a, const std::vector<Mixed>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t c = 0; c < a[i].size(); ++c)
            d = std::max(d, std::abs(a[i][c] - b[i][c]));
    return d;
}

struct DampedIterationResult {
    std::vector<Mixed> profile;
    double residual;
    std::int64_t iterations;
    bool converged;
};

inline DampedIterationResult damped_iteration(const ActionSpace& space,
                                              std::span<const std::vector<double>> q_rows,
                                              std::vector<Mixed> profile,
                                              const PerturbationSpec& perturb,
                                              const StageSolveParams& params) {
    for (std::int64_t it = 0; it < params.max_iters; ++it) {
        const auto mapped = apply_response_map(space, q_rows, profile, perturb);
        const double resid = profile_distance(profile, mapped);
        if (resid <= params.tol) return {std::move(profile), resid, it, true};
        for (std::size_t i = 0; i < profile.size(); ++i)
            for (std::size_t c = 0; c < profile[i].size(); ++c)
                profile[i][c] =
                    (1.0 - params.damping) * profile[i][c] + params.damping * mapped[i][c];
    }
    const auto mapped = apply_response_map(space, q_rows, profile, perturb);
    const double resid = profile_distance(profile, mapped);
    return {std::move(profile), resid, params.max_iters, false};
}

}  // namespace detail

inline StageSolveResult solve_stage_nash(const ActionSpace& space,
                                         std::span<const std::vector<double>> q_rows,
                                         const PerturbationSpec& perturb,
                                         const StageSolveParams& params = {}) {
    if (static_cast<int>(q_rows.size()) != space.players())
        throw ShapeError("solve_stage_nash: one payoff tensor per player expected");
    for (const auto& q : q_rows) require_profile_tensor(space, q, "solve_stage_nash");

    std::vector<Mixed> uniform(space.players());
    for (int i = 0; i < space.players(); ++i)
        uniform[i].assign(space.counts[i], 1.0 / space.counts[i]);

    auto base = detail::damped_iteration(space, q_rows, uniform, perturb, params);
    if (!base.converged) throw NoConvergenceError(base.residual, base.iterations);

    StageSolveResult out;
    out.profile = base.profile;
    out.residual = base.residual;
    out.iterations = base.iterations;
    out.distinct_points.push_back(base.profile);

    for (int start = 0; start < params.multistarts; ++start) {
        SplitMix64 rng =
            derive(params.seed, Stream::OracleMultistart, params.stream_key,
                   static_cast<std::uint64_t>(start));
        std::vector<Mixed> init(space.players());
        for (int i = 0; i < space.players(); ++i)
            init[i] = sample_simplex(space.counts[i], rng);
        const auto alt = detail::damped_iteration(space, q_rows, std::move(init), perturb, params);
        if (!alt.converged) {
            out.converged_all_starts = false;
            out.unique = false;
            continue;
        }
        const double dist = detail::profile_distance(out.profile, alt.profile);
        out.multistart_spread = std::max(out.multistart_spread, dist);
        double nearest = dist;
        for (const auto& rep : out.distinct_points)
            nearest = std::min(nearest, detail::profile_distance(rep, alt.profile));
        if (nearest > params.unique_tol) out.distinct_points.push_back(alt.profile);
    }
    if (out.multistart_spread > params.unique_tol) out.unique = false;
    return out;
}

// ---------------------------------------------------------------------------
// Finite-horizon solution.
// ---------------------------------------------------------------------------

struct StageStateSolution {
    std::vector<Mixed> strategies;          // per player
    std::vector<std::vector<double>> q;     // per player, over profiles
    std::vector<double> values;             // per player
    double fp_residual = 0.0;
    bool unique = true;
    double multistart_spread = 0.0;
    double equiv_residual = 0.0;  // decomposition certificate (0 at the terminal stage)
    std::vector<std::vector<Mixed>> alternates;  // distinct fixed points beyond the first
};

struct FiniteHorizonSolution {
    int horizon = 0;  // number of stages; stages[horizon-1] is terminal
    double tau = 0.0;
    int num_players = 0;
    int num_states = 0;
    std::vector<int> action_counts;
    double max_abs_payoff = 0.0;  // over players and states
    std::vector<std::vector<StageStateSolution>> stages;  // [k][state]
};

inline FiniteHorizonSolution backward_induction(const StochasticGame& g, int horizon,
                                                const PerturbationSpec& perturb,
                                                const StageSolveParams& params = {}) {
    if (horizon < 1) throw DomainError("horizon must be at least 1");
    const auto report = validate_game(g);
    if (!report.ok) throw DomainError("invalid game: " + report.summary());

    const ActionSpace space = g.space();
    FiniteHorizonSolution sol;
    sol.horizon = horizon;
    sol.tau = perturb.temperature;
    sol.num_players = g.num_players;
    sol.num_states = g.num_states;
    sol.action_counts = g.action_counts;
    for (int i = 0; i < g.num_players; ++i)
        sol.max_abs_payoff = std::max(sol.max_abs_payoff, g.max_abs_payoff(i));
    sol.stages.assign(horizon, std::vector<StageStateSolution>(g.num_states));

    for (int k = horizon - 1; k >= 0; --k) {
        for (int s = 0; s < g.num_states; ++s) {
            StageStateSolution& cell = sol.stages[k][s];
            cell.q.resize(g.num_players);
            for (int i = 0; i < g.num_players; ++i) {
                if (k == horizon - 1) {
                    cell.q[i] = g.payoffs[i][s];
                } else {
                    const auto& next = sol.stages[k + 1];
                    cell.q[i].resize(space.num_profiles());
                    for (std::int64_t p = 0; p < space.num_profiles(); ++p) {
                        double cont = 0.0;
                        for (int sp = 0; sp < g.num_states; ++sp)
                            cont += g.trans(s, p, sp) * next[sp].values[i];
                        cell.q[i][p] = g.payoff(i, s, p) + g.discounts[i] * cont;
                    }
                }
            }
            if (k < horizon - 1) {
                for (int i = 0; i < g.num_players; ++i) {
                    const auto dec = decompose_controller_payoff(g, s, i, cell.q[i]);
                    cell.equiv_residual = std::max(cell.equiv_residual, dec.residual);
                }
                if (cell.equiv_residual > kDecomposeTol)
                    throw EquivalenceViolationError(k, s, cell.equiv_residual);
            }
            StageSolveParams cell_params = params;
            cell_params.stream_key =
                static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(g.num_states) + s;
            const auto solved = solve_stage_nash(space, cell.q, perturb, cell_params);
            cell.strategies = solved.profile;
            cell.fp_residual = solved.residual;
            cell.unique = solved.unique;
            cell.multistart_spread = solved.multistart_spread;
            cell.alternates.assign(solved.distinct_points.begin() + 1,
                                   solved.distinct_points.end());
            cell.values.resize(g.num_players);
            for (int i = 0; i < g.num_players; ++i)
                cell.values[i] = expected_payoff(space, cell.q[i], cell.strategies);
        }
    }
    return sol;
}

// Tangent of the limiting dynamics at a strategy profile: B(pi) - pi per
// player. Components of each tangent sum to zero.
inline std::vector<Mixed> ode_rhs(const ActionSpace& space,
                                  std::span<const std::vector<double>> q_rows,
                                  const std::vector<Mixed>& profile,
                                  const PerturbationSpec& perturb) {
    std::vector<Mixed> out(profile.size());
    for (int i = 0; i < space.players(); ++i) {
        const Mixed br = smoothed_best_response(space, q_rows[i], i, profile, perturb);
        out[i].resize(br.size());
        for (std::size_t c = 0; c < br.size(); ++c) out[i][c] = br[c] - profile[i][c];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Independent verification of a solution: residuals are recomputed from the
// stored data with the response primitives, never read back from the solver.
// ---------------------------------------------------------------------------

struct VerifyReport {
    double max_fp_residual = 0.0;
    double max_recursion_residual = 0.0;
    double max_terminal_deviation = 0.0;
    double max_value_deviation = 0.0;
    bool ok(double fp_tol = 1e-10, double rec_tol = 1e-12, double val_tol = 1e-12) const {
        return max_fp_residual <= fp_tol && max_recursion_residual <= rec_tol &&
               max_terminal_deviation == 0.0 && max_value_deviation <= val_tol;
    }
};

inline VerifyReport verify_solution(const StochasticGame& g, const FiniteHorizonSolution& sol,
                                    const PerturbationSpec& perturb) {
    const ActionSpace space = g.space();
    VerifyReport rep;
    const int H = sol.horizon;
    for (int k = 0; k < H; ++k) {
        for (int s = 0; s < g.num_states; ++s) {
            const auto& cell = sol.stages[k][s];
            // fixed point
            for (int i = 0; i < g.num_players; ++i) {
                const Mixed br =
                    smoothed_best_response(space, cell.q[i], i, cell.strategies, perturb);
                for (std::size_t c = 0; c < br.size(); ++c)
                    rep.max_fp_residual = std::max(
                        rep.max_fp_residual, std::abs(br[c] - cell.strategies[i][c]));
            }
            // recursion / terminal
            for (int i = 0; i < g.num_players; ++i) {
                for (std::int64_t p = 0; p < space.num_profiles(); ++p) {
                    if (k == H - 1) {
                        const double dev = std::abs(cell.q[i][p] - g.payoff(i, s, p));
                        rep.max_terminal_deviation = std::max(rep.max_terminal_deviation, dev);
                    } else {
                        double cont = 0.0;
                        for (int sp = 0; sp < g.num_states; ++sp)
                            cont += g.trans(s, p, sp) * sol.stages[k + 1][sp].values[i];
                        const double target = g.payoff(i, s, p) + g.discounts[i] * cont;
                        rep.max_recursion_residual =
                            std::max(rep.max_recursion_residual, std::abs(cell.q[i][p] - target));
                    }
                }
                const double ev = expected_payoff(space, cell.q[i], cell.strategies);
                rep.max_value_deviation =
                    std::max(rep.max_value_deviation, std::abs(ev - cell.values[i]));
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Record-vs-solution comparison.
// ---------------------------------------------------------------------------

struct CompareRow {
    std::int64_t epoch = 0;
    int m = 0;
    int state = 0;
    double pi_distance = 0.0;
    double q_residual = 0.0;
    bool ambiguous = false;  // the oracle's uniqueness certificate failed here
};

struct CompareResult {
    int max_m = 0;
    std::vector<CompareRow> rows;
    std::vector<std::int64_t> checkpoint_epochs;
    std::vector<double> checkpoint_max_pi;
    std::vector<double> checkpoint_max_q;
    double final_max_pi = 0.0;
    double final_max_q = 0.0;
    // median over the last five checkpoints / median over the first five;
    // NaN when fewer than ten checkpoints exist.
    double trend_ratio = std::numeric_limits<double>::quiet_NaN();
    bool ambiguous_any = false;
};

namespace detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Engine slot m holds the substage m before the epoch end, so it converges to
// solution stage horizon-1-m. max_m < 0 selects everything the solution
// covers (horizon - 1).
inline CompareResult compare(const RunRecord& rec, const FiniteHorizonSolution& sol,
                             int max_m = -1) {
    if (rec.num_players != sol.num_players || rec.num_states != sol.num_states ||
        rec.action_counts != sol.action_counts)
        throw IndexMismatchError("record and solution describe different games");
    if (max_m < 0) max_m = sol.horizon - 1;
    if (max_m > sol.horizon - 1)
        throw IndexMismatchError("solution horizon " + std::to_string(sol.horizon) +
                                 " too small for m up to " + std::to_string(max_m));
    if (rec.checkpoints.empty()) throw IndexMismatchError("record has no checkpoints");
    const std::size_t final_depth = rec.checkpoints.back().slots.size();
    if (static_cast<int>(final_depth) <= max_m)
        throw IndexMismatchError("record's final checkpoint holds slots up to m = " +
                                 std::to_string(final_depth == 0 ? -1 : static_cast<int>(final_depth) - 1) +
                                 ", need m = " + std::to_string(max_m));

    CompareResult out;
    out.max_m = max_m;
    for (const auto& cp : rec.checkpoints) {
        double cp_max_pi = 0.0;
        double cp_max_q = 0.0;
        const int depth = static_cast<int>(cp.slots.size());
        for (int m = 0; m <= max_m && m < depth; ++m) {
            const int k = sol.horizon - 1 - m;
            for (int s = 0; s < rec.num_states; ++s) {
                const SlotEntry& entry = cp.slots[m][s];
                const StageStateSolution& cell = sol.stages[k][s];
                CompareRow row;
                row.epoch = cp.epoch;
                row.m = m;
                row.state = s;
                row.ambiguous = !cell.unique;
                out.ambiguous_any = out.ambiguous_any || row.ambiguous;

                auto distance_to = [&](const std::vector<Mixed>& target) {
                    double d = 0.0;
                    for (int j = 0; j < rec.num_players; ++j)
                        for (std::size_t c = 0; c < target[j].size(); ++c)
                            d = std::max(d, std::abs(entry.beliefs[j][c] - target[j][c]));
                    return d;
                };
                row.pi_distance = distance_to(cell.strategies);
                for (const auto& alt : cell.alternates)
                    row.pi_distance = std::min(row.pi_distance, distance_to(alt));

                for (int i = 0; i < rec.num_players; ++i)
                    for (std::size_t p = 0; p < cell.q[i].size(); ++p)
                        row.q_residual = std::max(
                            row.q_residual, std::abs(entry.q[i][p] - cell.q[i][p]));

                cp_max_pi = std::max(cp_max_pi, row.pi_distance);
                cp_max_q = std::max(cp_max_q, row.q_residual);
                out.rows.push_back(std::move(row));
            }
        }
        out.checkpoint_epochs.push_back(cp.epoch);
        out.checkpoint_max_pi.push_back(cp_max_pi);
        out.checkpoint_max_q.push_back(cp_max_q);
    }
    out.final_max_pi = out.checkpoint_max_pi.back();
    out.final_max_q = out.checkpoint_max_q.back();
    if (out.checkpoint_max_pi.size() >= 10) {
        std::vector<double> first(out.checkpoint_max_pi.begin(),
                                  out.checkpoint_max_pi.begin() + 5);
        std::vector<double> last(out.checkpoint_max_pi.end() - 5,
                                 out.checkpoint_max_pi.end());
        out.trend_ratio = detail::median(last) / detail::median(first);
    }
    return out;
}

}  // namespace sfpsg
