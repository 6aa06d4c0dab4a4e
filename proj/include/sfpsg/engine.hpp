#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sfpsg/game.hpp"
#include "sfpsg/response.hpp"
#include "sfpsg/rng.hpp"
#include "sfpsg/schedule.hpp"

namespace sfpsg {

// ---------------------------------------------------------------------------
// The learning loop plays the infinite game in epochs: epoch t has t
// substages, each a one-shot play of the auxiliary game for the current
// state. The belief bank is keyed by m = (epoch length) - (substage index) =
// distance from the last substage, because the substage that is m before the
// end is the same auxiliary game in every epoch. Slot m is created when epoch
// m+1 starts and is then revisited exactly once per epoch.
//
// Per (m, state) the bank holds: one shared belief per player (all players
// observe the same actions, use the same step size, and initialize uniformly,
// so their belief copies coincide; storing one is exact), one Q estimate per
// player, one continuation value per player, and the update counter that
// drives both step-size schedules.
// ---------------------------------------------------------------------------

struct SlotEntry {
    std::vector<Mixed> beliefs;             // per player
    std::vector<std::vector<double>> q;     // per player, over profiles
    std::vector<double> v;                  // per player
    std::int64_t count = 0;

    bool operator==(const SlotEntry&) const = default;
};

struct LearnerState {
    std::vector<std::vector<SlotEntry>> slots;  // [m][state]
    std::int64_t completed_epochs = 0;
    int current_state = 0;
};

// Fresh entry for a newly created slot: uniform beliefs, Q = stage payoffs,
// v = expected stage payoff under uniform joint play.
inline SlotEntry make_initial_entry(const StochasticGame& g, int s) {
    SlotEntry e;
    e.beliefs.resize(g.num_players);
    for (int j = 0; j < g.num_players; ++j)
        e.beliefs[j].assign(g.action_counts[j], 1.0 / g.action_counts[j]);
    e.q.resize(g.num_players);
    e.v.resize(g.num_players);
    const std::int64_t profiles = g.space().num_profiles();
    for (int i = 0; i < g.num_players; ++i) {
        e.q[i] = g.payoffs[i][s];
        double mean = 0.0;
        for (std::int64_t p = 0; p < profiles; ++p) mean += g.payoff(i, s, p);
        e.v[i] = mean / static_cast<double>(profiles);
    }
    return e;
}

inline std::vector<SlotEntry> make_initial_slot(const StochasticGame& g) {
    std::vector<SlotEntry> slot;
    slot.reserve(g.num_states);
    for (int s = 0; s < g.num_states; ++s) slot.push_back(make_initial_entry(g, s));
    return slot;
}

// ---------------------------------------------------------------------------
// One stochastic fictitious play iteration on a single auxiliary game.
// Each player responds to the shared beliefs with her own Q estimate, actions
// are realized, beliefs move toward the realized pure actions, and the value
// is the unperturbed expected payoff of the response. Following the printed
// procedure, the value is evaluated after the belief update; the pre-update
// variant sits behind a flag.
// ---------------------------------------------------------------------------

struct SfpStepOutcome {
    std::vector<int> actions;
    std::int64_t profile = 0;
    std::vector<double> values;  // per player
};

inline SfpStepOutcome sfp_step(const ActionSpace& space, std::int64_t k,
                               std::span<const std::vector<double>> q_rows,
                               std::vector<Mixed>& beliefs, const PerturbationSpec& perturb,
                               const StepSchedule& alpha, SplitMix64& rng,
                               bool value_uses_pre_update_beliefs = false,
                               const std::vector<int>* forced_actions = nullptr) {
    const int n = space.players();
    std::vector<Mixed> responses(n);
    for (int i = 0; i < n; ++i)
        responses[i] = smoothed_best_response(space, q_rows[i], i, beliefs, perturb);

    SfpStepOutcome out;
    out.actions.resize(n);
    if (forced_actions) {
        out.actions = *forced_actions;
    } else {
        for (int i = 0; i < n; ++i) out.actions[i] = sample_discrete(responses[i], rng);
    }
    out.profile = space.index(out.actions);

    std::vector<Mixed> pre_beliefs;
    if (value_uses_pre_update_beliefs) pre_beliefs = beliefs;

    const double a = alpha.value(k);
    for (int j = 0; j < n; ++j)
        for (int c = 0; c < space.counts[j]; ++c) {
            const double target = (c == out.actions[j]) ? 1.0 : 0.0;
            beliefs[j][c] += a * (target - beliefs[j][c]);
        }

    const std::vector<Mixed>& eval = value_uses_pre_update_beliefs ? pre_beliefs : beliefs;
    out.values.resize(n);
    std::vector<Mixed> strategies(n);
    for (int i = 0; i < n; ++i) {
        strategies = eval;
        strategies[i] = responses[i];
        out.values[i] = expected_payoff(space, q_rows[i], strategies);
    }
    return out;
}

// Model-based Q step toward the one-step Bellman target built from the true
// payoffs and transitions and the supplied next-substage values.
inline std::vector<double> q_update(const ActionSpace& space, std::int64_t k, int s,
                                    std::span<const double> q_row,
                                    std::span<const double> v_next,
                                    const StochasticGame& g, int player,
                                    const StepSchedule& beta) {
    require_profile_tensor(space, q_row, "q_update");
    if (static_cast<int>(v_next.size()) != g.num_states)
        throw ShapeError("q_update: v_next needs one value per state");
    const double b = beta.value(k);
    const double gamma = g.discounts[player];
    std::vector<double> out(q_row.begin(), q_row.end());
    const std::int64_t profiles = space.num_profiles();
    for (std::int64_t p = 0; p < profiles; ++p) {
        double cont = 0.0;
        for (int sp = 0; sp < g.num_states; ++sp) cont += g.trans(s, p, sp) * v_next[sp];
        const double target = g.payoff(player, s, p) + gamma * cont;
        out[p] += b * (target - out[p]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Epoch driver.
// ---------------------------------------------------------------------------

enum class StatePolicy { Continue, Reset };

struct RunConfig {
    std::int64_t epochs = 100;
    double tau = 1.0;
    double alpha_exponent = 0.7;
    double beta_exponent = 0.6;
    std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
    int max_recorded_m = -1;            // checkpoint slot depth cap; -1: all
    StatePolicy state_policy = StatePolicy::Continue;
    int reset_state = 0;
    int initial_state = 0;
    bool value_uses_pre_update_beliefs = false;
    std::vector<std::string> metrics;  // "br_residual", "belief_drift"
};

struct Schedules {
    StepSchedule alpha;
    StepSchedule beta;
};

inline Schedules make_schedules(const RunConfig& cfg) {
    return {StepSchedule::alpha(cfg.alpha_exponent), StepSchedule::beta(cfg.beta_exponent)};
}

// One realized stage: the state it was played in and the joint action profile.
// Epoch/substage indices are implied by position (epoch t contributes t
// entries, in substage order).
struct StageStep {
    int state = 0;
    std::int64_t profile = 0;
};

namespace detail {

// One substage at slot m. Actions are sampled unless forced (replay); the
// caller advances the state afterwards. Mutates only slots[m][current_state].
inline StageStep run_substage(LearnerState& ls, const StochasticGame& g,
                              const RunConfig& cfg, const Schedules& sch, int m,
                              SplitMix64& rng, const std::vector<int>* forced_actions) {
    const ActionSpace space = g.space();
    const int s = ls.current_state;
    SlotEntry& entry = ls.slots[m][s];
    const std::int64_t k = entry.count;

    const auto outcome =
        sfp_step(space, k, entry.q, entry.beliefs, PerturbationSpec{PerturbationSpec::Kind::Entropy, cfg.tau},
                 sch.alpha, rng, cfg.value_uses_pre_update_beliefs, forced_actions);
    entry.v = outcome.values;

    if (m > 0) {
        std::vector<double> v_next(g.num_states);
        for (int i = 0; i < g.num_players; ++i) {
            for (int sp = 0; sp < g.num_states; ++sp) v_next[sp] = ls.slots[m - 1][sp].v[i];
            entry.q[i] = q_update(space, k, s, entry.q[i], v_next, g, i, sch.beta);
        }
    }
    entry.count += 1;
    return {s, outcome.profile};
}

}  // namespace detail

// Runs epoch t = completed_epochs + 1 (t substages), sampling actions and
// state transitions from the rng. Appends realized stages to the log if given.
inline void run_epoch(LearnerState& ls, const StochasticGame& g, const RunConfig& cfg,
                      const Schedules& sch, SplitMix64& rng,
                      std::vector<StageStep>* log = nullptr) {
    const std::int64_t t = ls.completed_epochs + 1;
    ls.slots.push_back(make_initial_slot(g));
    for (std::int64_t ell = 1; ell <= t; ++ell) {
        const int m = static_cast<int>(t - ell);
        const StageStep step = detail::run_substage(ls, g, cfg, sch, m, rng, nullptr);
        if (log) log->push_back(step);
        ls.current_state =
            sample_discrete(g.trans_row(step.state, step.profile), rng);
    }
    ls.completed_epochs = t;
}

// Same bank evolution, but actions and visited states come from a recorded
// log instead of the rng. Used to check that a record reproduces exactly.
inline void replay_epoch(LearnerState& ls, const StochasticGame& g, const RunConfig& cfg,
                         const Schedules& sch, std::span<const StageStep> log,
                         std::size_t& cursor) {
    const std::int64_t t = ls.completed_epochs + 1;
    ls.slots.push_back(make_initial_slot(g));
    const ActionSpace space = g.space();
    SplitMix64 unused(0);
    for (std::int64_t ell = 1; ell <= t; ++ell) {
        if (cursor >= log.size()) throw DomainError("replay: log shorter than epochs");
        const StageStep& step = log[cursor++];
        ls.current_state = step.state;
        const int m = static_cast<int>(t - ell);
        std::vector<int> actions = space.decode(step.profile);
        detail::run_substage(ls, g, cfg, sch, m, unused, &actions);
        if (cursor < log.size()) ls.current_state = log[cursor].state;
    }
    ls.completed_epochs = t;
}

// ---------------------------------------------------------------------------
// Full runs and trajectory records.
// ---------------------------------------------------------------------------

struct Checkpoint {
    std::int64_t epoch = 0;
    int current_state = 0;
    std::vector<std::vector<SlotEntry>> slots;  // [m][state], m capped by config
};

struct RunRecord {
    std::uint64_t seed = 0;
    RunConfig config;
    int num_players = 0;
    int num_states = 0;
    std::vector<int> action_counts;
    std::vector<StageStep> log;
    std::vector<Checkpoint> checkpoints;
    std::map<std::string, std::vector<double>> metric_series;
    std::uint64_t log_hash = 0;
    std::int64_t epochs_run = 0;
};

namespace detail {

inline Checkpoint snapshot(const LearnerState& ls, const RunConfig& cfg, std::int64_t epoch) {
    Checkpoint cp;
    cp.epoch = epoch;
    cp.current_state = ls.current_state;
    const std::size_t depth =
        cfg.max_recorded_m < 0
            ? ls.slots.size()
            : std::min<std::size_t>(ls.slots.size(), static_cast<std::size_t>(cfg.max_recorded_m) + 1);
    cp.slots.assign(ls.slots.begin(), ls.slots.begin() + static_cast<std::ptrdiff_t>(depth));
    return cp;
}

inline double bank_br_residual(const LearnerState& ls, const StochasticGame& g,
                               const RunConfig& cfg) {
    const ActionSpace space = g.space();
    const PerturbationSpec perturb{PerturbationSpec::Kind::Entropy, cfg.tau};
    double worst = 0.0;
    for (const auto& slot : ls.slots)
        for (int s = 0; s < g.num_states; ++s) {
            const SlotEntry& e = slot[s];
            for (int i = 0; i < g.num_players; ++i) {
                const Mixed br = smoothed_best_response(space, e.q[i], i, e.beliefs, perturb);
                for (int c = 0; c < space.counts[i]; ++c)
                    worst = std::max(worst, std::abs(br[c] - e.beliefs[i][c]));
            }
        }
    return worst;
}

inline double checkpoint_drift(const Checkpoint& prev, const Checkpoint& cur) {
    double worst = 0.0;
    const std::size_t depth = std::min(prev.slots.size(), cur.slots.size());
    for (std::size_t m = 0; m < depth; ++m)
        for (std::size_t s = 0; s < cur.slots[m].size(); ++s)
            for (std::size_t j = 0; j < cur.slots[m][s].beliefs.size(); ++j)
                for (std::size_t c = 0; c < cur.slots[m][s].beliefs[j].size(); ++c)
                    worst = std::max(worst, std::abs(cur.slots[m][s].beliefs[j][c] -
                                                     prev.slots[m][s].beliefs[j][c]));
    return worst;
}

}  // namespace detail

// Simulates epochs 1..config.epochs. The game is fully validated first; the
// record is deterministic in (game, config, seed).
inline RunRecord run(const StochasticGame& g, const RunConfig& cfg, std::uint64_t seed) {
    const auto report = validate_game(g);
    if (!report.ok) throw DomainError("invalid game: " + report.summary());
    for (const auto& name : cfg.metrics)
        if (name != "br_residual" && name != "belief_drift")
            throw DomainError("unknown metric: " + name);
    if (cfg.initial_state < 0 || cfg.initial_state >= g.num_states)
        throw DomainError("initial state out of range");
    if (cfg.state_policy == StatePolicy::Reset &&
        (cfg.reset_state < 0 || cfg.reset_state >= g.num_states))
        throw DomainError("reset state out of range");
    if (!(cfg.tau > 0.0)) throw DomainError("temperature must be strictly positive");
    if (cfg.epochs < 1) throw DomainError("need at least one epoch");

    const Schedules sch = make_schedules(cfg);
    SplitMix64 rng = derive(seed, Stream::Run);

    RunRecord rec;
    rec.seed = seed;
    rec.config = cfg;
    rec.num_players = g.num_players;
    rec.num_states = g.num_states;
    rec.action_counts = g.action_counts;
    rec.log.reserve(static_cast<std::size_t>(cfg.epochs * (cfg.epochs + 1) / 2));

    LearnerState ls;
    ls.current_state = cfg.initial_state;

    for (std::int64_t t = 1; t <= cfg.epochs; ++t) {
        if (t > 1 && cfg.state_policy == StatePolicy::Reset)
            ls.current_state = cfg.reset_state;
        run_epoch(ls, g, cfg, sch, rng, &rec.log);
        const bool scheduled = cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0;
        if (scheduled || t == cfg.epochs) {
            rec.checkpoints.push_back(detail::snapshot(ls, cfg, t));
            for (const auto& name : cfg.metrics) {
                if (name == "br_residual")
                    rec.metric_series[name].push_back(detail::bank_br_residual(ls, g, cfg));
                else if (name == "belief_drift")
                    rec.metric_series[name].push_back(
                        rec.checkpoints.size() < 2
                            ? 0.0
                            : detail::checkpoint_drift(
                                  rec.checkpoints[rec.checkpoints.size() - 2],
                                  rec.checkpoints.back()));
            }
        }
    }
    rec.epochs_run = cfg.epochs;

    Fnv1a fnv;
    for (const auto& step : rec.log) {
        fnv.add(static_cast<std::uint64_t>(step.state));
        fnv.add(static_cast<std::uint64_t>(step.profile));
    }
    rec.log_hash = fnv.value();
    return rec;
}

// Reconstructs the bank from a recorded stage log; checkpoints are taken at
// the same cadence so they can be compared entry-for-entry with the record.
inline std::vector<Checkpoint> replay(const StochasticGame& g, const RunConfig& cfg,
                                      std::span<const StageStep> log) {
    const Schedules sch = make_schedules(cfg);
    LearnerState ls;
    ls.current_state = log.empty() ? cfg.initial_state : log.front().state;
    std::vector<Checkpoint> checkpoints;
    std::size_t cursor = 0;
    for (std::int64_t t = 1; t <= cfg.epochs; ++t) {
        replay_epoch(ls, g, cfg, sch, log, cursor);
        const bool scheduled = cfg.checkpoint_every > 0 && t % cfg.checkpoint_every == 0;
        if (scheduled || t == cfg.epochs)
            checkpoints.push_back(detail::snapshot(ls, cfg, t));
    }
    return checkpoints;
}

// Repeated-game reduction: iterate the fictitious-play step on the stage game
// of a single-state game for a fixed number of update counts. Returns the
// final beliefs (one per player).
inline std::vector<Mixed> run_repeated(const StochasticGame& g, std::int64_t updates,
                                       const PerturbationSpec& perturb,
                                       const StepSchedule& alpha, std::uint64_t seed) {
    if (g.num_states != 1) throw DomainError("run_repeated needs a single-state game");
    const ActionSpace space = g.space();
    SplitMix64 rng = derive(seed, Stream::Run);
    std::vector<Mixed> beliefs(g.num_players);
    for (int j = 0; j < g.num_players; ++j)
        beliefs[j].assign(g.action_counts[j], 1.0 / g.action_counts[j]);
    std::vector<std::vector<double>> q_rows(g.num_players);
    for (int i = 0; i < g.num_players; ++i) q_rows[i] = g.payoffs[i][0];
    for (std::int64_t k = 0; k < updates; ++k)
        sfp_step(space, k, q_rows, beliefs, perturb, alpha, rng);
    return beliefs;
}

}  // namespace sfpsg
