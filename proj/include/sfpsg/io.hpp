#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sfpsg/engine.hpp"
#include "sfpsg/game.hpp"
#include "sfpsg/generator.hpp"
#include "sfpsg/oracle.hpp"

namespace sfpsg {

using nlohmann::json;

// Shortest round-trip decimal form, so emitted files are stable and diffable.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    out << text;
}

namespace detail {

// Nested-array tensor of fixed dims; ragged input is rejected.
inline void read_nested(const json& node, std::span<const int> dims, std::size_t level,
                        std::vector<double>& out, const char* what) {
    if (level == dims.size()) {
        if (!node.is_number()) throw ParseError(std::string(what) + ": expected a number");
        out.push_back(node.get<double>());
        return;
    }
    if (!node.is_array() || static_cast<int>(node.size()) != dims[level])
        throw ParseError(std::string(what) + ": expected an array of length " +
                         std::to_string(dims[level]) + " at depth " + std::to_string(level));
    for (const auto& child : node) read_nested(child, dims, level + 1, out, what);
}

inline json write_nested(std::span<const double> flat, std::span<const int> dims,
                         std::size_t level, std::size_t& cursor) {
    if (level == dims.size()) return flat[cursor++];
    json arr = json::array();
    for (int i = 0; i < dims[level]; ++i)
        arr.push_back(write_nested(flat, dims, level + 1, cursor));
    return arr;
}

inline std::vector<int> tensor_dims(const StochasticGame& g, bool with_next_state) {
    std::vector<int> dims = g.action_counts;
    if (with_next_state) dims.push_back(g.num_states);
    return dims;
}

template <typename T>
T require_key(const json& j, const char* key, const char* what) {
    if (!j.contains(key))
        throw ParseError(std::string(what) + ": missing key \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ParseError(std::string(what) + ": bad value for \"" + key + "\": " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Game files.
// ---------------------------------------------------------------------------

inline StochasticGame game_from_json(const json& j) {
    StochasticGame g;
    g.num_players = detail::require_key<int>(j, "players", "game");
    g.num_states = detail::require_key<int>(j, "states", "game");
    g.action_counts = detail::require_key<std::vector<int>>(j, "actions", "game");
    g.discounts = detail::require_key<std::vector<double>>(j, "discounts", "game");
    g.controllers = detail::require_key<std::vector<int>>(j, "controllers", "game");
    if (g.num_players < 2) throw ParseError("game: players must be >= 2");
    if (g.num_states < 1) throw ParseError("game: states must be >= 1");
    if (static_cast<int>(g.action_counts.size()) != g.num_players)
        throw ParseError("game: actions needs one entry per player");

    const auto pay_dims = detail::tensor_dims(g, false);
    if (!j.contains("payoffs") || !j.at("payoffs").is_array() ||
        static_cast<int>(j.at("payoffs").size()) != g.num_players)
        throw ParseError("game: payoffs needs one bank per player");
    g.payoffs.resize(g.num_players);
    for (int i = 0; i < g.num_players; ++i) {
        const auto& bank = j.at("payoffs").at(i);
        if (!bank.is_array() || static_cast<int>(bank.size()) != g.num_states)
            throw ParseError("game: payoffs needs one tensor per state");
        g.payoffs[i].resize(g.num_states);
        for (int s = 0; s < g.num_states; ++s) {
            g.payoffs[i][s].clear();
            detail::read_nested(bank.at(s), pay_dims, 0, g.payoffs[i][s], "game payoffs");
        }
    }

    const auto trans_dims = detail::tensor_dims(g, true);
    if (!j.contains("transition") || !j.at("transition").is_array() ||
        static_cast<int>(j.at("transition").size()) != g.num_states)
        throw ParseError("game: transition needs one block per state");
    g.transition.resize(g.num_states);
    for (int s = 0; s < g.num_states; ++s) {
        g.transition[s].clear();
        detail::read_nested(j.at("transition").at(s), trans_dims, 0, g.transition[s],
                            "game transition");
    }

    require_consistent_shapes(g);
    const auto stoch = check_row_stochastic(g);
    if (!stoch.ok) throw DomainError("game: " + stoch.detail);
    return g;
}

inline json game_to_json(const StochasticGame& g) {
    json j;
    j["players"] = g.num_players;
    j["states"] = g.num_states;
    j["actions"] = g.action_counts;
    const auto pay_dims = detail::tensor_dims(g, false);
    json payoffs = json::array();
    for (int i = 0; i < g.num_players; ++i) {
        json bank = json::array();
        for (int s = 0; s < g.num_states; ++s) {
            std::size_t cursor = 0;
            bank.push_back(detail::write_nested(g.payoffs[i][s], pay_dims, 0, cursor));
        }
        payoffs.push_back(std::move(bank));
    }
    j["payoffs"] = std::move(payoffs);
    const auto trans_dims = detail::tensor_dims(g, true);
    json transition = json::array();
    for (int s = 0; s < g.num_states; ++s) {
        std::size_t cursor = 0;
        transition.push_back(detail::write_nested(g.transition[s], trans_dims, 0, cursor));
    }
    j["transition"] = std::move(transition);
    j["discounts"] = g.discounts;
    j["controllers"] = g.controllers;
    return j;
}

inline StochasticGame load_game(const std::string& path) {
    return game_from_json(read_json_file(path));
}

inline void save_game(const StochasticGame& g, const std::string& path) {
    write_text_file(path, game_to_json(g).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Generator parameter files.
// ---------------------------------------------------------------------------

inline StageStructure::Tag structure_from_string(const std::string& s) {
    if (s == "zero_sum") return StageStructure::Tag::ZeroSum;
    if (s == "identical_interest" || s == "identical")
        return StageStructure::Tag::IdenticalInterest;
    throw ParseError("unknown structure tag: " + s);
}

inline GeneratorParams generator_params_from_json(const json& j) {
    GeneratorParams p;
    p.players = detail::require_key<int>(j, "players", "generator spec");
    p.states = detail::require_key<int>(j, "states", "generator spec");
    if (j.contains("actions")) p.actions = j.at("actions").get<std::vector<int>>();
    if (j.contains("structures")) {
        const auto& st = j.at("structures");
        if (st.is_string()) {
            p.structures = {structure_from_string(st.get<std::string>())};
        } else if (st.is_array()) {
            for (const auto& tag : st)
                p.structures.push_back(structure_from_string(tag.get<std::string>()));
        } else {
            throw ParseError("generator spec: structures must be a string or array");
        }
    }
    if (j.contains("payoff_range")) {
        const auto range = j.at("payoff_range").get<std::vector<double>>();
        if (range.size() != 2) throw ParseError("generator spec: payoff_range needs [lo, hi]");
        p.payoff_lo = range[0];
        p.payoff_hi = range[1];
    }
    if (j.contains("discounts")) p.discounts = j.at("discounts").get<std::vector<double>>();
    if (j.contains("controllers")) {
        const auto& c = j.at("controllers");
        if (c.is_string()) {
            const auto s = c.get<std::string>();
            if (s == "round_robin")
                p.controller_policy = GeneratorParams::ControllerPolicy::RoundRobin;
            else if (s == "random")
                p.controller_policy = GeneratorParams::ControllerPolicy::Random;
            else
                throw ParseError("generator spec: unknown controller policy " + s);
        } else if (c.is_array()) {
            p.controller_policy = GeneratorParams::ControllerPolicy::List;
            p.controller_list = c.get<std::vector<int>>();
        } else {
            throw ParseError("generator spec: controllers must be a string or array");
        }
    }
    if (j.contains("successors")) p.successors = j.at("successors").get<int>();
    if (j.contains("absorbing_states"))
        p.absorbing_states = j.at("absorbing_states").get<std::vector<int>>();
    if (j.contains("max_attempts")) p.max_attempts = j.at("max_attempts").get<int>();
    return p;
}

inline GeneratorParams load_generator_params(const std::string& path) {
    return generator_params_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Run configuration and experiment manifests.
// ---------------------------------------------------------------------------

inline RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.epochs = detail::require_key<std::int64_t>(j, "epochs", "run config");
    cfg.tau = detail::require_key<double>(j, "tau", "run config");
    if (j.contains("alpha_exponent")) cfg.alpha_exponent = j.at("alpha_exponent").get<double>();
    if (j.contains("beta_exponent")) cfg.beta_exponent = j.at("beta_exponent").get<double>();
    if (j.contains("checkpoint_every"))
        cfg.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
    if (j.contains("max_recorded_m")) cfg.max_recorded_m = j.at("max_recorded_m").get<int>();
    if (j.contains("initial_state")) cfg.initial_state = j.at("initial_state").get<int>();
    if (j.contains("value_uses_pre_update_beliefs"))
        cfg.value_uses_pre_update_beliefs = j.at("value_uses_pre_update_beliefs").get<bool>();
    if (j.contains("metrics")) cfg.metrics = j.at("metrics").get<std::vector<std::string>>();
    if (j.contains("state_policy")) {
        const auto s = j.at("state_policy").get<std::string>();
        if (s == "continue") {
            cfg.state_policy = StatePolicy::Continue;
        } else if (s.rfind("reset:", 0) == 0) {
            cfg.state_policy = StatePolicy::Reset;
            try {
                cfg.reset_state = std::stoi(s.substr(6));
            } catch (...) {
                throw ParseError("run config: bad state_policy " + s);
            }
        } else {
            throw ParseError("run config: state_policy must be \"continue\" or \"reset:<state>\"");
        }
    }
    return cfg;
}

inline json run_config_to_json(const RunConfig& cfg) {
    json j;
    j["epochs"] = cfg.epochs;
    j["tau"] = cfg.tau;
    j["alpha_exponent"] = cfg.alpha_exponent;
    j["beta_exponent"] = cfg.beta_exponent;
    j["checkpoint_every"] = cfg.checkpoint_every;
    j["max_recorded_m"] = cfg.max_recorded_m;
    j["initial_state"] = cfg.initial_state;
    j["value_uses_pre_update_beliefs"] = cfg.value_uses_pre_update_beliefs;
    j["metrics"] = cfg.metrics;
    j["state_policy"] = cfg.state_policy == StatePolicy::Continue
                            ? std::string("continue")
                            : ("reset:" + std::to_string(cfg.reset_state));
    return j;
}

struct Manifest {
    std::string game_path;           // one of game_path / generator is set
    bool has_generator = false;
    GeneratorParams generator;
    std::uint64_t generator_seed = 0;
    RunConfig run;
    bool has_oracle = false;
    int oracle_horizon = 0;
    std::vector<std::uint64_t> seeds;
    std::string out_dir;
};

inline Manifest manifest_from_json(const json& j) {
    Manifest m;
    if (j.contains("game")) m.game_path = j.at("game").get<std::string>();
    if (j.contains("generator")) {
        m.has_generator = true;
        m.generator = generator_params_from_json(j.at("generator"));
        if (j.contains("generator_seed"))
            m.generator_seed = j.at("generator_seed").get<std::uint64_t>();
    }
    if (m.game_path.empty() && !m.has_generator)
        throw ParseError("manifest: needs \"game\" or \"generator\"");
    if (!m.game_path.empty() && m.has_generator)
        throw ParseError("manifest: give either \"game\" or \"generator\", not both");
    if (!j.contains("run")) throw ParseError("manifest: missing \"run\" config");
    m.run = run_config_from_json(j.at("run"));
    if (j.contains("oracle")) {
        m.has_oracle = true;
        m.oracle_horizon = detail::require_key<int>(j.at("oracle"), "horizon", "manifest oracle");
    }
    if (j.contains("seeds")) {
        m.seeds = detail::require_key<std::vector<std::uint64_t>>(j, "seeds", "manifest");
    } else if (j.at("run").contains("seed")) {
        m.seeds = {j.at("run").at("seed").get<std::uint64_t>()};
    }
    if (m.seeds.empty()) throw ParseError("manifest: needs \"seeds\" (or a run \"seed\")");
    for (std::size_t a = 0; a < m.seeds.size(); ++a)
        for (std::size_t b = a + 1; b < m.seeds.size(); ++b)
            if (m.seeds[a] == m.seeds[b]) throw ParseError("manifest: seeds must be distinct");
    if (j.contains("out_dir")) m.out_dir = j.at("out_dir").get<std::string>();
    return m;
}

inline Manifest load_manifest(const std::string& path) {
    return manifest_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Solution files.
// ---------------------------------------------------------------------------

inline json solution_to_json(const FiniteHorizonSolution& sol) {
    json j;
    j["horizon"] = sol.horizon;
    j["tau"] = sol.tau;
    j["perturbation"] = "entropy";
    j["players"] = sol.num_players;
    j["states"] = sol.num_states;
    j["actions"] = sol.action_counts;
    j["max_abs_payoff"] = sol.max_abs_payoff;
    json stages = json::array();
    for (int k = 0; k < sol.horizon; ++k) {
        json per_state = json::array();
        for (const auto& cell : sol.stages[k]) {
            json c;
            c["strategies"] = cell.strategies;
            c["q"] = cell.q;
            c["values"] = cell.values;
            c["fp_residual"] = cell.fp_residual;
            c["unique"] = cell.unique;
            c["multistart_spread"] = cell.multistart_spread;
            c["equiv_residual"] = cell.equiv_residual;
            c["alternates"] = cell.alternates;
            per_state.push_back(std::move(c));
        }
        stages.push_back(std::move(per_state));
    }
    j["stages"] = std::move(stages);
    return j;
}

inline FiniteHorizonSolution solution_from_json(const json& j) {
    FiniteHorizonSolution sol;
    sol.horizon = detail::require_key<int>(j, "horizon", "solution");
    sol.tau = detail::require_key<double>(j, "tau", "solution");
    sol.num_players = detail::require_key<int>(j, "players", "solution");
    sol.num_states = detail::require_key<int>(j, "states", "solution");
    sol.action_counts = detail::require_key<std::vector<int>>(j, "actions", "solution");
    sol.max_abs_payoff = detail::require_key<double>(j, "max_abs_payoff", "solution");
    if (!j.contains("stages") || !j.at("stages").is_array() ||
        static_cast<int>(j.at("stages").size()) != sol.horizon)
        throw ParseError("solution: stages must hold one entry per horizon step");
    sol.stages.resize(sol.horizon);
    for (int k = 0; k < sol.horizon; ++k) {
        const auto& per_state = j.at("stages").at(k);
        if (!per_state.is_array() || static_cast<int>(per_state.size()) != sol.num_states)
            throw ParseError("solution: each stage needs one cell per state");
        sol.stages[k].resize(sol.num_states);
        for (int s = 0; s < sol.num_states; ++s) {
            const auto& c = per_state.at(s);
            auto& cell = sol.stages[k][s];
            cell.strategies = detail::require_key<std::vector<Mixed>>(c, "strategies", "solution");
            cell.q = detail::require_key<std::vector<std::vector<double>>>(c, "q", "solution");
            cell.values = detail::require_key<std::vector<double>>(c, "values", "solution");
            cell.fp_residual = detail::require_key<double>(c, "fp_residual", "solution");
            cell.unique = detail::require_key<bool>(c, "unique", "solution");
            cell.multistart_spread =
                detail::require_key<double>(c, "multistart_spread", "solution");
            cell.equiv_residual = detail::require_key<double>(c, "equiv_residual", "solution");
            if (c.contains("alternates"))
                cell.alternates = c.at("alternates").get<std::vector<std::vector<Mixed>>>();
        }
    }
    return sol;
}

inline void save_solution(const FiniteHorizonSolution& sol, const std::string& path) {
    write_text_file(path, solution_to_json(sol).dump(2) + "\n");
}

inline FiniteHorizonSolution load_solution(const std::string& path) {
    return solution_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Run records.
// ---------------------------------------------------------------------------

inline json record_to_json(const RunRecord& rec) {
    json j;
    j["seed"] = rec.seed;
    j["config"] = run_config_to_json(rec.config);
    j["players"] = rec.num_players;
    j["states"] = rec.num_states;
    j["actions"] = rec.action_counts;
    j["epochs_run"] = rec.epochs_run;
    j["stages_run"] = rec.log.size();
    j["log_hash"] = rec.log_hash;
    json cps = json::array();
    for (const auto& cp : rec.checkpoints) {
        json c;
        c["epoch"] = cp.epoch;
        c["current_state"] = cp.current_state;
        json slots = json::array();
        for (const auto& slot : cp.slots) {
            json per_state = json::array();
            for (const auto& e : slot) {
                json entry;
                entry["beliefs"] = e.beliefs;
                entry["q"] = e.q;
                entry["v"] = e.v;
                entry["count"] = e.count;
                per_state.push_back(std::move(entry));
            }
            slots.push_back(std::move(per_state));
        }
        c["slots"] = std::move(slots);
        cps.push_back(std::move(c));
    }
    j["checkpoints"] = std::move(cps);
    j["metrics"] = rec.metric_series;
    return j;
}

inline RunRecord record_from_json(const json& j) {
    RunRecord rec;
    rec.seed = detail::require_key<std::uint64_t>(j, "seed", "record");
    rec.config = run_config_from_json(j.at("config"));
    rec.num_players = detail::require_key<int>(j, "players", "record");
    rec.num_states = detail::require_key<int>(j, "states", "record");
    rec.action_counts = detail::require_key<std::vector<int>>(j, "actions", "record");
    rec.epochs_run = detail::require_key<std::int64_t>(j, "epochs_run", "record");
    rec.log_hash = detail::require_key<std::uint64_t>(j, "log_hash", "record");
    for (const auto& c : j.at("checkpoints")) {
        Checkpoint cp;
        cp.epoch = detail::require_key<std::int64_t>(c, "epoch", "record checkpoint");
        cp.current_state = detail::require_key<int>(c, "current_state", "record checkpoint");
        for (const auto& slot : c.at("slots")) {
            std::vector<SlotEntry> per_state;
            for (const auto& e : slot) {
                SlotEntry entry;
                entry.beliefs = detail::require_key<std::vector<Mixed>>(e, "beliefs", "record");
                entry.q =
                    detail::require_key<std::vector<std::vector<double>>>(e, "q", "record");
                entry.v = detail::require_key<std::vector<double>>(e, "v", "record");
                entry.count = detail::require_key<std::int64_t>(e, "count", "record");
                per_state.push_back(std::move(entry));
            }
            cp.slots.push_back(std::move(per_state));
        }
        rec.checkpoints.push_back(std::move(cp));
    }
    if (j.contains("metrics"))
        rec.metric_series =
            j.at("metrics").get<std::map<std::string, std::vector<double>>>();
    return rec;
}

inline void save_record(const RunRecord& rec, const std::string& path) {
    write_text_file(path, record_to_json(rec).dump() + "\n");
}

inline RunRecord load_record(const std::string& path) {
    return record_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// CSV outputs. Columns are fixed and versioned in the header comment.
// ---------------------------------------------------------------------------

// One row per checkpoint per (m, state, player). The strategy column joins
// the belief about that player with ';'. Distance columns are filled when a
// solution is supplied and the slot is within its horizon, else left empty.
inline std::string run_csv(const RunRecord& rec, const FiniteHorizonSolution* sol = nullptr) {
    std::ostringstream out;
    out << "# sfpsg run csv v1\n";
    out << "epoch,m,state,player,strategy,q_residual,pi_distance\n";
    for (const auto& cp : rec.checkpoints) {
        for (std::size_t m = 0; m < cp.slots.size(); ++m) {
            for (int s = 0; s < rec.num_states; ++s) {
                const SlotEntry& e = cp.slots[m][s];
                for (int pl = 0; pl < rec.num_players; ++pl) {
                    out << cp.epoch << ',' << m << ',' << s << ',' << pl << ',';
                    for (std::size_t c = 0; c < e.beliefs[pl].size(); ++c) {
                        if (c) out << ';';
                        out << fmt_double(e.beliefs[pl][c]);
                    }
                    double q_res = -1.0, pi_dist = -1.0;
                    if (sol && static_cast<int>(m) <= sol->horizon - 1) {
                        const auto& cell = sol->stages[sol->horizon - 1 - static_cast<int>(m)][s];
                        pi_dist = 0.0;
                        for (std::size_t c = 0; c < e.beliefs[pl].size(); ++c)
                            pi_dist = std::max(pi_dist, std::abs(e.beliefs[pl][c] -
                                                                 cell.strategies[pl][c]));
                        q_res = 0.0;
                        for (std::size_t p = 0; p < e.q[pl].size(); ++p)
                            q_res = std::max(q_res, std::abs(e.q[pl][p] - cell.q[pl][p]));
                    }
                    out << ',';
                    if (q_res >= 0.0) out << fmt_double(q_res);
                    out << ',';
                    if (pi_dist >= 0.0) out << fmt_double(pi_dist);
                    out << '\n';
                }
            }
        }
    }
    return out.str();
}

inline std::string compare_csv(const CompareResult& res) {
    std::ostringstream out;
    out << "# sfpsg compare csv v1\n";
    out << "epoch,m,state,pi_distance,q_residual,ambiguous\n";
    for (const auto& row : res.rows) {
        out << row.epoch << ',' << row.m << ',' << row.state << ','
            << fmt_double(row.pi_distance) << ',' << fmt_double(row.q_residual) << ','
            << (row.ambiguous ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace sfpsg
