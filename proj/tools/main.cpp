// Command-line front end: validate and generate game files, run the learning
// dynamics from an experiment manifest, solve finite-horizon ground truth,
// and compare records against solutions.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "sfpsg/sfpsg.hpp"

namespace fs = std::filesystem;
using namespace sfpsg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitParse = 2;

json validation_report_json(const ValidationReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks) {
        json item;
        item["name"] = c.name;
        item["ok"] = c.ok;
        if (!c.detail.empty()) item["detail"] = c.detail;
        checks.push_back(std::move(item));
    }
    json out;
    out["ok"] = rep.ok;
    out["checks"] = std::move(checks);
    return out;
}

int cmd_validate(const std::string& game_path) {
    const auto game = load_game(game_path);
    const auto rep = validate_game(game);
    std::cout << validation_report_json(rep).dump(2) << "\n";
    return rep.ok ? kExitOk : kExitDomain;
}

int cmd_generate(const std::string& spec_path, std::uint64_t seed, const std::string& out) {
    const auto params = load_generator_params(spec_path);
    const auto game = generate_game(params, seed);
    save_game(game, out);
    std::cout << "wrote " << out << " (" << game.num_states << " states, "
              << game.num_players << " players)\n";
    return kExitOk;
}

int cmd_oracle(const std::string& game_path, int horizon, double tau, std::uint64_t seed,
               double damping, double tol, std::int64_t max_iters, const std::string& out) {
    const auto game = load_game(game_path);
    StageSolveParams params;
    params.seed = seed;
    params.damping = damping;
    params.tol = tol;
    params.max_iters = max_iters;
    const PerturbationSpec perturb{PerturbationSpec::Kind::Entropy, tau};
    const auto sol = backward_induction(game, horizon, perturb, params);
    const auto verify = verify_solution(game, sol, perturb);
    save_solution(sol, out);
    bool unique = true;
    for (const auto& stage : sol.stages)
        for (const auto& cell : stage) unique = unique && cell.unique;
    std::cout << "wrote " << out << "\n"
              << "horizon " << sol.horizon << ", tau " << fmt_double(sol.tau) << "\n"
              << "fixed-point residual " << fmt_double(verify.max_fp_residual)
              << ", recursion residual " << fmt_double(verify.max_recursion_residual)
              << ", terminal deviation " << fmt_double(verify.max_terminal_deviation) << "\n"
              << "uniqueness certificate: " << (unique ? "pass" : "FAIL") << "\n";
    if (!verify.ok()) {
        std::cerr << "solution failed independent verification\n";
        return kExitDomain;
    }
    return kExitOk;
}

std::string resolve_out_dir(const std::string& flag_value, const std::string& manifest_value) {
    if (!flag_value.empty()) return flag_value;
    if (!manifest_value.empty()) return manifest_value;
    if (const char* env = std::getenv("SFP_OUT_DIR"); env && *env) return env;
    return ".";
}

struct RunOverrides {
    std::string game_path;
    std::string out_dir;
    std::int64_t seed = -1;  // single-seed override when >= 0 (flag presence tracked separately)
    bool has_seed = false;
    double tau = 0.0;
    bool has_tau = false;
    std::int64_t checkpoint_every = 0;
    bool has_checkpoint_every = false;
    std::string state_policy;
};

int cmd_run(const std::string& manifest_path, const RunOverrides& ov) {
    Manifest manifest = load_manifest(manifest_path);
    if (!ov.game_path.empty()) {
        manifest.game_path = ov.game_path;
        manifest.has_generator = false;
    }
    if (ov.has_tau) manifest.run.tau = ov.tau;
    if (ov.has_checkpoint_every) manifest.run.checkpoint_every = ov.checkpoint_every;
    if (!ov.state_policy.empty()) {
        json patch;
        patch["epochs"] = manifest.run.epochs;
        patch["tau"] = manifest.run.tau;
        patch["state_policy"] = ov.state_policy;
        const auto parsed = run_config_from_json(patch);
        manifest.run.state_policy = parsed.state_policy;
        manifest.run.reset_state = parsed.reset_state;
    }
    if (ov.has_seed) manifest.seeds = {static_cast<std::uint64_t>(ov.seed)};

    const StochasticGame game = manifest.has_generator
                                    ? generate_game(manifest.generator, manifest.generator_seed)
                                    : load_game(manifest.game_path);
    const auto report = validate_game(game);
    if (!report.ok) {
        std::cerr << "game failed validation: " << report.summary() << "\n";
        return kExitDomain;
    }

    const std::string out_dir = resolve_out_dir(ov.out_dir, manifest.out_dir);
    fs::create_directories(out_dir);

    FiniteHorizonSolution solution;
    const FiniteHorizonSolution* sol_ptr = nullptr;
    if (manifest.has_oracle) {
        const PerturbationSpec perturb{PerturbationSpec::Kind::Entropy, manifest.run.tau};
        solution = backward_induction(game, manifest.oracle_horizon, perturb);
        save_solution(solution, out_dir + "/oracle.json");
        sol_ptr = &solution;
        std::cout << "wrote " << out_dir << "/oracle.json\n";
    }

    for (const auto seed : manifest.seeds) {
        const auto record = run(game, manifest.run, seed);
        const std::string stem = out_dir + "/run_seed" + std::to_string(seed);
        save_record(record, stem + ".json");
        write_text_file(stem + ".csv", run_csv(record, sol_ptr));
        std::cout << "seed " << seed << ": " << record.log.size() << " stages, "
                  << record.checkpoints.size() << " checkpoints -> " << stem
                  << ".{json,csv}\n";
    }
    return kExitOk;
}

int cmd_compare(const std::string& record_path, const std::string& solution_path, int max_m,
                double pi_tol, double q_tol, double trend_max, const std::string& out) {
    const auto record = load_record(record_path);
    const auto solution = load_solution(solution_path);
    const auto result = compare(record, solution, max_m);
    if (!out.empty()) {
        write_text_file(out, compare_csv(result));
        std::cout << "wrote " << out << "\n";
    }
    std::cout << "compared m = 0.." << result.max_m << " over "
              << result.checkpoint_epochs.size() << " checkpoints\n"
              << "final max pi distance " << fmt_double(result.final_max_pi)
              << ", final max q residual " << fmt_double(result.final_max_q) << "\n";
    if (std::isfinite(result.trend_ratio))
        std::cout << "trend ratio (late/early median) " << fmt_double(result.trend_ratio)
                  << "\n";
    if (result.ambiguous_any)
        std::cout << "warning: some stages lack a uniqueness certificate\n";

    bool ok = true;
    if (result.final_max_pi > pi_tol) {
        std::cout << "pi threshold violated: " << fmt_double(result.final_max_pi) << " > "
                  << fmt_double(pi_tol) << "\n";
        ok = false;
    }
    if (result.final_max_q > q_tol) {
        std::cout << "q threshold violated: " << fmt_double(result.final_max_q) << " > "
                  << fmt_double(q_tol) << "\n";
        ok = false;
    }
    if (std::isfinite(trend_max) &&
        (!std::isfinite(result.trend_ratio) || result.trend_ratio > trend_max)) {
        std::cout << "trend threshold violated\n";
        ok = false;
    }
    return ok ? kExitOk : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic fictitious play for stochastic games"};
    app.require_subcommand(1);

    std::string game_path, spec_path, manifest_path, record_path, solution_path, out_path;
    std::uint64_t seed = 0;
    int horizon = 1;
    double tau = 1.0;
    double damping = 0.5;
    double tol = 1e-11;
    std::int64_t max_iters = 1000000;
    int max_m = -1;
    double pi_tol = std::numeric_limits<double>::infinity();
    double q_tol = std::numeric_limits<double>::infinity();
    double trend_max = std::numeric_limits<double>::infinity();
    RunOverrides overrides;
    std::int64_t seed_override = 0;
    std::int64_t checkpoint_override = 0;

    auto* validate = app.add_subcommand("validate", "check a game file against all validators");
    validate->add_option("--game", game_path, "game JSON file")->required();

    auto* generate = app.add_subcommand("generate", "generate a game from a spec file");
    generate->add_option("--spec", spec_path, "generator spec JSON file")->required();
    generate->add_option("--seed", seed, "generator seed");
    generate->add_option("--out", out_path, "output game file")->required();

    auto* oracle = app.add_subcommand("oracle", "solve finite-horizon ground truth");
    oracle->add_option("--game", game_path, "game JSON file")->required();
    oracle->add_option("--horizon", horizon, "number of stages")->required();
    oracle->add_option("--tau", tau, "temperature")->required();
    oracle->add_option("--seed", seed, "multi-start seed");
    oracle->add_option("--damping", damping, "fixed-point damping in (0, 1]");
    oracle->add_option("--tol", tol, "fixed-point tolerance");
    oracle->add_option("--max-iters", max_iters, "iteration cap");
    oracle->add_option("--out", out_path, "output solution file")->required();

    auto* runc = app.add_subcommand("run", "run the dynamics from an experiment manifest");
    runc->add_option("--manifest", manifest_path, "manifest JSON file")->required();
    runc->add_option("--game", overrides.game_path, "override the manifest's game file");
    runc->add_option("--out", overrides.out_dir, "output directory");
    auto* seed_opt = runc->add_option("--seed", seed_override, "run a single seed");
    auto* cp_opt =
        runc->add_option("--checkpoint-every", checkpoint_override, "checkpoint cadence");
    runc->add_option("--state-policy", overrides.state_policy,
                     "continue or reset:<state>");
    auto* tau_opt = runc->add_option("--tau", overrides.tau, "override temperature");

    auto* comparec = app.add_subcommand("compare", "compare a run record to a solution");
    comparec->add_option("--record", record_path, "record JSON file")->required();
    comparec->add_option("--solution", solution_path, "solution JSON file")->required();
    comparec->add_option("--max-m", max_m, "largest m to compare (default: horizon-1)");
    comparec->add_option("--pi-tol", pi_tol, "fail if final pi distance exceeds this");
    comparec->add_option("--q-tol", q_tol, "fail if final q residual exceeds this");
    comparec->add_option("--trend-max", trend_max, "fail if trend ratio exceeds this");
    comparec->add_option("--out", out_path, "metric CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitParse;
    }

    try {
        if (validate->parsed()) return cmd_validate(game_path);
        if (generate->parsed()) return cmd_generate(spec_path, seed, out_path);
        if (oracle->parsed())
            return cmd_oracle(game_path, horizon, tau, seed, damping, tol, max_iters, out_path);
        if (runc->parsed()) {
            overrides.has_seed = seed_opt->count() > 0;
            overrides.seed = seed_override;
            overrides.has_tau = tau_opt->count() > 0;
            overrides.has_checkpoint_every = cp_opt->count() > 0;
            overrides.checkpoint_every = checkpoint_override;
            return cmd_run(manifest_path, overrides);
        }
        if (comparec->parsed())
            return cmd_compare(record_path, solution_path, max_m, pi_tol, q_tol, trend_max,
                               out_path);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    }
    return kExitOk;
}
