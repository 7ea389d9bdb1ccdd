// Command-line surface: solving, training, sweeping, instance emission and
// diagnostics over the JSON/CSV formats.
//
// Exit codes: 0 success, 1 usage error, 2 validation failure,
// 3 numerical non-convergence.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tabrl/tabrl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitNonConvergence = 3;

std::string resolve_output(const std::string& path) {
    if (path.empty()) return path;
    const char* dir = std::getenv("TABRL_OUTPUT_DIR");
    if (!dir || *dir == '\0') return path;
    const std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(dir) / p).string();
}

tabrl::json violations_to_json(const std::vector<tabrl::Violation>& violations) {
    tabrl::json rows = tabrl::json::array();
    for (const auto& v : violations) {
        tabrl::json row{{"constraint", v.constraint}, {"message", v.message}};
        if (v.state >= 0) row["state"] = v.state;
        if (v.action >= 0) row["action"] = v.action;
        rows.push_back(std::move(row));
    }
    return rows;
}

bool is_finite_horizon_file(const tabrl::json& j) { return j.contains("horizon"); }

struct SolveArgs {
    std::string mdp_path;
    double tol = 1e-10;
    long long max_iters = 1000000;
    std::string out;
};

int cmd_solve(const SolveArgs& args) {
    const tabrl::json j = tabrl::load_json(args.mdp_path);
    tabrl::json result;
    if (is_finite_horizon_file(j)) {
        const tabrl::FiniteHorizonMdp fmdp = tabrl::load_fmdp(args.mdp_path);
        const auto q = tabrl::backward_induction(fmdp);
        tabrl::json tables = tabrl::json::array();
        for (const auto& qh : q) tables.push_back(tabrl::qtable_to_json(qh));
        result = {{"version", tabrl::kFileVersion}, {"q_h_star", std::move(tables)}};
    } else {
        const tabrl::TabularMdp mdp = tabrl::load_mdp(args.mdp_path);
        const auto sol = tabrl::value_iteration(mdp, args.tol, args.max_iters);
        result = {{"version", tabrl::kFileVersion},
                  {"q_star", tabrl::qtable_to_json(sol.q_star)},
                  {"v_star", sol.v_star},
                  {"iterations", sol.iterations},
                  {"residual", sol.residual}};
    }
    const std::string text = result.dump(2) + "\n";
    if (!args.out.empty()) tabrl::atomic_write(resolve_output(args.out), text);
    else std::cout << text;
    return kExitOk;
}

struct TrainArgs {
    std::string config_path;
    std::string mdp_override;
    bool oracle_from_solve = false;
    std::string out;
    std::string checkpoints_csv;
};

int cmd_train(const TrainArgs& args) {
    using namespace tabrl;
    RunSpec spec = run_spec_from_json(load_json(args.config_path));
    if (!args.mdp_override.empty()) {
        spec.instance.kind = InstanceSource::Kind::file;
        spec.instance.path = args.mdp_override;
    }

    RunConfig cfg;
    cfg.schedule = spec.schedule;
    cfg.iterations = spec.iterations;
    cfg.seed = spec.seed;
    cfg.checkpoint_every = spec.checkpoint_every;
    cfg.start_state = spec.start_state;

    json record;
    double final_error = -1.0;
    auto note_error = [&](const std::vector<Checkpoint>& cps) {
        if (!cps.empty()) final_error = cps.back().sup_error;
    };

    switch (spec.algorithm) {
        case Algorithm::sync_q:
        case Algorithm::async_q: {
            TabularMdp mdp;
            switch (spec.instance.kind) {
                case InstanceSource::Kind::file: mdp = load_mdp(spec.instance.path); break;
                case InstanceSource::Kind::hard_mdp: mdp = build_hard_mdp(spec.gamma); break;
                case InstanceSource::Kind::random_mdp:
                    mdp = random_mdp(spec.instance.states, spec.instance.actions,
                                     spec.instance.seed, spec.gamma);
                    break;
                default: throw std::invalid_argument("train: instance kind needs an MDP");
            }
            cfg.schedule = spec.schedule.with_context(mdp.discount, cfg.iterations);
            QTable oracle;
            const QTable* oracle_ptr = nullptr;
            if (args.oracle_from_solve) {
                oracle = value_iteration(mdp).q_star;
                oracle_ptr = &oracle;
                if (cfg.checkpoint_every == 0) cfg.checkpoint_every = cfg.iterations;
            }
            RunRecord<QTable> rec;
            if (spec.algorithm == Algorithm::async_q) {
                BehaviorPolicy behavior = spec.behavior_path.empty()
                                              ? uniform_behavior(mdp)
                                              : behavior_from_json(
                                                    load_json(spec.behavior_path), mdp);
                rec = run_async_q(mdp, behavior, cfg, oracle_ptr);
            } else {
                rec = run_sync_q(mdp, cfg, oracle_ptr);
            }
            note_error(rec.checkpoints);
            record = run_record_to_json(rec, spec.algorithm);
            if (!args.checkpoints_csv.empty())
                atomic_write(resolve_output(args.checkpoints_csv),
                             checkpoints_to_csv(rec.checkpoints));
            break;
        }
        case Algorithm::sync_td: {
            TabularMrp mrp;
            switch (spec.instance.kind) {
                case InstanceSource::Kind::file: mrp = mrp_from_mdp(load_mdp(spec.instance.path)); break;
                case InstanceSource::Kind::hard_mrp: mrp = hard_mrp(spec.gamma); break;
                case InstanceSource::Kind::random_mrp:
                    mrp = random_mrp(spec.instance.states, spec.instance.seed, spec.gamma);
                    break;
                default: throw std::invalid_argument("train: instance kind needs an MRP");
            }
            cfg.schedule = spec.schedule.with_context(mrp.discount, cfg.iterations);
            VTable oracle;
            const VTable* oracle_ptr = nullptr;
            if (args.oracle_from_solve) {
                oracle = exact_mrp_value(mrp);
                oracle_ptr = &oracle;
                if (cfg.checkpoint_every == 0) cfg.checkpoint_every = cfg.iterations;
            }
            const auto rec = run_sync_td(mrp, cfg, oracle_ptr);
            note_error(rec.checkpoints);
            record = run_record_to_json(rec, spec.algorithm);
            if (!args.checkpoints_csv.empty())
                atomic_write(resolve_output(args.checkpoints_csv),
                             checkpoints_to_csv(rec.checkpoints));
            break;
        }
        case Algorithm::finite_q: {
            FiniteHorizonMdp fmdp;
            if (spec.instance.kind == InstanceSource::Kind::file)
                fmdp = load_fmdp(spec.instance.path);
            else
                fmdp = random_fmdp(spec.instance.states, spec.instance.actions,
                                   spec.instance.horizon, spec.instance.seed);
            cfg.schedule = spec.schedule.with_context(
                1.0 - 1.0 / static_cast<double>(fmdp.horizon), cfg.iterations);
            std::vector<QTable> oracle;
            const std::vector<QTable>* oracle_ptr = nullptr;
            if (args.oracle_from_solve) {
                oracle = backward_induction(fmdp);
                oracle_ptr = &oracle;
                if (cfg.checkpoint_every == 0) cfg.checkpoint_every = cfg.iterations;
            }
            const auto rec = run_finite_horizon_q(fmdp, cfg, oracle_ptr);
            note_error(rec.checkpoints);
            record = run_record_to_json(rec, spec.algorithm);
            if (!args.checkpoints_csv.empty())
                atomic_write(resolve_output(args.checkpoints_csv),
                             checkpoints_to_csv(rec.checkpoints));
            break;
        }
    }

    const std::string text = record.dump(2) + "\n";
    if (!args.out.empty()) {
        tabrl::atomic_write(resolve_output(args.out), text);
        std::cout << "wrote " << resolve_output(args.out) << "\n";
    } else {
        std::cout << text;
    }
    if (final_error >= 0.0) std::cerr << "final sup error: " << final_error << "\n";
    return kExitOk;
}

struct SweepArgs {
    std::string config_path;
    std::string out_csv;
    std::string summary;
    std::string plot_data;
};

int cmd_sweep(const SweepArgs& args) {
    using namespace tabrl;
    const SweepConfig cfg = sweep_from_json(load_json(args.config_path));

    TabularMdp file_mdp;
    TabularMrp file_mrp;
    FiniteHorizonMdp file_fmdp;
    LoadedInstance loaded;
    if (cfg.instance.kind == InstanceSource::Kind::file) {
        if (cfg.algorithm == Algorithm::finite_q) {
            file_fmdp = load_fmdp(cfg.instance.path);
            loaded.fmdp = &file_fmdp;
        } else if (cfg.algorithm == Algorithm::sync_td) {
            file_mrp = mrp_from_mdp(load_mdp(cfg.instance.path));
            loaded.mrp = &file_mrp;
        } else {
            file_mdp = load_mdp(cfg.instance.path);
            loaded.mdp = &file_mdp;
        }
    }

    ExponentFit fit;
    if (cfg.gamma_grid.size() > 1 && cfg.t_grid.size() == 1)
        fit = horizon_exponent_sweep(cfg, loaded);
    else if (cfg.t_grid.size() > 1 && cfg.gamma_grid.size() == 1)
        fit = iteration_exponent_sweep(cfg, loaded);
    else
        throw std::invalid_argument("sweep: exactly one of gamma_grid / t_grid may vary");

    if (!args.out_csv.empty())
        atomic_write(resolve_output(args.out_csv), sweep_to_csv(fit, cfg.algorithm));
    if (!args.plot_data.empty())
        atomic_write(resolve_output(args.plot_data), sweep_to_csv(fit, cfg.algorithm));
    const json summary = sweep_summary_to_json(cfg, fit);
    if (!args.summary.empty())
        atomic_write(resolve_output(args.summary), summary.dump(2) + "\n");
    else
        std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

struct HardMdpArgs {
    std::string mode; // "" or "emit"
    double gamma = 0.9;
    bool oracle = false;
    std::string out;
};

int cmd_hard_mdp(const HardMdpArgs& args) {
    using namespace tabrl;
    if (args.oracle) {
        const HardMdpOracle o = hard_oracle(args.gamma);
        const json j{{"version", kFileVersion},
                     {"gamma", o.gamma},
                     {"p", o.p},
                     {"v_star", o.v_star},
                     {"q_star", qtable_to_json(o.q_star)}};
        std::cout << j.dump(2) << "\n";
    }
    if (args.mode == "emit" || !args.out.empty()) {
        if (args.out.empty())
            throw std::invalid_argument("hard-mdp emit: --out is required");
        save_mdp(build_hard_mdp(args.gamma), resolve_output(args.out));
        std::cout << "wrote " << resolve_output(args.out) << "\n";
    } else if (!args.oracle) {
        throw std::invalid_argument("hard-mdp: nothing to do (use --oracle or emit --out)");
    }
    return kExitOk;
}

struct DiagnoseArgs {
    std::string mdp_path;
    std::string behavior_path;
};

int cmd_diagnose(const DiagnoseArgs& args) {
    using namespace tabrl;
    const TabularMdp mdp = load_mdp(args.mdp_path);
    const BehaviorPolicy behavior = args.behavior_path.empty()
                                        ? uniform_behavior(mdp)
                                        : behavior_from_json(load_json(args.behavior_path), mdp);
    const ChainDiagnostics d = diagnose_chain(mdp, behavior);
    const json j{{"version", kFileVersion},
                 {"stationary", d.stationary},
                 {"mu_min", d.mu_min},
                 {"t_mix", d.t_mix},
                 {"ergodic", d.ergodic}};
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& path) {
    using namespace tabrl;
    const json j = load_json(path);
    std::vector<Violation> violations;
    if (is_finite_horizon_file(j)) violations = validate(fmdp_from_json(j));
    else violations = validate(mdp_from_json(j));
    if (violations.empty()) {
        std::cout << "valid\n";
        return kExitOk;
    }
    std::cout << violations_to_json(violations).dump(2) << "\n";
    return kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabular reinforcement-learning laboratory"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "exact solve of an MDP file");
    solve->add_option("--mdp", solve_args.mdp_path, "instance file")->required();
    solve->add_option("--tol", solve_args.tol, "fixed-point tolerance");
    solve->add_option("--max-iters", solve_args.max_iters, "iteration cap");
    solve->add_option("--out", solve_args.out, "write result here instead of stdout");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "one learner run from a config file");
    train->add_option("--config", train_args.config_path, "run config file")->required();
    train->add_option("--mdp", train_args.mdp_override, "override the instance with this file");
    train->add_flag("--oracle-from-solve", train_args.oracle_from_solve,
                    "solve the instance exactly and checkpoint errors against it");
    train->add_option("--out", train_args.out, "write the run record here");
    train->add_option("--checkpoints-csv", train_args.checkpoints_csv,
                      "write the checkpoint series as CSV");

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "run an experiment sweep from a config file");
    sweep->add_option("--config", sweep_args.config_path, "sweep config file")->required();
    sweep->add_option("--out", sweep_args.out_csv, "write per-run results CSV");
    sweep->add_option("--summary", sweep_args.summary, "write the JSON summary here");
    sweep->add_option("--plot-data", sweep_args.plot_data, "write long-format CSV for plotting");

    HardMdpArgs hard_args;
    auto* hard = app.add_subcommand("hard-mdp", "emit the hard instance or print its oracle");
    hard->add_option("mode", hard_args.mode, "'emit' to write the instance")
        ->check(CLI::IsMember({"emit"}));
    hard->add_option("--gamma", hard_args.gamma, "discount factor in [0.75, 1)")->required();
    hard->add_flag("--oracle", hard_args.oracle, "print closed-form optimal values");
    hard->add_option("--out", hard_args.out, "instance output path");

    DiagnoseArgs diag_args;
    auto* diagnose = app.add_subcommand("diagnose", "behavior-chain statistics for an MDP");
    diagnose->add_option("--mdp", diag_args.mdp_path, "instance file")->required();
    diagnose->add_option("--behavior", diag_args.behavior_path,
                         "behavior policy file (default: uniform)");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "check an instance file");
    validate_cmd->add_option("file", validate_path, "instance file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*solve) return cmd_solve(solve_args);
        if (*train) return cmd_train(train_args);
        if (*sweep) return cmd_sweep(sweep_args);
        if (*hard) return cmd_hard_mdp(hard_args);
        if (*diagnose) return cmd_diagnose(diag_args);
        if (*validate_cmd) return cmd_validate(validate_path);
    } catch (const tabrl::ValidationError& e) {
        std::cout << violations_to_json(e.violations).dump(2) << "\n";
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const tabrl::SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const tabrl::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
