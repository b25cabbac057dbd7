#pragma once

// Command implementations behind the `thermogrid` executable.
//
// Exit codes: 0 success, 2 configuration error, 3 input mismatch,
// 4 numerical failure. Output files appear only when a command succeeds.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermogrid/checkpoint.hpp"
#include "thermogrid/config.hpp"
#include "thermogrid/evaluation.hpp"
#include "thermogrid/gradcheck.hpp"
#include "thermogrid/training.hpp"

namespace thermogrid::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kInputMismatch = 3, kNumericalFailure = 4 };

inline constexpr const char* kOutDirEnv = "THERMOGRID_OUT_DIR";

namespace fs = std::filesystem;

/// Collects outputs in a hidden sibling directory and moves them into place on commit.
class StagedDir {
public:
    explicit StagedDir(fs::path target) : target_(std::move(target)) {
        const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
        staging_ = parent / ("." + target_.filename().string() + ".staging");
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    StagedDir(const StagedDir&) = delete;
    StagedDir& operator=(const StagedDir&) = delete;

    ~StagedDir() {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }

    const fs::path& path() const { return staging_; }

    void commit() {
        fs::create_directories(target_);
        for (const auto& entry : fs::directory_iterator(staging_)) {
            const fs::path dest = target_ / entry.path().filename();
            fs::remove_all(dest);
            fs::rename(entry.path(), dest);
        }
    }

private:
    fs::path target_;
    fs::path staging_;
};

/// Writes a single file atomically via a temporary sibling.
inline void write_file_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

inline SystemConfig config_or_default(const std::string& path) {
    return path.empty() ? SystemConfig::defaults() : load_config(path);
}

inline fs::path resolve_out_dir(const std::string& out) {
    if (!out.empty()) return out;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    throw ConfigError("--out: no output directory given and " + std::string(kOutDirEnv) + " is unset");
}

struct TrainArgs {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    bool ablate_peak_penalty = false;
    std::optional<std::size_t> episodes;
};

inline int cmd_train(const TrainArgs& args, std::ostream& log = std::cerr) {
    SystemConfig config = config_or_default(args.config);
    if (args.ablate_peak_penalty) config.reward.l5 = 0.0;
    if (args.episodes) config.td3.episodes = *args.episodes;
    const fs::path out = resolve_out_dir(args.out);

    StagedDir stage(out);
    const auto sink = [&](std::size_t episode, const Td3Agent& agent) {
        char name[32];
        std::snprintf(name, sizeof(name), "ep%03zu", episode);
        save_agent_checkpoint(stage.path() / "checkpoints" / name, agent, {args.seed, episode, config});
        log << "episode " << episode << ": checkpoint written\n";
    };
    TrainResult result = train(config, args.seed, sink);
    save_agent_checkpoint(stage.path() / "checkpoint", result.agent,
                          {args.seed, config.td3.episodes, config});
    std::ostringstream train_log, timing;
    write_train_log_csv(train_log, result.log);
    write_timing_csv(timing, result.log);
    write_file(stage.path() / "train_log.csv", train_log.str());
    write_file(stage.path() / "train_timing.csv", timing.str());
    stage.commit();
    if (!result.log.episodes.empty()) {
        log << "final mean5 reward: " << result.log.episodes.back().mean5 << "\n";
    }
    return kOk;
}

struct EvaluateArgs {
    std::string checkpoint;
    std::string config;
    std::uint64_t seed = 0;
    std::size_t per_tier = 10;
    std::string out;
};

inline int cmd_evaluate(const EvaluateArgs& args, std::ostream& log = std::cerr) {
    const SystemConfig config = config_or_default(args.config);
    if (args.per_tier == 0) throw ConfigError("--per-tier: must be >= 1");
    const fs::path out = resolve_out_dir(args.out);
    const LoadedCheckpoint ckpt = load_agent_checkpoint(args.checkpoint);
    if (ckpt.manifest.config.plant.horizon != config.plant.horizon) {
        throw InputMismatch("checkpoint horizon does not match --config horizon");
    }
    const EvalReport report = evaluate(ckpt.agent.actor(), config, standard_tiers(), args.per_tier, args.seed);

    StagedDir stage(out);
    std::ostringstream rows, summary;
    write_eval_csv(rows, report);
    write_tier_summary_csv(summary, report);
    write_file(stage.path() / "eval_report.csv", rows.str());
    write_file(stage.path() / "eval_summary.csv", summary.str());
    stage.commit();
    log << "evaluated " << report.rows.size() << " scenarios\n";
    return kOk;
}

inline EvalReport read_report_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open report");
    return read_eval_csv(in);
}

struct CompareArgs {
    std::string a;
    std::string b;
    std::string out;
};

inline Comparison compare_report_files(const std::string& a, const std::string& b) {
    return compare(read_report_file(a), read_report_file(b));
}

inline int cmd_compare(const CompareArgs& args, std::ostream& log = std::cerr) {
    const Comparison c = compare_report_files(args.a, args.b);
    std::ostringstream os;
    write_comparison_csv(os, c);
    write_file_atomic(args.out, os.str());
    for (const auto& t : c.tiers) {
        log << t.a.label() << ": C_s reduction " << t.reduction_pct.c_s << "%, delta_P reduction "
            << t.reduction_pct.delta_p << "%\n";
    }
    return kOk;
}

struct SimulateArgs {
    std::string config;
    std::string policy = "midbox";
    std::string checkpoint;
    std::string tier = "base";
    std::uint64_t seed = 0;
    std::string out;
};

/// "base" for the unperturbed day, otherwise "lo-hi" in percent, e.g. "10-20".
inline std::optional<UncertaintyTier> parse_tier(const std::string& s) {
    if (s == "base") return std::nullopt;
    const auto dash = s.find('-');
    if (dash == std::string::npos) throw ConfigError("--tier: expected 'base' or 'lo-hi' in percent");
    try {
        return UncertaintyTier(std::stod(s.substr(0, dash)) / 100.0, std::stod(s.substr(dash + 1)) / 100.0);
    } catch (const std::logic_error&) {
        throw ConfigError("--tier: expected 'base' or 'lo-hi' in percent, got '" + s + "'");
    }
}

inline int cmd_simulate(const SimulateArgs& args, std::ostream& log = std::cerr) {
    const SystemConfig config = config_or_default(args.config);
    const auto tier = parse_tier(args.tier);
    const Scenario sc = tier ? perturb(config.profile, *tier, args.seed) : base_scenario(config.profile);

    Trajectory traj;
    if (args.policy == "checkpoint") {
        if (args.checkpoint.empty()) throw ConfigError("--checkpoint: required with --policy checkpoint");
        const LoadedCheckpoint ckpt = load_agent_checkpoint(args.checkpoint);
        traj = rollout(ckpt.agent.actor(), sc, config.plant, config.reward);
    } else if (args.policy == "midbox" || args.policy == "zero") {
        const double level = args.policy == "midbox" ? 0.0 : -1.0;
        const Policy fixed = [level](const EnvState&, const StateFeatures&) {
            return NormalizedAction{level, level, level};
        };
        traj = run_episode(fixed, sc, config.plant, config.reward);
    } else {
        throw ConfigError("--policy: expected checkpoint, midbox or zero");
    }
    std::ostringstream os;
    write_trajectory_csv(os, traj);
    write_file_atomic(args.out, os.str());
    const EpisodeCost cost = episode_cost(traj, config.plant.horizon);
    log << "C_s " << cost.c_s << ", delta_P " << cost.delta_p_total << ", reward " << cost.cum_reward << "\n";
    return kOk;
}

struct GradcheckArgs {
    std::uint64_t seed = 0;
    std::size_t nets = 100;
    bool inject_fault = false;
};

inline int cmd_gradcheck(const GradcheckArgs& args, std::ostream& log = std::cout) {
    GradCheckOptions opts;
    opts.nets = args.nets;
    opts.inject_fault = args.inject_fault;
    const GradCheckResult r = run_gradient_check(args.seed, opts);
    log << "checked " << r.parameters_checked << " gradients over " << r.nets
        << " networks; max relative error " << r.max_relative_error << " (" << r.worst << ")\n";
    return r.passed(opts.tolerance) ? kOk : kNumericalFailure;
}

/// Runs `fn`, mapping exceptions to exit codes. Messages go to `err`.
template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const InputMismatch& e) {
        err << "input mismatch: " << e.what() << "\n";
        return kInputMismatch;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const InputDomainError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"Electricity-heat plant dispatch with TD3 / peak-shaving TD3"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train an agent and write checkpoint + training log");
    train_cmd->add_option("--config", train_args.config, "Configuration file (JSON)");
    train_cmd->add_option("--seed", train_args.seed, "Master seed");
    train_cmd->add_option("--out", train_args.out, "Output directory (default $THERMOGRID_OUT_DIR)");
    train_cmd->add_flag("--ablate-peak-penalty", train_args.ablate_peak_penalty,
                        "Force l5 = 0 (plain TD3 baseline)");
    std::size_t episodes_override = 0;
    auto* episodes_opt = train_cmd->add_option("--episodes", episodes_override, "Override td3.episodes");

    EvaluateArgs eval_args;
    auto* eval_cmd = app.add_subcommand("evaluate", "Noiseless evaluation over the three uncertainty tiers");
    eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint directory")->required();
    eval_cmd->add_option("--config", eval_args.config, "Configuration file (JSON)");
    eval_cmd->add_option("--seed", eval_args.seed, "Base scenario seed");
    eval_cmd->add_option("--per-tier", eval_args.per_tier, "Scenarios per tier");
    eval_cmd->add_option("--out", eval_args.out, "Output directory (default $THERMOGRID_OUT_DIR)");

    CompareArgs cmp_args;
    auto* cmp_cmd = app.add_subcommand("compare", "Per-tier percent deltas between two evaluation reports");
    cmp_cmd->add_option("--a", cmp_args.a, "Baseline eval_report.csv")->required();
    cmp_cmd->add_option("--b", cmp_args.b, "Candidate eval_report.csv")->required();
    cmp_cmd->add_option("--out", cmp_args.out, "Comparison CSV path")->required();

    SimulateArgs sim_args;
    auto* sim_cmd = app.add_subcommand("simulate", "Single noiseless trajectory to CSV");
    sim_cmd->add_option("--config", sim_args.config, "Configuration file (JSON)");
    sim_cmd->add_option("--policy", sim_args.policy, "checkpoint | midbox | zero")
        ->check(CLI::IsMember({"checkpoint", "midbox", "zero"}));
    sim_cmd->add_option("--checkpoint", sim_args.checkpoint, "Checkpoint directory");
    sim_cmd->add_option("--tier", sim_args.tier, "'base' or lo-hi in percent, e.g. 10-20");
    sim_cmd->add_option("--seed", sim_args.seed, "Scenario seed");
    sim_cmd->add_option("--out", sim_args.out, "Trajectory CSV path")->required();

    GradcheckArgs gc_args;
    auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of network gradients");
    gc_cmd->add_option("--seed", gc_args.seed, "Seed");
    gc_cmd->add_option("--nets", gc_args.nets, "Number of random networks");
    gc_cmd->add_flag("--inject-fault", gc_args.inject_fault, "Corrupt one analytic gradient");

    std::string default_out;
    auto* def_cmd = app.add_subcommand("default-config", "Print the built-in default configuration");
    def_cmd->add_option("--out", default_out, "Write to file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    return guarded(
        [&]() -> int {
            if (*train_cmd) {
                if (*episodes_opt) train_args.episodes = episodes_override;
                return cmd_train(train_args, err);
            }
            if (*eval_cmd) return cmd_evaluate(eval_args, err);
            if (*cmp_cmd) return cmd_compare(cmp_args, err);
            if (*sim_cmd) return cmd_simulate(sim_args, err);
            if (*gc_cmd) return cmd_gradcheck(gc_args, out);
            const std::string text = config_to_json(SystemConfig::defaults()).dump(2) + "\n";
            if (default_out.empty()) {
                out << text;
            } else {
                write_file_atomic(default_out, text);
            }
            return kOk;
        },
        err);
}

}  // namespace thermogrid::cli
