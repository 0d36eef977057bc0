#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "crowdnav/eval/experiment.hpp"
#include "crowdnav/io/config.hpp"
#include "crowdnav/io/svg.hpp"
#include "crowdnav/util/rng.hpp"
#include "crowdnav/value/training.hpp"

namespace fs = std::filesystem;
using namespace crowdnav;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

EnvFactory make_env_factory(const RunConfig& cfg) {
    const ScenarioConfig scenario_cfg = cfg.sim.scenario;
    const SimConfig sim_cfg = make_sim_config(cfg);
    const int n = cfg.sim.n_pedestrians;
    return [scenario_cfg, sim_cfg, n](std::uint64_t seed) {
        return Environment(generate_scenario(n, seed, scenario_cfg), sim_cfg);
    };
}

PolicyFactory make_policy_factory(const RunConfig& cfg,
                                  std::shared_ptr<const ValueNetParams> params) {
    const PlannerConfig planner_cfg = make_planner_config(cfg);
    const bool analytic = cfg.value_net.kind == "analytic";
    return [cfg, params, planner_cfg, analytic](std::uint64_t episode_seed) {
        PolicySpec policy;
        policy.kind = PolicySpec::Kind::Planner;
        policy.planner = planner_cfg;
        policy.predictor = make_predictor(cfg, episode_seed);
        if (analytic) {
            policy.value_fn = [](const EgoJointState& ego) { return analytic_value(ego); };
        } else {
            policy.value_fn = [params](const EgoJointState& ego) {
                return value_forward(ego, *params);
            };
        }
        return policy;
    };
}

int cmd_train(const RunConfig& cfg, const std::string& init_params, const std::string& out_dir) {
    fs::create_directories(out_dir);
    TrainingConfig training = make_training_config(cfg);
    training.curve_path = (fs::path(out_dir) / "training_curve.csv").string();
    PlannerConfig planner_cfg = make_planner_config(cfg);
    planner_cfg.limits = KinematicLimits::unlimited();  // constraints are a planning-time module
    planner_cfg.kce_enabled = false;
    // Value targets use the core reward cases; the smoothness term is a
    // planning-time shaping of V_m, not part of the state value. The
    // discomfort penalty is the small continuous per-step form: the large
    // discontinuous planning-time case destabilizes value learning.
    planner_cfg.reward_smoothing = false;
    planner_cfg.discomfort_offset = -planner_cfg.discomfort_dist * 0.5 * cfg.sim.dt;
    planner_cfg.discomfort_slope = 0.5 * cfg.sim.dt;
    training.checkpoint_dir = (fs::path(out_dir) / "checkpoints").string();
    fs::create_directories(training.checkpoint_dir);

    const EnvFactory env_factory = make_env_factory(cfg);
    ReplayBuffer buffer(training.buffer_capacity);
    std::vector<CurvePoint> curve;

    ValueNetParams params = init_params.empty()
                                ? ValueNetParams::init(cfg.value_net.net, training.seed)
                                : load_params(init_params);
    std::cerr << "imitation: " << training.il_episodes << " episodes, " << training.il_epochs
              << " epochs\n";
    params = train_imitation(env_factory, training.il_episodes, std::move(params), buffer,
                             training, planner_cfg, &curve);
    write_file(fs::path(out_dir) / "training_curve.csv", curve_to_csv(curve));
    save_params(params, (fs::path(out_dir) / "value_net_il.json").string());

    std::cerr << "reinforcement: " << training.rl_episodes << " episodes\n";
    params = train_rl(env_factory, training.rl_episodes, std::move(params), buffer, training,
                      planner_cfg, &curve);

    write_file(fs::path(out_dir) / "config.json", cfg.to_json());
    write_file(fs::path(out_dir) / "training_curve.csv", curve_to_csv(curve));
    save_params(params, (fs::path(out_dir) / "value_net.json").string());
    std::cerr << "wrote " << (fs::path(out_dir) / "value_net.json").string() << "\n";
    return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& params_path, const std::string& out_dir) {
    std::shared_ptr<const ValueNetParams> params;
    if (cfg.value_net.kind == "learned") {
        if (params_path.empty()) {
            throw std::runtime_error("eval with value_net.kind=learned needs --params");
        }
        params = std::make_shared<const ValueNetParams>(load_params(params_path));
    }

    ExperimentConfig exp = make_experiment_config(cfg);
    const MonteCarloOutput out = monte_carlo(exp, make_policy_factory(cfg, params));

    write_file(fs::path(out_dir) / "config.json", cfg.to_json());
    write_file(fs::path(out_dir) / "metrics.csv", metrics_to_csv(out.metrics));
    write_file(fs::path(out_dir) / "metrics.txt", metrics_to_table(out.metrics));
    write_file(fs::path(out_dir) / "per_episode.csv", episode_results_to_csv(out.episodes));
    if (exp.keep_logs) {
        for (const EpisodeLog& log : out.logs) {
            write_file(fs::path(out_dir) / "episodes" /
                           ("episode_" + std::to_string(log.seed) + ".json"),
                       episode_to_json(log));
        }
    }
    std::cout << metrics_to_table(out.metrics);
    return 0;
}

int cmd_compare(const RunConfig& cfg_a, const RunConfig& cfg_b, const std::string& params_path,
                const std::string& out_dir) {
    if (cfg_a.experiment.num_cases != cfg_b.experiment.num_cases ||
        cfg_a.experiment.base_seed != cfg_b.experiment.base_seed) {
        throw std::runtime_error("compare: both experiments must share num_cases and base_seed");
    }
    const auto run = [&](const RunConfig& cfg) {
        std::shared_ptr<const ValueNetParams> params;
        if (cfg.value_net.kind == "learned") {
            if (params_path.empty()) {
                throw std::runtime_error("compare with value_net.kind=learned needs --params");
            }
            params = std::make_shared<const ValueNetParams>(load_params(params_path));
        }
        ExperimentConfig exp = make_experiment_config(cfg);
        exp.keep_logs = false;
        return monte_carlo(exp, make_policy_factory(cfg, params));
    };
    const MonteCarloOutput a = run(cfg_a);
    const MonteCarloOutput b = run(cfg_b);
    const ComparisonReport report = ablation_compare(a.episodes, b.episodes);

    write_file(fs::path(out_dir) / "config_a.json", cfg_a.to_json());
    write_file(fs::path(out_dir) / "config_b.json", cfg_b.to_json());
    write_file(fs::path(out_dir) / "comparison.csv", report.to_csv());

    std::ostringstream summary;
    summary << "success A " << 100.0 * report.success_rate_a << "%  B "
            << 100.0 * report.success_rate_b << "%\n"
            << "mean rel time change (B vs A)    " << 100.0 * report.mean_rel_time_change << "%\n"
            << "mean rel max-acc change (B vs A) " << 100.0 * report.mean_rel_max_acc_change
            << "%\n"
            << "max-acc decreased/increased/tied " << report.acc_decreased << "/"
            << report.acc_increased << "/" << report.acc_tied << "\n";
    write_file(fs::path(out_dir) / "summary.txt", summary.str());
    std::cout << summary.str();
    return 0;
}

int cmd_plot(const std::string& log_path, const std::string& out_path) {
    const EpisodeLog log = episode_from_json(read_file(log_path));
    write_file(out_path, render_episode_svg(log));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"crowd navigation planner, simulator and benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, config_b_path, params_path, out_path, log_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int cases = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "run configuration JSON");
        cmd->add_option("--seed", seed, "override experiment.base_seed / training seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--cases", cases, "override experiment.num_cases");
        if (needs_out) cmd->add_option("--out", out_path, "output directory")->required();
    };

    CLI::App* train = app.add_subcommand("train", "imitation + TD training, writes params");
    add_common(train, true);
    train->add_option("--init", params_path,
                      "start from these params (with il_epochs=0 this resumes RL)");

    CLI::App* eval_cmd = app.add_subcommand("eval", "seeded Monte Carlo evaluation");
    add_common(eval_cmd, true);
    eval_cmd->add_option("--params", params_path, "value net params file");

    CLI::App* compare = app.add_subcommand("compare", "paired A/B experiment comparison");
    add_common(compare, true);
    compare->add_option("--config-b", config_b_path, "second configuration")->required();
    compare->add_option("--params", params_path, "value net params file");

    CLI::App* plot = app.add_subcommand("plot", "render an episode log to SVG");
    plot->add_option("--log", log_path, "episode JSON log")->required();
    plot->add_option("--out", out_path, "output SVG path")->required();

    CLI::App* config_cmd = app.add_subcommand("config", "configuration utilities");
    CLI::App* dump = config_cmd->add_subcommand("dump", "print the full effective configuration");
    dump->add_option("--config", config_path, "base configuration to expand");
    dump->add_option("--out", out_path, "write to file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
        if (seed_set) {
            cfg.experiment.base_seed = seed;
            cfg.value_net.training.seed = seed;
        }
        if (cases > 0) cfg.experiment.num_cases = cases;

        if (train->parsed()) return cmd_train(cfg, params_path, out_path);
        if (eval_cmd->parsed()) return cmd_eval(cfg, params_path, out_path);
        if (compare->parsed()) {
            RunConfig cfg_b = RunConfig::from_file(config_b_path);
            if (seed_set) cfg_b.experiment.base_seed = seed;
            if (cases > 0) cfg_b.experiment.num_cases = cases;
            return cmd_compare(cfg, cfg_b, params_path, out_path);
        }
        if (plot->parsed()) return cmd_plot(log_path, out_path);
        if (dump->parsed()) {
            if (out_path.empty()) {
                std::cout << cfg.to_json();
            } else {
                write_file(out_path, cfg.to_json());
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
