#include "crowdnav/io/config.hpp"

#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "crowdnav/predict/external.hpp"
#include "crowdnav/util/rng.hpp"
#include "json.hpp"

namespace crowdnav {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            throw std::runtime_error("config: unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_sim(const json& j, SimSection& sim) {
    reject_unknown_keys(j, {"dt", "time_limit", "n_pedestrians", "circle_radius",
                            "sigma_position", "visible_vehicle", "on_goal", "vehicle", "orca",
                            "max_placement_attempts", "placement_margin"},
                        "sim");
    read(j, "dt", sim.dt);
    read(j, "time_limit", sim.time_limit);
    read(j, "n_pedestrians", sim.n_pedestrians);
    read(j, "circle_radius", sim.scenario.circle_radius);
    read(j, "sigma_position", sim.scenario.sigma_position);
    read(j, "visible_vehicle", sim.scenario.visible_vehicle);
    read(j, "on_goal", sim.on_goal);
    read(j, "max_placement_attempts", sim.scenario.max_placement_attempts);
    read(j, "placement_margin", sim.scenario.placement_margin);
    if (j.contains("vehicle")) {
        const json& v = j.at("vehicle");
        reject_unknown_keys(v, {"radius", "v_pref"}, "sim.vehicle");
        read(v, "radius", sim.scenario.vehicle_radius);
        read(v, "v_pref", sim.scenario.vehicle_v_pref);
    }
    if (j.contains("orca")) {
        const json& o = j.at("orca");
        reject_unknown_keys(o, {"time_horizon", "neighbor_dist", "max_neighbors", "vpref_mean",
                                "vpref_sigma", "radius_mean", "radius_sigma", "radius_min",
                                "radius_max"},
                            "sim.orca");
        OrcaParams& p = sim.scenario.orca;
        read(o, "time_horizon", p.time_horizon);
        read(o, "neighbor_dist", p.neighbor_dist);
        read(o, "max_neighbors", p.max_neighbors);
        read(o, "vpref_mean", p.vpref_mean);
        read(o, "vpref_sigma", p.vpref_sigma);
        read(o, "radius_mean", p.radius_mean);
        read(o, "radius_sigma", p.radius_sigma);
        read(o, "radius_min", p.radius_min);
        read(o, "radius_max", p.radius_max);
    }
    if (sim.on_goal != "stand" && sim.on_goal != "resample") {
        throw std::runtime_error("config: sim.on_goal must be stand or resample");
    }
}

void parse_predictor(const json& j, PredictorConfig& p) {
    reject_unknown_keys(j, {"kind", "history", "horizon", "num_samples", "sigma_heading",
                            "sigma_speed", "social_repulsion", "repulsion_distance",
                            "repulsion_gain", "endpoint", "timeout_ms"},
                        "predictor");
    read(j, "kind", p.kind);
    read(j, "history", p.history);
    read(j, "horizon", p.horizon);
    read(j, "num_samples", p.num_samples);
    read(j, "sigma_heading", p.multimodal.sigma_heading);
    read(j, "sigma_speed", p.multimodal.sigma_speed);
    read(j, "social_repulsion", p.multimodal.social_repulsion);
    read(j, "repulsion_distance", p.multimodal.repulsion_distance);
    read(j, "repulsion_gain", p.multimodal.repulsion_gain);
    read(j, "endpoint", p.endpoint);
    read(j, "timeout_ms", p.timeout_ms);
    if (p.kind != "cvm" && p.kind != "linear" && p.kind != "multimodal" && p.kind != "external") {
        throw std::runtime_error("config: predictor.kind must be cvm|linear|multimodal|external");
    }
    if (p.history < 2) throw std::runtime_error("config: predictor.history must be >= 2");
    if (p.horizon < 1 || p.num_samples < 1) {
        throw std::runtime_error("config: predictor horizon and num_samples must be >= 1");
    }
}

void parse_training(const json& j, TrainingConfig& t) {
    reject_unknown_keys(j, {"il_episodes", "il_epochs", "il_lr", "il_safety_margin",
                            "rl_episodes", "rl_lr", "batches_per_episode", "eps_start", "eps_end",
                            "eps_decay_episodes", "target_update_interval", "validation_interval",
                            "validation_cases", "batch_size", "momentum", "buffer_capacity",
                            "gradient_threads"},
                        "value_net.training");
    read(j, "il_episodes", t.il_episodes);
    read(j, "il_epochs", t.il_epochs);
    read(j, "il_lr", t.il_lr);
    read(j, "il_safety_margin", t.il_safety_margin);
    read(j, "rl_episodes", t.rl_episodes);
    read(j, "rl_lr", t.rl_lr);
    read(j, "batches_per_episode", t.batches_per_episode);
    read(j, "eps_start", t.eps_start);
    read(j, "eps_end", t.eps_end);
    read(j, "eps_decay_episodes", t.eps_decay_episodes);
    read(j, "target_update_interval", t.target_update_interval);
    read(j, "validation_interval", t.validation_interval);
    read(j, "validation_cases", t.validation_cases);
    read(j, "batch_size", t.batch_size);
    read(j, "momentum", t.momentum);
    read(j, "buffer_capacity", t.buffer_capacity);
    read(j, "gradient_threads", t.gradient_threads);
}

void parse_value_net(const json& j, ValueNetSection& v) {
    reject_unknown_keys(j, {"kind", "embedding", "attention", "value_head", "gamma", "training"},
                        "value_net");
    read(j, "kind", v.kind);
    read(j, "embedding", v.net.embedding);
    read(j, "attention", v.net.attention);
    read(j, "value_head", v.net.value_head);
    read(j, "gamma", v.gamma);
    if (j.contains("training")) parse_training(j.at("training"), v.training);
    if (v.kind != "learned" && v.kind != "analytic") {
        throw std::runtime_error("config: value_net.kind must be learned or analytic");
    }
    if (v.gamma <= 0.0 || v.gamma >= 1.0) {
        throw std::runtime_error("config: value_net.gamma must be in (0, 1)");
    }
    v.training.gamma = v.gamma;
}

void parse_planner(const json& j, PlannerSection& p) {
    reject_unknown_keys(j, {"reward_threshold", "discomfort_dist", "epsilon_speed_frac",
                            "epsilon_heading_deg", "exploration_n", "aggregation", "kce_enabled",
                            "limits", "speed_samples", "heading_samples"},
                        "planner");
    read(j, "reward_threshold", p.reward_threshold);
    read(j, "discomfort_dist", p.discomfort_dist);
    read(j, "epsilon_speed_frac", p.epsilon_speed_frac);
    read(j, "epsilon_heading_deg", p.epsilon_heading_deg);
    read(j, "exploration_n", p.exploration_n);
    read(j, "aggregation", p.aggregation);
    read(j, "kce_enabled", p.kce_enabled);
    read(j, "speed_samples", p.speed_samples);
    read(j, "heading_samples", p.heading_samples);
    if (j.contains("limits")) {
        const json& l = j.at("limits");
        reject_unknown_keys(l, {"enabled", "a_max", "dtheta_max_deg"}, "planner.limits");
        read(l, "enabled", p.limits_enabled);
        read(l, "a_max", p.a_max);
        read(l, "dtheta_max_deg", p.dtheta_max_deg);
    }
    if (p.aggregation != "min" && p.aggregation != "mean" && p.aggregation != "weighted_mean") {
        throw std::runtime_error("config: planner.aggregation must be min|mean|weighted_mean");
    }
    if (p.exploration_n < 0 || p.epsilon_speed_frac <= 0.0 || p.epsilon_heading_deg <= 0.0) {
        throw std::runtime_error("config: planner exploration settings must be positive");
    }
}

void parse_experiment(const json& j, ExperimentSection& e) {
    reject_unknown_keys(j, {"num_cases", "base_seed", "mode", "workers", "save_logs"},
                        "experiment");
    read(j, "num_cases", e.num_cases);
    read(j, "base_seed", e.base_seed);
    read(j, "mode", e.mode);
    read(j, "workers", e.workers);
    read(j, "save_logs", e.save_logs);
    if (e.mode != "replan" && e.mode != "open_loop_8") {
        throw std::runtime_error("config: experiment.mode must be replan or open_loop_8");
    }
    if (e.num_cases < 1) throw std::runtime_error("config: experiment.num_cases must be >= 1");
}

}  // namespace

RunConfig RunConfig::from_json(const std::string& text) {
    const json j = json::parse(text);
    if (!j.is_object()) throw std::runtime_error("config: root must be an object");
    reject_unknown_keys(j, {"version", "sim", "predictor", "value_net", "planner", "experiment"},
                        "root");
    if (!j.contains("version")) throw std::runtime_error("config: missing required key version");
    RunConfig cfg;
    cfg.version = j.at("version").get<int>();
    if (cfg.version != 1) throw std::runtime_error("config: unsupported version");
    if (j.contains("sim")) parse_sim(j.at("sim"), cfg.sim);
    if (j.contains("predictor")) parse_predictor(j.at("predictor"), cfg.predictor);
    if (j.contains("value_net")) parse_value_net(j.at("value_net"), cfg.value_net);
    if (j.contains("planner")) parse_planner(j.at("planner"), cfg.planner);
    if (j.contains("experiment")) parse_experiment(j.at("experiment"), cfg.experiment);
    return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string RunConfig::to_json() const {
    json j;
    j["version"] = version;

    json& s = j["sim"];
    s["dt"] = sim.dt;
    s["time_limit"] = sim.time_limit;
    s["n_pedestrians"] = sim.n_pedestrians;
    s["circle_radius"] = sim.scenario.circle_radius;
    s["sigma_position"] = sim.scenario.sigma_position;
    s["visible_vehicle"] = sim.scenario.visible_vehicle;
    s["on_goal"] = sim.on_goal;
    s["max_placement_attempts"] = sim.scenario.max_placement_attempts;
    s["placement_margin"] = sim.scenario.placement_margin;
    s["vehicle"]["radius"] = sim.scenario.vehicle_radius;
    s["vehicle"]["v_pref"] = sim.scenario.vehicle_v_pref;
    json& o = s["orca"];
    o["time_horizon"] = sim.scenario.orca.time_horizon;
    o["neighbor_dist"] = sim.scenario.orca.neighbor_dist;
    o["max_neighbors"] = sim.scenario.orca.max_neighbors;
    o["vpref_mean"] = sim.scenario.orca.vpref_mean;
    o["vpref_sigma"] = sim.scenario.orca.vpref_sigma;
    o["radius_mean"] = sim.scenario.orca.radius_mean;
    o["radius_sigma"] = sim.scenario.orca.radius_sigma;
    o["radius_min"] = sim.scenario.orca.radius_min;
    o["radius_max"] = sim.scenario.orca.radius_max;

    json& p = j["predictor"];
    p["kind"] = predictor.kind;
    p["history"] = predictor.history;
    p["horizon"] = predictor.horizon;
    p["num_samples"] = predictor.num_samples;
    p["sigma_heading"] = predictor.multimodal.sigma_heading;
    p["sigma_speed"] = predictor.multimodal.sigma_speed;
    p["social_repulsion"] = predictor.multimodal.social_repulsion;
    p["repulsion_distance"] = predictor.multimodal.repulsion_distance;
    p["repulsion_gain"] = predictor.multimodal.repulsion_gain;
    p["endpoint"] = predictor.endpoint;
    p["timeout_ms"] = predictor.timeout_ms;

    json& v = j["value_net"];
    v["kind"] = value_net.kind;
    v["embedding"] = value_net.net.embedding;
    v["attention"] = value_net.net.attention;
    v["value_head"] = value_net.net.value_head;
    v["gamma"] = value_net.gamma;
    json& t = v["training"];
    t["il_episodes"] = value_net.training.il_episodes;
    t["il_epochs"] = value_net.training.il_epochs;
    t["il_lr"] = value_net.training.il_lr;
    t["il_safety_margin"] = value_net.training.il_safety_margin;
    t["rl_episodes"] = value_net.training.rl_episodes;
    t["rl_lr"] = value_net.training.rl_lr;
    t["batches_per_episode"] = value_net.training.batches_per_episode;
    t["eps_start"] = value_net.training.eps_start;
    t["eps_end"] = value_net.training.eps_end;
    t["eps_decay_episodes"] = value_net.training.eps_decay_episodes;
    t["target_update_interval"] = value_net.training.target_update_interval;
    t["validation_interval"] = value_net.training.validation_interval;
    t["validation_cases"] = value_net.training.validation_cases;
    t["batch_size"] = value_net.training.batch_size;
    t["momentum"] = value_net.training.momentum;
    t["buffer_capacity"] = value_net.training.buffer_capacity;
    t["gradient_threads"] = value_net.training.gradient_threads;

    json& pl = j["planner"];
    pl["reward_threshold"] = planner.reward_threshold;
    pl["discomfort_dist"] = planner.discomfort_dist;
    pl["epsilon_speed_frac"] = planner.epsilon_speed_frac;
    pl["epsilon_heading_deg"] = planner.epsilon_heading_deg;
    pl["exploration_n"] = planner.exploration_n;
    pl["aggregation"] = planner.aggregation;
    pl["kce_enabled"] = planner.kce_enabled;
    pl["limits"]["enabled"] = planner.limits_enabled;
    pl["limits"]["a_max"] = planner.a_max;
    pl["limits"]["dtheta_max_deg"] = planner.dtheta_max_deg;
    pl["speed_samples"] = planner.speed_samples;
    pl["heading_samples"] = planner.heading_samples;

    json& e = j["experiment"];
    e["num_cases"] = experiment.num_cases;
    e["base_seed"] = experiment.base_seed;
    e["mode"] = experiment.mode;
    e["workers"] = experiment.workers;
    e["save_logs"] = experiment.save_logs;

    return j.dump(2) + "\n";
}

SimConfig make_sim_config(const RunConfig& cfg) {
    SimConfig sim;
    sim.dt = cfg.sim.dt;
    sim.time_limit = cfg.sim.time_limit;
    sim.orca = cfg.sim.scenario.orca;
    sim.on_goal = cfg.sim.on_goal == "resample" ? OnGoalBehavior::Resample : OnGoalBehavior::Stand;
    return sim;
}

PlannerConfig make_planner_config(const RunConfig& cfg) {
    PlannerConfig p;
    p.gamma = cfg.value_net.gamma;
    p.dt = cfg.sim.dt;
    p.reward_threshold = cfg.planner.reward_threshold;
    p.discomfort_dist = cfg.planner.discomfort_dist;
    p.epsilon_speed_frac = cfg.planner.epsilon_speed_frac;
    p.epsilon_heading = cfg.planner.epsilon_heading_deg * M_PI / 180.0;
    p.exploration_n = cfg.planner.exploration_n;
    p.aggregation = cfg.planner.aggregation == "mean"
                        ? Aggregation::Mean
                        : (cfg.planner.aggregation == "weighted_mean" ? Aggregation::WeightedMean
                                                                      : Aggregation::Min);
    p.kce_enabled = cfg.planner.kce_enabled;
    if (cfg.planner.limits_enabled) {
        p.limits = KinematicLimits::from_acceleration(
            cfg.planner.a_max, cfg.planner.dtheta_max_deg * M_PI / 180.0, cfg.sim.dt);
    }
    p.speed_samples = cfg.planner.speed_samples;
    p.heading_samples = cfg.planner.heading_samples;
    return p;
}

TrainingConfig make_training_config(const RunConfig& cfg) {
    TrainingConfig t = cfg.value_net.training;
    t.gamma = cfg.value_net.gamma;
    return t;
}

ExperimentConfig make_experiment_config(const RunConfig& cfg) {
    ExperimentConfig e;
    e.scenario = cfg.sim.scenario;
    e.n_pedestrians = cfg.sim.n_pedestrians;
    e.episode.sim = make_sim_config(cfg);
    e.episode.mode = cfg.experiment.mode == "open_loop_8" ? PlanningMode::OpenLoop8
                                                          : PlanningMode::ReplanEveryStep;
    e.episode.track_k = cfg.predictor.history;
    e.num_cases = cfg.experiment.num_cases;
    e.base_seed = cfg.experiment.base_seed;
    e.workers = cfg.experiment.workers;
    e.keep_logs = cfg.experiment.save_logs;
    return e;
}

PredictorFn make_predictor(const RunConfig& cfg, std::uint64_t episode_seed) {
    const PredictorConfig& p = cfg.predictor;
    const std::size_t horizon = p.horizon;
    if (p.kind == "cvm") {
        return [horizon](const ObservedTracks& tracks) { return predict_cvm(tracks, horizon); };
    }
    if (p.kind == "linear") {
        return [horizon](const ObservedTracks& tracks) { return predict_linear(tracks, horizon); };
    }
    if (p.kind == "multimodal") {
        const std::size_t m = p.num_samples;
        const MultimodalConfig mcfg = p.multimodal;
        // One derived seed per call, in call order, so an episode is
        // reproducible from its seed alone.
        auto counter = std::make_shared<std::uint64_t>(0);
        return [horizon, m, mcfg, episode_seed, counter](const ObservedTracks& tracks) {
            const std::uint64_t call_seed = Rng::derive_seed(episode_seed, (*counter)++);
            return predict_multimodal(tracks, horizon, m, call_seed, mcfg);
        };
    }
    if (p.kind == "external") {
        auto client = std::make_shared<ExternalPredictor>(p.endpoint, p.timeout_ms);
        const std::size_t m = p.num_samples;
        return [client, horizon, m](const ObservedTracks& tracks) {
            return client->predict(tracks, horizon, m);
        };
    }
    throw std::runtime_error("config: unknown predictor kind " + p.kind);
}

}  // namespace crowdnav
