#pragma once

#include <cstdint>
#include <string>

#include "crowdnav/eval/experiment.hpp"
#include "crowdnav/value/training.hpp"

namespace crowdnav {

struct PredictorConfig {
    std::string kind = "cvm";  // cvm | linear | multimodal | external
    std::size_t history = 8;   // observed points k
    std::size_t horizon = 8;   // predicted points H
    std::size_t num_samples = 1;
    MultimodalConfig multimodal;
    std::string endpoint;  // external only
    int timeout_ms = 2000;
};

struct ValueNetSection {
    std::string kind = "learned";  // learned | analytic
    ValueNetConfig net;
    double gamma = 0.9;
    TrainingConfig training;
};

struct PlannerSection {
    double reward_threshold = 0.1;
    double discomfort_dist = 0.2;
    double epsilon_speed_frac = 0.1;
    double epsilon_heading_deg = 6.0;
    int exploration_n = 2;
    std::string aggregation = "min";  // min | mean | weighted_mean
    bool kce_enabled = true;
    bool limits_enabled = false;
    double a_max = 6.4;             // m/s^2
    double dtheta_max_deg = 120.0;  // per step
    int speed_samples = 5;
    int heading_samples = 16;
};

struct SimSection {
    double dt = 0.25;
    double time_limit = 25.0;
    int n_pedestrians = 5;
    ScenarioConfig scenario;
    std::string on_goal = "stand";  // stand | resample
};

struct ExperimentSection {
    int num_cases = 100;
    std::uint64_t base_seed = 1000;
    std::string mode = "replan";  // replan | open_loop_8
    int workers = 0;
    bool save_logs = true;
};

// Full run configuration; loads from strict JSON (unknown keys rejected,
// version required) and round-trips through `config dump`.
struct RunConfig {
    int version = 1;
    SimSection sim;
    PredictorConfig predictor;
    ValueNetSection value_net;
    PlannerSection planner;
    ExperimentSection experiment;

    static RunConfig from_json(const std::string& text);
    static RunConfig from_file(const std::string& path);
    std::string to_json() const;  // every effective value, dump-ready
};

// Resolution into runtime structures.
SimConfig make_sim_config(const RunConfig& cfg);
PlannerConfig make_planner_config(const RunConfig& cfg);
TrainingConfig make_training_config(const RunConfig& cfg);
ExperimentConfig make_experiment_config(const RunConfig& cfg);

// Per-episode predictor instance (stochastic predictors derive their stream
// from the episode seed; external predictors own one connection).
PredictorFn make_predictor(const RunConfig& cfg, std::uint64_t episode_seed);

}  // namespace crowdnav
