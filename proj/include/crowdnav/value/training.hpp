#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crowdnav/planner/planner.hpp"
#include "crowdnav/sim/environment.hpp"
#include "crowdnav/value/network.hpp"

namespace crowdnav {

// Bounded FIFO store of (ego state, target value) pairs.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity);

    void push(TrainingSample sample);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    const TrainingSample& at(std::size_t i) const { return data_[i]; }

  private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<TrainingSample> data_;
};

struct TrainingConfig {
    int il_episodes = 3000;
    int il_epochs = 60;
    double il_lr = 0.01;
    double il_safety_margin = 0.15;  // extra ORCA clearance for the demo driver

    int rl_episodes = 5000;
    double rl_lr = 0.001;
    int batches_per_episode = 40;
    double eps_start = 0.25;
    double eps_end = 0.1;
    int eps_decay_episodes = 2000;
    int target_update_interval = 50;   // episodes between target-net refreshes
    int validation_interval = 200;     // episodes between held-out evaluations
    int validation_cases = 50;

    int batch_size = 100;
    double momentum = 0.9;
    double gamma = 0.9;
    std::size_t buffer_capacity = 100000;
    std::uint64_t seed = 17;
    int gradient_threads = 2;  // fixed chunking keeps results thread-count independent
    std::string curve_path;       // when set, the curve CSV is flushed as training goes
    std::string checkpoint_dir;   // when set, params are saved at each validation
};

using EnvFactory = std::function<Environment(std::uint64_t episode_seed)>;

// One row per logged training event; written as CSV by the CLI.
struct CurvePoint {
    std::string phase;  // "il" | "rl" | "rl_val"
    int index = 0;      // epoch or episode
    double loss = 0.0;
    double epsilon = 0.0;
    double success_rate = 0.0;
    std::size_t buffer_size = 0;
};

std::string curve_to_csv(const std::vector<CurvePoint>& curve);

// SGD with momentum over the flat parameter vector.
class SgdOptimizer {
  public:
    SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {}
    void set_lr(double lr) { lr_ = lr; }
    void step(ValueNetParams& params, const ValueNetParams& grads);

  private:
    double lr_;
    double momentum_;
    std::vector<double> velocity_;
};

// Deterministic two-chunk parallel version of gradient(); identical output
// regardless of available cores.
ValueNetGrads gradient_mt(const ValueNetParams& params, const std::vector<TrainingSample>& batch,
                          int threads);

// y = r + discount * V(next); terminal transitions do not bootstrap.
inline double td_target(double reward, bool terminal, double discount, double next_value) {
    return terminal ? reward : reward + discount * next_value;
}

// Collects ORCA-driven demonstrations, labels visited states with discounted
// returns, and regresses the value net on them.
ValueNetParams train_imitation(const EnvFactory& env_factory, int episodes, ValueNetParams params,
                               ReplayBuffer& buffer, const TrainingConfig& cfg,
                               const PlannerConfig& planner_cfg,
                               std::vector<CurvePoint>* curve = nullptr);

// Epsilon-greedy temporal-difference training: rollouts pick actions through
// the planner's first pass, targets are r + gamma^(dt*v_pref) * V(next).
ValueNetParams train_rl(const EnvFactory& env_factory, int episodes, ValueNetParams params,
                        ReplayBuffer& buffer, const TrainingConfig& cfg,
                        const PlannerConfig& planner_cfg,
                        std::vector<CurvePoint>* curve = nullptr);

// Greedy success rate over a held-out seed block; used for validation during
// RL and by tests.
double evaluate_success(const EnvFactory& env_factory, const ValueNetParams& params,
                        const PlannerConfig& planner_cfg, std::uint64_t seed_base, int cases);

}  // namespace crowdnav
