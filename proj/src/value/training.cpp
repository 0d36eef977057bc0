#include "crowdnav/value/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "crowdnav/util/rng.hpp"

namespace crowdnav {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    data_.reserve(capacity_);
}

void ReplayBuffer::push(TrainingSample sample) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(sample));
    } else {
        data_[cursor_] = std::move(sample);
        cursor_ = (cursor_ + 1) % capacity_;
    }
}

void SgdOptimizer::step(ValueNetParams& params, const ValueNetParams& grads) {
    std::vector<double*> p = params.flat();
    std::vector<const double*> g = grads.flat();
    if (velocity_.empty()) velocity_.assign(p.size(), 0.0);
    if (p.size() != g.size() || p.size() != velocity_.size()) {
        throw std::invalid_argument("SgdOptimizer: parameter/gradient shape mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
        velocity_[i] = momentum_ * velocity_[i] - lr_ * *g[i];
        *p[i] += velocity_[i];
    }
}

ValueNetGrads gradient_mt(const ValueNetParams& params, const std::vector<TrainingSample>& batch,
                          int threads) {
    if (batch.empty()) throw std::invalid_argument("gradient_mt: batch must be nonempty");
    const int chunks = std::max(1, threads);
    if (chunks == 1 || batch.size() < 2) return gradient(params, batch);

    std::vector<ValueNetParams> accums;
    std::vector<double> losses(static_cast<std::size_t>(chunks), 0.0);
    accums.reserve(static_cast<std::size_t>(chunks));
    for (int c = 0; c < chunks; ++c) accums.push_back(ValueNetParams::zeros(params.config));

    const std::size_t per = (batch.size() + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    for (int c = 1; c < chunks; ++c) {
        const std::size_t begin = per * static_cast<std::size_t>(c);
        if (begin >= batch.size()) break;
        const std::size_t count = std::min(per, batch.size() - begin);
        pool.emplace_back([&, c, begin, count] {
            losses[c] = gradient_accumulate(params, batch.data() + begin, count, accums[c]);
        });
    }
    losses[0] = gradient_accumulate(params, batch.data(), std::min(per, batch.size()), accums[0]);
    for (std::thread& t : pool) t.join();

    // Merge in chunk order so the result is independent of scheduling.
    ValueNetGrads out;
    out.shape = std::move(accums[0]);
    out.loss = losses[0];
    std::vector<double*> total = out.shape.flat();
    for (int c = 1; c < chunks; ++c) {
        out.loss += losses[c];
        std::vector<double*> part = accums[c].flat();
        for (std::size_t i = 0; i < total.size(); ++i) *total[i] += *part[i];
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv_n;
    for (double* g : total) *g *= inv_n;
    return out;
}

std::string curve_to_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "phase,index,loss,epsilon,success_rate,buffer_size\n";
    char buf[160];
    for (const CurvePoint& p : curve) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%.8g,%.4g,%.4g,%zu\n", p.phase.c_str(), p.index,
                      p.loss, p.epsilon, p.success_rate, p.buffer_size);
        out += buf;
    }
    return out;
}

namespace {

void flush_curve(const TrainingConfig& cfg, const std::vector<CurvePoint>* curve) {
    if (cfg.curve_path.empty() || !curve) return;
    std::ofstream out(cfg.curve_path);
    if (out) out << curve_to_csv(*curve);
}

struct Rollout {
    std::vector<EgoJointState> states;  // ego view of s_t, t = 0..T-1
    std::vector<EgoJointState> next_states;
    std::vector<double> rewards;
    std::vector<bool> terminal;
    bool success = false;
};

double step_discount(double gamma, double dt, double v_pref) {
    return std::pow(gamma, dt * v_pref);
}

Action orca_demo_action(const JointState& js, const OrcaParams& orca, double safety_margin,
                        double dt) {
    OrcaAgent self;
    self.position = js.vehicle.position;
    self.velocity = js.vehicle.velocity;
    self.radius = js.vehicle.radius + safety_margin;
    self.max_speed = js.vehicle.v_pref;
    const Vec2 to_goal = js.vehicle.goal - js.vehicle.position;
    self.pref_velocity = to_goal.norm() > 0.0 ? to_goal.normalized() * js.vehicle.v_pref
                                              : Vec2{0.0, 0.0};
    std::vector<OrcaAgent> neighbors;
    neighbors.reserve(js.pedestrians.size());
    for (const PedestrianState& p : js.pedestrians) {
        OrcaAgent agent;
        agent.position = p.position;
        agent.velocity = p.velocity;
        agent.radius = p.radius;
        agent.max_speed = 1.0;
        agent.pref_velocity = p.velocity;
        neighbors.push_back(agent);
    }
    Vec2 v = orca_single(self, neighbors, orca, dt);
    const double speed = v.norm();
    if (speed > js.vehicle.v_pref) v = v * (js.vehicle.v_pref / speed);
    return Action::from_velocity(v);
}

Rollout run_demo_episode(Environment& env, const TrainingConfig& cfg,
                         const PlannerConfig& planner_cfg) {
    Rollout rollout;
    Action prev = Action{0.0, env.state().vehicle.heading};
    while (!env.done()) {
        const JointState before = env.state();
        const Action a =
            orca_demo_action(before, env.config().orca, cfg.il_safety_margin, env.config().dt);
        const Transition tr = env.step(a);
        rollout.states.push_back(to_ego_frame(before));
        rollout.next_states.push_back(to_ego_frame(tr.next));
        rollout.rewards.push_back(reward(tr.d_min, tr.reached_goal, a, prev, planner_cfg));
        rollout.terminal.push_back(tr.terminal());
        rollout.success = tr.reached_goal;
        prev = a;
    }
    return rollout;
}

std::vector<TrainingSample> minibatch(const ReplayBuffer& buffer, int batch_size, Rng& rng) {
    std::vector<TrainingSample> batch;
    const std::size_t n = std::min<std::size_t>(buffer.size(), static_cast<std::size_t>(batch_size));
    batch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        batch.push_back(buffer.at(rng.uniform_index(buffer.size())));
    }
    return batch;
}

}  // namespace

ValueNetParams train_imitation(const EnvFactory& env_factory, int episodes, ValueNetParams params,
                               ReplayBuffer& buffer, const TrainingConfig& cfg,
                               const PlannerConfig& planner_cfg,
                               std::vector<CurvePoint>* curve) {
    if (episodes < 1) throw std::invalid_argument("train_imitation: episodes must be >= 1");

    for (int e = 0; e < episodes; ++e) {
        Environment env = env_factory(Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(e)));
        const double discount =
            step_discount(cfg.gamma, env.config().dt, env.state().vehicle.v_pref);
        const Rollout rollout = run_demo_episode(env, cfg, planner_cfg);
        // Label every visited state with its discounted return.
        double g = 0.0;
        std::vector<double> returns(rollout.rewards.size());
        for (std::size_t t = rollout.rewards.size(); t-- > 0;) {
            g = rollout.rewards[t] + discount * g;
            returns[t] = g;
        }
        for (std::size_t t = 0; t < rollout.states.size(); ++t) {
            buffer.push({rollout.states[t], returns[t]});
        }
    }

    Rng rng(Rng::derive_seed(cfg.seed, 0x11));
    SgdOptimizer optimizer(cfg.il_lr, cfg.momentum);
    std::vector<std::size_t> order(buffer.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.il_epochs; ++epoch) {
        // Fisher-Yates pass over the sample order.
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng.uniform_index(i)]);
        }
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t begin = 0; begin < order.size();
             begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            std::vector<TrainingSample> batch;
            batch.reserve(end - begin);
            for (std::size_t i = begin; i < end; ++i) batch.push_back(buffer.at(order[i]));
            const ValueNetGrads grads = gradient_mt(params, batch, cfg.gradient_threads);
            optimizer.step(params, grads.shape);
            loss_sum += grads.loss;
            ++batches;
        }
        if (curve) {
            curve->push_back({"il", epoch, batches ? loss_sum / static_cast<double>(batches) : 0.0,
                              0.0, 0.0, buffer.size()});
            flush_curve(cfg, curve);
        }
    }
    return params;
}

double evaluate_success(const EnvFactory& env_factory, const ValueNetParams& params,
                        const PlannerConfig& planner_cfg, std::uint64_t seed_base, int cases) {
    const ValueFunction value_fn = [&params](const EgoJointState& ego) {
        return value_forward(ego, params);
    };
    int successes = 0;
    for (int i = 0; i < cases; ++i) {
        Environment env = env_factory(seed_base + static_cast<std::uint64_t>(i));
        TrackHistory history(2, env.config().dt);
        Action prev{0.0, env.state().vehicle.heading};
        while (!env.done()) {
            history.observe(env.state().pedestrians);
            const PredictionSet preds = predict_cvm(history.tracks(), 1);
            const ActionSpace space =
                initial_space_for(env.state().vehicle.v_pref, prev, planner_cfg);
            const ScoredAction choice =
                select_initial(space, preds, env.state(), value_fn, planner_cfg);
            const Transition tr = env.step(choice.action);
            prev = choice.action;
            if (tr.reached_goal) ++successes;
        }
    }
    return static_cast<double>(successes) / static_cast<double>(cases);
}

ValueNetParams train_rl(const EnvFactory& env_factory, int episodes, ValueNetParams params,
                        ReplayBuffer& buffer, const TrainingConfig& cfg,
                        const PlannerConfig& planner_cfg,
                        std::vector<CurvePoint>* curve) {
    Rng rng(Rng::derive_seed(cfg.seed, 0x21));
    SgdOptimizer optimizer(cfg.rl_lr, cfg.momentum);
    ValueNetParams target = params;
    ValueNetParams best = params;
    double best_success = -1.0;

    const ValueFunction value_fn = [&params](const EgoJointState& ego) {
        return value_forward(ego, params);
    };

    if (cfg.validation_interval > 0) {
        const double success =
            evaluate_success(env_factory, params, planner_cfg,
                             Rng::derive_seed(cfg.seed, 0x7a1ULL), cfg.validation_cases);
        best_success = success;
        if (curve) {
            curve->push_back({"rl_val", -1, 0.0, cfg.eps_start, success, buffer.size()});
            flush_curve(cfg, curve);
        }
    }

    for (int e = 0; e < episodes; ++e) {
        const double frac =
            cfg.eps_decay_episodes > 0
                ? std::min(1.0, static_cast<double>(e) / cfg.eps_decay_episodes)
                : 1.0;
        const double epsilon = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;

        Environment env =
            env_factory(Rng::derive_seed(cfg.seed, 0x52151ULL + static_cast<std::uint64_t>(e)));
        const double discount =
            step_discount(cfg.gamma, env.config().dt, env.state().vehicle.v_pref);
        TrackHistory history(2, env.config().dt);
        Action prev{0.0, env.state().vehicle.heading};

        Rollout rollout;
        while (!env.done()) {
            const JointState before = env.state();
            history.observe(before.pedestrians);
            const PredictionSet preds = predict_cvm(history.tracks(), 1);
            const ActionSpace space = initial_space_for(before.vehicle.v_pref, prev, planner_cfg);
            Action a;
            if (rng.uniform() < epsilon) {
                a = space.actions[rng.uniform_index(space.actions.size())];
            } else {
                a = select_initial(space, preds, before, value_fn, planner_cfg).action;
            }
            const Transition tr = env.step(a);
            rollout.states.push_back(to_ego_frame(before));
            rollout.next_states.push_back(to_ego_frame(tr.next));
            rollout.rewards.push_back(reward(tr.d_min, tr.reached_goal, a, prev, planner_cfg));
            rollout.terminal.push_back(tr.terminal());
            prev = a;
        }

        for (std::size_t t = 0; t < rollout.states.size(); ++t) {
            const double y =
                td_target(rollout.rewards[t], rollout.terminal[t], discount,
                          rollout.terminal[t] ? 0.0
                                              : value_forward(rollout.next_states[t], target));
            buffer.push({rollout.states[t], y});
        }

        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batches_per_episode && buffer.size() > 0; ++b) {
            const std::vector<TrainingSample> batch = minibatch(buffer, cfg.batch_size, rng);
            const ValueNetGrads grads = gradient_mt(params, batch, cfg.gradient_threads);
            optimizer.step(params, grads.shape);
            loss_sum += grads.loss;
        }
        if (curve) {
            curve->push_back({"rl", e,
                              cfg.batches_per_episode > 0
                                  ? loss_sum / static_cast<double>(cfg.batches_per_episode)
                                  : 0.0,
                              epsilon, 0.0, buffer.size()});
        }

        if ((e + 1) % cfg.target_update_interval == 0) target = params;

        if (cfg.validation_interval > 0 && (e + 1) % cfg.validation_interval == 0) {
            const double success = evaluate_success(
                env_factory, params, planner_cfg,
                Rng::derive_seed(cfg.seed, 0x7a1ULL), cfg.validation_cases);
            if (curve) {
                curve->push_back({"rl_val", e, 0.0, epsilon, success, buffer.size()});
                flush_curve(cfg, curve);
            }
            if (!cfg.checkpoint_dir.empty()) {
                save_params(params,
                            cfg.checkpoint_dir + "/checkpoint_ep" + std::to_string(e + 1) + ".json");
            }
            if (success >= best_success) {
                best_success = success;
                best = params;
            }
        }
    }

    // Prefer the best validated checkpoint when validation ran at all.
    if (best_success >= 0.0) {
        const double final_success =
            evaluate_success(env_factory, params, planner_cfg,
                             Rng::derive_seed(cfg.seed, 0x7a1ULL), cfg.validation_cases);
        if (curve) curve->push_back({"rl_val", episodes, 0.0, cfg.eps_end, final_success, buffer.size()});
        if (final_success >= best_success) return params;
        return best;
    }
    return params;
}

}  // namespace crowdnav
