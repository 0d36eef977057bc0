#include "crowdnav/eval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "crowdnav/predict/external.hpp"

namespace crowdnav {

namespace {

Action orca_baseline_action(const JointState& js, const OrcaParams& orca, double safety_margin,
                            double dt) {
    OrcaAgent self;
    self.position = js.vehicle.position;
    self.velocity = js.vehicle.velocity;
    self.radius = js.vehicle.radius + safety_margin;
    self.max_speed = js.vehicle.v_pref;
    const Vec2 to_goal = js.vehicle.goal - js.vehicle.position;
    self.pref_velocity =
        to_goal.norm() > 0.0 ? to_goal.normalized() * js.vehicle.v_pref : Vec2{0.0, 0.0};
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

// Plans open_loop_window consecutive actions from one observation, advancing
// pedestrians along each prediction sample instead of re-observing.
std::vector<Action> plan_open_loop(const JointState& observed, const PredictionSet& preds,
                                   const Action& prev_action, const PolicySpec& policy,
                                   std::size_t window, double dt) {
    const std::size_t n = observed.pedestrians.size();
    const std::size_t m = n == 0 ? 1 : preds.num_samples;
    if (n > 0 && preds.horizon < window) {
        throw std::invalid_argument("open-loop planning needs horizon >= window");
    }

    std::vector<Action> plan;
    plan.reserve(window);
    VehicleState vehicle = observed.vehicle;
    Action prev = prev_action;

    // Per-sample pedestrian states, advanced through the predicted points.
    std::vector<std::vector<PedestrianState>> sample_peds(m, observed.pedestrians);
    for (std::size_t h = 0; h < window; ++h) {
        std::vector<PredictedWorld> worlds(m);
        for (std::size_t s = 0; s < m; ++s) {
            PredictedWorld& world = worlds[s];
            world.weight = preds.weights.empty() ? 1.0 / static_cast<double>(m) : preds.weights[s];
            world.before = sample_peds[s];
            world.after.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 next_pos = preds.trajectories[i][s][h];
                PedestrianState ped = sample_peds[s][i];
                ped.velocity = (next_pos - ped.position) / dt;
                ped.position = next_pos;
                world.after[i] = ped;
            }
        }
        const PlanResult result = plan_on_worlds(worlds, vehicle, prev, policy.value_fn, policy.planner);
        plan.push_back(result.action);
        vehicle = propagate(vehicle, result.action, dt);
        prev = result.action;
        for (std::size_t s = 0; s < m; ++s) sample_peds[s] = worlds[s].after;
    }
    return plan;
}

}  // namespace

EpisodeLog run_episode(const Scenario& scenario, const PolicySpec& policy,
                       const EpisodeOptions& options) {
    Environment env(scenario, options.sim);
    const double dt = options.sim.dt;

    EpisodeLog log;
    log.dt = dt;
    log.seed = scenario.seed;
    log.scenario = scenario;
    log.scenario_hash = scenario_hash(scenario);

    // Rewards are logged with the policy's planner settings (reward shaping
    // only depends on them, not on the policy kind).
    const PlannerConfig& reward_cfg = policy.planner;

    TrackHistory history(options.track_k, dt);
    Action prev{0.0, env.state().vehicle.heading};
    std::vector<Action> queued;
    std::size_t queue_pos = 0;

    try {
        while (!env.done()) {
            const JointState before = env.state();
            history.observe(before.pedestrians);

            Action a;
            switch (policy.kind) {
                case PolicySpec::Kind::Planner:
                    if (options.mode == PlanningMode::OpenLoop8) {
                        if (queue_pos >= queued.size()) {
                            const PredictionSet preds = policy.predictor(history.tracks());
                            queued = plan_open_loop(before, preds, prev, policy,
                                                    options.open_loop_window, dt);
                            queue_pos = 0;
                        }
                        a = queued[queue_pos++];
                    } else {
                        a = plan_step(before, history.tracks(), prev, policy.value_fn,
                                      policy.predictor, policy.planner)
                                .action;
                    }
                    break;
                case PolicySpec::Kind::OrcaBaseline:
                    a = orca_baseline_action(before, policy.orca, policy.orca_safety_margin, dt);
                    break;
                case PolicySpec::Kind::Custom:
                    a = policy.custom(before, prev);
                    break;
            }

            const Transition tr = env.step(a);
            if (policy.kind == PolicySpec::Kind::Planner &&
                std::isfinite(policy.planner.limits.a_max)) {
                const Vec2 prev_v = log.steps.empty() ? Vec2{0, 0}
                                                      : log.steps.back().vehicle_velocity;
                if ((tr.next.vehicle.velocity - prev_v).norm() / dt >
                    policy.planner.limits.a_max + 1e-9) {
                    throw std::logic_error("acceleration cap invariant violated");
                }
            }
            StepRecord record;
            record.t = tr.next.time;
            record.vehicle_position = tr.next.vehicle.position;
            record.vehicle_velocity = tr.next.vehicle.velocity;
            record.action = a;
            record.reward = reward(tr.d_min, tr.reached_goal, a, prev, reward_cfg);
            record.d_min = tr.d_min;
            record.pedestrians = tr.next.pedestrians;
            log.steps.push_back(std::move(record));
            prev = a;

            if (tr.reached_goal) {
                log.outcome = Outcome::Success;
                log.time_to_goal = tr.next.time;
            } else if (tr.collided) {
                log.outcome = Outcome::Collision;
            } else if (tr.timed_out) {
                log.outcome = Outcome::Timeout;
            }
        }
    } catch (const PredictorError& err) {
        log.outcome = Outcome::Aborted;
        log.error = err.what();
    }
    return log;
}

MonteCarloOutput monte_carlo(const ExperimentConfig& config, const PolicyFactory& policy_factory) {
    const int cases = config.num_cases;
    if (cases < 1) throw std::invalid_argument("monte_carlo: num_cases must be >= 1");

    std::vector<EpisodeLog> logs(static_cast<std::size_t>(cases));
    std::vector<std::string> failures(static_cast<std::size_t>(cases));

    const auto run_one = [&](int index) {
        const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(index);
        try {
            const Scenario scenario =
                generate_scenario(config.n_pedestrians, seed, config.scenario);
            const PolicySpec policy = policy_factory(seed);
            logs[static_cast<std::size_t>(index)] = run_episode(scenario, policy, config.episode);
        } catch (const std::exception& e) {
            EpisodeLog& log = logs[static_cast<std::size_t>(index)];
            log.seed = seed;
            log.dt = config.episode.sim.dt;
            log.outcome = Outcome::Aborted;
            log.error = e.what();
        }
    };

    int workers = config.workers > 0 ? config.workers
                                     : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min(workers, cases));
    if (workers == 1) {
        for (int i = 0; i < cases; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const int i = next.fetch_add(1);
                    if (i >= cases) return;
                    run_one(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    MonteCarloOutput out;
    out.episodes.reserve(static_cast<std::size_t>(cases));
    Metrics& m = out.metrics;
    m.num_cases = cases;
    double time_sum = 0.0;
    for (const EpisodeLog& log : logs) {
        EpisodeResult r;
        r.seed = log.seed;
        r.scenario_hash = log.scenario_hash;
        r.outcome = log.outcome;
        r.time = log.steps.empty() ? 0.0 : log.steps.back().t;
        r.max_acc = log.max_acceleration();
        for (const StepRecord& s : log.steps) r.min_d_min = std::min(r.min_d_min, s.d_min);
        out.episodes.push_back(r);

        switch (log.outcome) {
            case Outcome::Success:
                ++m.successes;
                time_sum += log.time_to_goal;
                break;
            case Outcome::Collision: ++m.collisions; break;
            case Outcome::Timeout: ++m.timeouts; break;
            case Outcome::Aborted: ++m.aborted; break;
        }
        m.episode_max_acceleration.push_back(r.max_acc);
        m.max_acceleration = std::max(m.max_acceleration, r.max_acc);
    }
    const int counted = cases - m.aborted;
    if (counted > 0) {
        m.success_rate = static_cast<double>(m.successes) / counted;
        m.collision_rate = static_cast<double>(m.collisions) / counted;
        m.timeout_rate = static_cast<double>(m.timeouts) / counted;
    }
    if (m.successes > 0) m.mean_time_success = time_sum / m.successes;
    if (config.keep_logs) out.logs = std::move(logs);
    return out;
}

Metrics metrics_from_logs(const std::vector<EpisodeLog>& logs) {
    Metrics m;
    m.num_cases = static_cast<int>(logs.size());
    double time_sum = 0.0;
    for (const EpisodeLog& log : logs) {
        switch (log.outcome) {
            case Outcome::Success:
                ++m.successes;
                time_sum += log.time_to_goal;
                break;
            case Outcome::Collision: ++m.collisions; break;
            case Outcome::Timeout: ++m.timeouts; break;
            case Outcome::Aborted: ++m.aborted; break;
        }
        const double acc = log.max_acceleration();
        m.episode_max_acceleration.push_back(acc);
        m.max_acceleration = std::max(m.max_acceleration, acc);
    }
    const int counted = m.num_cases - m.aborted;
    if (counted > 0) {
        m.success_rate = static_cast<double>(m.successes) / counted;
        m.collision_rate = static_cast<double>(m.collisions) / counted;
        m.timeout_rate = static_cast<double>(m.timeouts) / counted;
    }
    if (m.successes > 0) m.mean_time_success = time_sum / m.successes;
    return m;
}

ComparisonReport ablation_compare(const std::vector<EpisodeResult>& a,
                                  const std::vector<EpisodeResult>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("ablation_compare: experiments ran different case counts");
    }
    ComparisonReport report;
    double rel_time_sum = 0.0;
    int rel_time_count = 0;
    double rel_acc_sum = 0.0;
    int rel_acc_count = 0;
    int successes_a = 0, successes_b = 0;

    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].seed != b[i].seed || a[i].scenario_hash != b[i].scenario_hash) {
            throw std::invalid_argument("ablation_compare: seed " + std::to_string(a[i].seed) +
                                        " does not pair with an identical scenario");
        }
        ComparisonRow row;
        row.seed = a[i].seed;
        row.success_a = a[i].outcome == Outcome::Success;
        row.success_b = b[i].outcome == Outcome::Success;
        row.time_a = a[i].time;
        row.time_b = b[i].time;
        row.max_acc_a = a[i].max_acc;
        row.max_acc_b = b[i].max_acc;
        report.rows.push_back(row);

        successes_a += row.success_a ? 1 : 0;
        successes_b += row.success_b ? 1 : 0;
        if (row.success_a && row.success_b && row.time_a > 0.0) {
            rel_time_sum += (row.time_b - row.time_a) / row.time_a;
            ++rel_time_count;
        }
        if (row.max_acc_a > 0.0) {
            rel_acc_sum += (row.max_acc_b - row.max_acc_a) / row.max_acc_a;
            ++rel_acc_count;
        }
        if (row.max_acc_b < row.max_acc_a) {
            ++report.acc_decreased;
        } else if (row.max_acc_b > row.max_acc_a) {
            ++report.acc_increased;
        } else {
            ++report.acc_tied;
        }
    }
    const double n = static_cast<double>(a.size());
    report.success_rate_a = successes_a / n;
    report.success_rate_b = successes_b / n;
    if (rel_time_count > 0) report.mean_rel_time_change = rel_time_sum / rel_time_count;
    if (rel_acc_count > 0) report.mean_rel_max_acc_change = rel_acc_sum / rel_acc_count;
    return report;
}

std::string ComparisonReport::to_csv() const {
    std::ostringstream out;
    out << "seed,success_a,success_b,time_a,time_b,max_acc_a,max_acc_b,delta_time,delta_max_acc\n";
    for (const ComparisonRow& r : rows) {
        out << r.seed << ',' << (r.success_a ? 1 : 0) << ',' << (r.success_b ? 1 : 0) << ','
            << r.time_a << ',' << r.time_b << ',' << r.max_acc_a << ',' << r.max_acc_b << ','
            << (r.time_b - r.time_a) << ',' << (r.max_acc_b - r.max_acc_a) << '\n';
    }
    return out.str();
}

}  // namespace crowdnav
