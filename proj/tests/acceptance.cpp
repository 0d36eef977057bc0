// Acceptance suite: one self-checking criterion per number, each printing a
// PASS/FAIL line. Criteria 6-9 need a trained value net (see README: train
// once, or use the shipped artifact).

#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "crowdnav/eval/experiment.hpp"
#include "crowdnav/io/config.hpp"
#include "crowdnav/io/svg.hpp"
#include "crowdnav/util/rng.hpp"
#include "crowdnav/value/training.hpp"

using namespace crowdnav;

namespace {

struct Context {
    std::string params_path;
    bool verbose = false;
};

struct Check {
    std::string detail;
    bool ok = true;

    void expect(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

const ValueFunction kAnalytic = [](const EgoJointState& ego) { return analytic_value(ego); };

// ----- criterion 1: reward exactness ---------------------------------------

Check criterion_reward() {
    Check c;
    PlannerConfig cfg;
    cfg.reward_threshold = 0.0;
    const Action a{0.5, 0.2};
    c.expect(std::abs(reward(-0.01, false, a, a, cfg) - (-0.25)) <= 1e-12, "collision case");
    c.expect(std::abs(reward(0.1, false, a, a, cfg) - (-0.15)) <= 1e-12, "discomfort case");
    c.expect(std::abs(reward(1.0, true, a, a, cfg) - 1.0) <= 1e-12, "goal case");
    c.expect(reward(1.0, false, a, Action{1.0, -0.8}, cfg) == 0.0, "default case is exactly 0");
    c.expect(std::abs(f_delta(a, a, 0.1) - 0.1) <= 1e-12, "f_delta zero change");
    c.expect(std::abs(f_delta(Action{0.3, 0}, Action{0, 0}, 0.1) - (-0.2)) <= 1e-12,
             "f_delta 0.3 m/s change");
    c.note("four reward cases and f_delta match hand values to 1e-12");
    return c;
}

// ----- criterion 2: kinematic safety ----------------------------------------

Check criterion_kinematics() {
    Check c;
    PlannerConfig cfg;
    cfg.limits = KinematicLimits::from_acceleration(6.4, 120.0 * M_PI / 180.0, cfg.dt);

    Rng rng(2024);
    int steps = 0;
    int violations = 0;
    while (steps < 1000) {
        const Scenario scenario = generate_scenario(5, 7000 + steps, {});
        Environment env(scenario, {});
        TrackHistory history(2, cfg.dt);
        Action prev{0.0, env.state().vehicle.heading};
        while (!env.done() && steps < 1000) {
            history.observe(env.state().pedestrians);
            const PredictionSet preds = predict_cvm(history.tracks(), 1);
            const PlanResult plan =
                plan_step(env.state(), history.tracks(), prev,
                          kAnalytic, [](const ObservedTracks& t) { return predict_cvm(t, 1); },
                          cfg);
            if (std::abs(plan.action.speed - prev.speed) > cfg.limits.dv_max) ++violations;
            if (std::abs(wrap_angle(plan.action.heading - prev.heading)) > cfg.limits.dtheta_max) {
                ++violations;
            }
            if ((plan.action.velocity() - prev.velocity()).norm() / cfg.dt > 6.4) ++violations;
            env.step(plan.action);
            prev = plan.action;
            ++steps;
        }
    }
    c.expect(violations == 0, std::to_string(violations) + " violations");
    c.note("1000 planned steps at a_max=6.4, dtheta_max=120deg: " + std::to_string(violations) +
           " violations");
    return c;
}

// ----- criterion 3: gradient correctness ------------------------------------

Check criterion_gradients() {
    Check c;
    std::vector<ValueNetConfig> configs(3);
    configs[0].embedding = {16, 12};
    configs[0].attention = {10, 1};
    configs[0].value_head = {14, 8, 1};
    configs[1].embedding = {10};
    configs[1].attention = {8, 1};
    configs[1].value_head = {12, 1};
    configs[2].embedding = {20, 14, 10};
    configs[2].attention = {10, 10, 1};
    configs[2].value_head = {16, 12, 8, 1};

    Rng rng(3003);
    double worst = 0.0;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        ValueNetParams params = ValueNetParams::init(configs[ci], 40 + ci);
        for (double& v : params.empty_crowd) v = rng.uniform(-0.5, 0.5);
        std::vector<TrainingSample> batch;
        for (int i = 0; i < 5; ++i) {
            TrainingSample s;
            EgoJointState ego;
            ego.goal_dist = rng.uniform(0, 8);
            ego.v_pref = 1.0;
            ego.heading = rng.uniform(-M_PI, M_PI);
            ego.radius = 0.3;
            ego.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            for (int p = 0; p < i % 4; ++p) {
                EgoPedestrian ped;
                ped.position = {rng.uniform(-4, 4), rng.uniform(-4, 4)};
                ped.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
                ped.radius = 0.3;
                ped.dist = ped.position.norm();
                ego.pedestrians.push_back(ped);
            }
            s.state = ego;
            s.target = rng.uniform(-1, 1);
            batch.push_back(std::move(s));
        }
        const ValueNetGrads grads = gradient(params, batch);
        std::vector<double*> flat = params.flat();
        std::vector<const double*> gflat = grads.shape.flat();
        Rng probe(50 + ci);
        for (int k = 0; k < 10; ++k) {
            const std::size_t idx = probe.uniform_index(flat.size());
            const double eps = 1e-6;
            const double saved = *flat[idx];
            *flat[idx] = saved + eps;
            const double lp = gradient(params, batch).loss;
            *flat[idx] = saved - eps;
            const double lm = gradient(params, batch).loss;
            *flat[idx] = saved;
            const double numeric = (lp - lm) / (2 * eps);
            const double rel = std::abs(*gflat[idx] - numeric) /
                               std::max({std::abs(*gflat[idx]), std::abs(numeric), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "3 architectures x 10 probes, worst rel err %.2e", worst);
    c.expect(worst < 1e-4, buf);
    c.note(buf);
    return c;
}

// ----- criterion 4: ORCA properties ------------------------------------------

Check criterion_orca() {
    Check c;
    int collisions = 0;
    int infeasible_violations = 0;
    long checked_velocities = 0;
    for (std::uint64_t episode = 0; episode < 100; ++episode) {
        const Scenario scenario = generate_scenario(5, 50000 + episode, {});
        Environment env(scenario, {});
        while (!env.done()) {
            const Transition tr = env.step(Action{0, 0});
            const OrcaResult& orca = env.last_orca();
            for (std::size_t i = 0; i < orca.velocities.size(); ++i) {
                if (!orca.feasible[i]) continue;
                ++checked_velocities;
                for (const OrcaLine& line : orca.lines[i]) {
                    if (!satisfies(line, orca.velocities[i], 1e-9)) ++infeasible_violations;
                }
            }
            const auto& peds = tr.next.pedestrians;
            for (std::size_t i = 0; i < peds.size(); ++i) {
                for (std::size_t j = i + 1; j < peds.size(); ++j) {
                    if (distance(peds[i].position, peds[j].position) <
                        peds[i].radius + peds[j].radius) {
                        ++collisions;
                    }
                }
            }
            if (tr.terminal()) break;
        }
    }
    c.expect(collisions == 0, std::to_string(collisions) + " pedestrian-pedestrian collisions");
    c.expect(infeasible_violations == 0,
             std::to_string(infeasible_violations) + " half-plane violations");
    c.note("100 episodes x 5 agents: " + std::to_string(collisions) + " collisions, " +
           std::to_string(infeasible_violations) + " half-plane violations over " +
           std::to_string(checked_velocities) + " feasible velocities");
    return c;
}

// ----- criterion 5: planner oracle equivalence -------------------------------

Check criterion_planner_oracle() {
    Check c;
    Rng rng(5005);
    PlannerConfig cfg;
    int mismatches = 0;
    int regressions = 0;
    for (int trial = 0; trial < 100; ++trial) {
        JointState js;
        js.vehicle.position = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const Action prev{rng.uniform(0, 1), rng.uniform(-M_PI, M_PI)};
        js.vehicle.velocity = prev.velocity();
        js.vehicle.heading = prev.heading;
        js.vehicle.radius = 0.3;
        js.vehicle.goal = {0, 4};
        js.vehicle.v_pref = 1.0;
        const std::size_t n = 1 + trial % 4;
        ObservedTracks tracks;
        tracks.dt = cfg.dt;
        for (std::size_t i = 0; i < n; ++i) {
            PedestrianState p;
            p.position = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
            p.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            p.radius = 0.3;
            js.pedestrians.push_back(p);
            tracks.tracks.push_back({p.position - p.velocity * cfg.dt, p.position});
        }
        const PredictionSet preds = predict_cvm(tracks, 1);
        const std::vector<PredictedWorld> worlds = worlds_from_predictions(js, preds, cfg.dt);
        const ActionSpace space = initial_space_for(1.0, prev, cfg);

        // Brute force with the same tie-break.
        std::size_t best = 0;
        std::vector<double> values;
        for (const Action& a : space.actions) {
            values.push_back(evaluate_action(a, worlds, js.vehicle, prev, kAnalytic, cfg));
        }
        for (std::size_t i = 1; i < space.actions.size(); ++i) {
            const Action& a = space.actions[i];
            const Action& b = space.actions[best];
            const double da = std::abs(wrap_angle(a.heading - prev.heading));
            const double db = std::abs(wrap_angle(b.heading - prev.heading));
            if (values[i] > values[best] ||
                (values[i] == values[best] &&
                 (a.speed > b.speed || (a.speed == b.speed && da < db)))) {
                best = i;
            }
        }
        const ScoredAction fast = select_initial(space, worlds, js.vehicle, prev, kAnalytic, cfg);
        if (!(fast.action == space.actions[best])) ++mismatches;

        const PlanResult plan = plan_on_worlds(worlds, js.vehicle, prev, kAnalytic, cfg);
        if (plan.final_value < plan.initial_value) ++regressions;
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " oracle mismatches");
    c.expect(regressions == 0, std::to_string(regressions) + " second-pass regressions");
    c.note("100 fixtures: " + std::to_string(mismatches) + " mismatches, " +
           std::to_string(regressions) + " regressions");
    return c;
}

// ----- shared harness for the trained-policy criteria ------------------------

RunConfig base_run_config() {
    RunConfig cfg;
    cfg.sim.n_pedestrians = 5;
    cfg.experiment.num_cases = 100;
    cfg.experiment.workers = 0;
    return cfg;
}

MonteCarloOutput run_suite(const RunConfig& cfg,
                           std::shared_ptr<const ValueNetParams> params, bool keep_logs) {
    ExperimentConfig exp = make_experiment_config(cfg);
    exp.keep_logs = keep_logs;
    const PlannerConfig planner_cfg = make_planner_config(cfg);
    const PolicyFactory factory = [&cfg, params, planner_cfg](std::uint64_t seed) {
        PolicySpec policy;
        policy.kind = PolicySpec::Kind::Planner;
        policy.planner = planner_cfg;
        policy.predictor = make_predictor(cfg, seed);
        if (params) {
            policy.value_fn = [params](const EgoJointState& ego) {
                return value_forward(ego, *params);
            };
        } else {
            policy.value_fn = kAnalytic;
        }
        return policy;
    };
    return monte_carlo(exp, factory);
}

std::shared_ptr<const ValueNetParams> load_trained(const Context& ctx, Check& c) {
    try {
        return std::make_shared<const ValueNetParams>(load_params(ctx.params_path));
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail = std::string("trained params unavailable (") + e.what() +
                   "); run `crowdnav train` and pass --params";
        return nullptr;
    }
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

// ----- criterion 6: KCE ablation, directional --------------------------------

Check criterion_kce_ablation(const Context& ctx) {
    Check c;
    const auto params = load_trained(ctx, c);
    if (!params) return c;

    RunConfig with_kce = base_run_config();
    with_kce.predictor.kind = "multimodal";
    with_kce.predictor.num_samples = 20;
    with_kce.experiment.base_seed = 20000;
    with_kce.planner.kce_enabled = true;
    with_kce.planner.limits_enabled = true;

    RunConfig without_kce = with_kce;
    without_kce.planner.kce_enabled = false;
    without_kce.planner.limits_enabled = false;

    const MonteCarloOutput off = run_suite(without_kce, params, false);
    const MonteCarloOutput on = run_suite(with_kce, params, false);
    const ComparisonReport report = ablation_compare(off.episodes, on.episodes);

    int decreased = 0;
    int paired = 0;
    for (const ComparisonRow& row : report.rows) {
        ++paired;
        if (row.max_acc_b < row.max_acc_a) ++decreased;
    }
    const double frac = paired > 0 ? static_cast<double>(decreased) / paired : 0.0;
    const double agg_off = mean(off.metrics.episode_max_acceleration);
    const double agg_on = mean(on.metrics.episode_max_acceleration);
    const double drop = agg_off > 0 ? (agg_off - agg_on) / agg_off : 0.0;
    const double success_gap =
        std::abs(on.metrics.success_rate - off.metrics.success_rate) * 100.0;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "max-acc fell on %.0f%% of 100 paired seeds; mean episode max-acc %.2f -> %.2f "
                  "(-%.0f%%); success %.0f%% vs %.0f%%",
                  100.0 * frac, agg_off, agg_on, 100.0 * drop,
                  100.0 * off.metrics.success_rate, 100.0 * on.metrics.success_rate);
    c.note(buf);
    c.expect(frac >= 0.80, "per-seed decrease fraction below 0.80");
    c.expect(drop >= 0.25, "aggregate max-acceleration drop below 25%");
    c.expect(success_gap <= 5.0, "success rate moved more than 5 points");
    return c;
}

// ----- criterion 7: multimodality trend ---------------------------------------

Check criterion_multimodal_trend(const Context& ctx) {
    Check c;
    const auto params = load_trained(ctx, c);
    if (!params) return c;

    const std::vector<std::size_t> ms = {1, 5, 20};
    std::vector<double> success;
    for (std::size_t m : ms) {
        RunConfig cfg = base_run_config();
        cfg.predictor.kind = "multimodal";  // m=1 degenerates to the CVM anchor
        cfg.predictor.num_samples = m;
        cfg.experiment.base_seed = 21000;
        cfg.experiment.mode = "open_loop_8";
        cfg.planner.kce_enabled = false;
        cfg.planner.limits_enabled = false;
        const MonteCarloOutput out = run_suite(cfg, params, false);
        success.push_back(out.metrics.success_rate * 100.0);
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "open-loop-8 success: m=1 %.0f%%, m=5 %.0f%%, m=20 %.0f%%",
                  success[0], success[1], success[2]);
    c.note(buf);
    c.expect(success[2] >= success[0], "success(m=20) < success(m=1)");
    int inversions = 0;
    double worst_inversion = 0.0;
    for (std::size_t i = 1; i < success.size(); ++i) {
        if (success[i] < success[i - 1]) {
            ++inversions;
            worst_inversion = std::max(worst_inversion, success[i - 1] - success[i]);
        }
    }
    c.expect(inversions <= 1 && worst_inversion <= 2.0,
             "trend not monotone within one 2-point inversion");
    return c;
}

// ----- criterion 8: learned-policy viability ----------------------------------

Check criterion_learned_policy(const Context& ctx) {
    Check c;
    const auto params = load_trained(ctx, c);
    if (!params) return c;

    RunConfig cfg = base_run_config();
    cfg.predictor.kind = "cvm";
    cfg.predictor.num_samples = 1;
    cfg.experiment.base_seed = 400000;  // held out from training and validation streams
    cfg.planner.kce_enabled = false;

    const MonteCarloOutput out = run_suite(cfg, params, false);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "trained policy success %.0f%% on 100 held-out seeds",
                  100.0 * out.metrics.success_rate);
    c.note(buf);
    c.expect(out.metrics.success_rate >= 0.90, "success below 90%");

    // The trained value field should rank goal proximity correctly on most
    // sampled pairs of otherwise-identical states.
    Rng rng(808);
    int ordered = 0;
    const int pairs = 500;
    for (int k = 0; k < pairs; ++k) {
        EgoJointState ego;
        ego.goal_dist = rng.uniform(1.0, 7.0);
        ego.v_pref = 1.0;
        ego.heading = 0.0;
        ego.radius = 0.3;
        ego.velocity = {rng.uniform(0, 1), rng.uniform(-0.3, 0.3)};
        for (int p = 0; p < 5; ++p) {
            EgoPedestrian ped;
            ped.position = {rng.uniform(1.5, 5), rng.uniform(-4, 4)};
            ped.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
            ped.radius = 0.3;
            ped.dist = ped.position.norm();
            ego.pedestrians.push_back(ped);
        }
        EgoJointState nearer = ego;
        nearer.goal_dist = ego.goal_dist - rng.uniform(0.5, 1.0);
        if (value_forward(nearer, *params) > value_forward(ego, *params)) ++ordered;
    }
    char buf2[128];
    std::snprintf(buf2, sizeof(buf2), "nearer-goal state valued higher on %d/%d sampled pairs",
                  ordered, pairs);
    c.note(buf2);
    c.expect(ordered >= static_cast<int>(0.8 * pairs), "goal-distance ordering below 80%");
    return c;
}

// ----- criterion 9: ORCA baseline gap ------------------------------------------

Check criterion_orca_gap(const Context& ctx) {
    Check c;
    const auto params = load_trained(ctx, c);
    if (!params) return c;

    RunConfig cfg = base_run_config();
    cfg.experiment.base_seed = 400000;

    ExperimentConfig exp = make_experiment_config(cfg);
    const MonteCarloOutput orca_out = monte_carlo(exp, [&](std::uint64_t) {
        PolicySpec policy;
        policy.kind = PolicySpec::Kind::OrcaBaseline;
        policy.orca = cfg.sim.scenario.orca;
        return policy;
    });

    RunConfig trained_cfg = cfg;
    trained_cfg.predictor.kind = "cvm";
    trained_cfg.planner.kce_enabled = false;
    const MonteCarloOutput trained = run_suite(trained_cfg, params, false);

    const double gap =
        (trained.metrics.success_rate - orca_out.metrics.success_rate) * 100.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "ORCA baseline %.0f%% vs trained policy %.0f%% (gap %.0f points)",
                  100.0 * orca_out.metrics.success_rate, 100.0 * trained.metrics.success_rate,
                  gap);
    c.note(buf);
    c.expect(gap >= 30.0, "gap below 30 points");
    return c;
}

// ----- criterion 10: determinism -----------------------------------------------

Check criterion_determinism() {
    Check c;
    RunConfig cfg;
    cfg.sim.n_pedestrians = 5;
    cfg.predictor.kind = "multimodal";
    cfg.predictor.num_samples = 5;
    cfg.experiment.num_cases = 10;
    cfg.experiment.base_seed = 31000;

    const auto run = [&cfg](int workers) {
        RunConfig local = cfg;
        local.experiment.workers = workers;
        const MonteCarloOutput out = run_suite(local, nullptr, true);
        std::string blob = metrics_to_csv(out.metrics) + episode_results_to_csv(out.episodes);
        for (const EpisodeLog& log : out.logs) blob += episode_to_json(log);
        return blob;
    };
    const std::string a = run(1);
    const std::string b = run(2);
    c.expect(a == b, "re-run output differs");
    c.note("10 episodes (multimodal m=5) reproduced byte-identically across re-runs and worker counts");
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    Context ctx;
    ctx.params_path = "artifacts/value_net.json";
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            selected.push_back(std::atoi(argv[++i]));
        } else if (arg == "--params" && i + 1 < argc) {
            ctx.params_path = argv[++i];
        } else if (arg == "--help") {
            std::puts("usage: acceptance [--criterion N]... [--params value_net.json]");
            return 0;
        }
    }

    const std::map<int, std::pair<std::string, std::function<Check()>>> criteria = {
        {1, {"reward exactness", [] { return criterion_reward(); }}},
        {2, {"kinematic safety", [] { return criterion_kinematics(); }}},
        {3, {"gradient correctness", [] { return criterion_gradients(); }}},
        {4, {"ORCA properties", [] { return criterion_orca(); }}},
        {5, {"planner oracle equivalence", [] { return criterion_planner_oracle(); }}},
        {6, {"KCE ablation (directional)", [&] { return criterion_kce_ablation(ctx); }}},
        {7, {"multimodality trend (directional)", [&] { return criterion_multimodal_trend(ctx); }}},
        {8, {"learned-policy viability", [&] { return criterion_learned_policy(ctx); }}},
        {9, {"ORCA baseline gap (directional)", [&] { return criterion_orca_gap(ctx); }}},
        {10, {"determinism", [] { return criterion_determinism(); }}},
    };

    bool all_ok = true;
    for (const auto& [number, entry] : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), number) == selected.end()) {
            continue;
        }
        const Check result = entry.second();
        std::printf("%s criterion %2d (%s): %s\n", result.ok ? "PASS" : "FAIL", number,
                    entry.first.c_str(), result.detail.c_str());
        std::fflush(stdout);
        all_ok = all_ok && result.ok;
    }
    return all_ok ? 0 : 1;
}
