#include "crowdnav/planner/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace crowdnav {

namespace {

constexpr double kActionTol = 1e-9;

bool same_action(const Action& a, const Action& b) {
    return std::abs(a.speed - b.speed) <= kActionTol &&
           std::abs(wrap_angle(a.heading - b.heading)) <= kActionTol;
}

bool passes_limits(const Action& a, const Action& prev, const KinematicLimits& limits,
                   double dt) {
    if (std::abs(a.speed - prev.speed) > limits.dv_max) return false;
    if (std::abs(wrap_angle(a.heading - prev.heading)) > limits.dtheta_max) return false;
    if (std::isfinite(limits.a_max) &&
        (a.velocity() - prev.velocity()).norm() > limits.a_max * dt) {
        return false;
    }
    return true;
}

}  // namespace

Action previous_action(const VehicleState& vehicle) {
    const double speed = vehicle.velocity.norm();
    return Action{speed, speed > 0.0 ? vehicle.velocity.angle() : vehicle.heading};
}

ActionSpace build_initial_space(double v_pref, const PlannerConfig& cfg) {
    if (v_pref <= 0.0) throw std::invalid_argument("build_initial_space: v_pref must be > 0");
    ActionSpace space;
    space.tag = SpaceTag::Initial;
    space.actions.emplace_back(0.0, 0.0);  // stop
    for (int i = 0; i < cfg.speed_samples; ++i) {
        // Exponential spacing concentrates options at low speed; the last
        // sample is exactly v_pref.
        const double speed =
            (std::exp(static_cast<double>(i + 1) / cfg.speed_samples) - 1.0) / (M_E - 1.0) * v_pref;
        for (int j = 0; j < cfg.heading_samples; ++j) {
            const double heading = 2.0 * M_PI * static_cast<double>(j) / cfg.heading_samples;
            space.actions.emplace_back(speed, wrap_angle(heading));
        }
    }
    return space;
}

ActionSpace kinematic_filter(const ActionSpace& space, const Action& prev_action,
                             const KinematicLimits& limits, double dt) {
    ActionSpace out;
    out.tag = space.tag;
    for (const Action& a : space.actions) {
        if (same_action(a, prev_action) || passes_limits(a, prev_action, limits, dt)) {
            out.actions.push_back(a);
        }
    }
    return out;
}

double f_delta(const Action& a, const Action& a_prev, double threshold) {
    return threshold - (a.velocity() - a_prev.velocity()).norm();
}

double reward(double d_min, bool reached_goal, const Action& a, const Action& a_prev,
              const PlannerConfig& cfg) {
    const double shaping = cfg.reward_smoothing ? f_delta(a, a_prev, cfg.reward_threshold) : 0.0;
    if (d_min < 0.0) return -0.25 + shaping;
    if (d_min < cfg.discomfort_dist) {
        return cfg.discomfort_offset + cfg.discomfort_slope * d_min + shaping;
    }
    if (reached_goal) return 1.0 + shaping;
    return 0.0;
}

std::vector<PredictedWorld> worlds_from_predictions(const JointState& s_prev,
                                                    const PredictionSet& preds, double dt) {
    std::vector<PredictedWorld> worlds;
    const std::size_t n = s_prev.pedestrians.size();
    if (preds.num_pedestrians() != n) {
        throw std::invalid_argument("worlds_from_predictions: pedestrian count mismatch");
    }
    const std::size_t m = n == 0 ? 1 : preds.num_samples;
    worlds.resize(m);
    for (std::size_t s = 0; s < m; ++s) {
        PredictedWorld& world = worlds[s];
        world.weight = preds.weights.empty() ? 1.0 / static_cast<double>(m) : preds.weights[s];
        world.before = s_prev.pedestrians;
        world.after.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2 next_pos = preds.trajectories[i][s].front();
            PedestrianState ped = s_prev.pedestrians[i];
            ped.velocity = (next_pos - ped.position) / dt;
            ped.position = next_pos;
            world.after[i] = ped;
        }
    }
    return worlds;
}

namespace {

// floor: with min aggregation, once the running minimum falls strictly below
// it the caller's incumbent cannot be displaced (the partial minimum only
// bounds the true value from above), so the scan stops early. The returned
// partial value is still a sound comparison key; -inf disables pruning.
double evaluate_action_impl(const Action& a, const std::vector<PredictedWorld>& worlds,
                            const VehicleState& vehicle_prev, const Action& prev_action,
                            const ValueFunction& value_fn, const PlannerConfig& cfg,
                            double floor) {
    if (worlds.empty()) throw std::invalid_argument("evaluate_action: no prediction samples");

    const VehicleState vehicle_next = propagate(vehicle_prev, a, cfg.dt);
    const bool reached =
        (vehicle_next.position - vehicle_next.goal).norm() < vehicle_next.radius;
    const double discount = std::pow(cfg.gamma, cfg.dt * vehicle_prev.v_pref);

    double agg = 0.0;
    double min_value = std::numeric_limits<double>::infinity();
    JointState next;
    for (const PredictedWorld& world : worlds) {
        double d_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < world.before.size(); ++i) {
            d_min = std::min(d_min,
                             min_separation(vehicle_prev.position, vehicle_next.position,
                                            vehicle_prev.radius, world.before[i].position,
                                            world.after[i].position, world.before[i].radius));
        }
        const double r = reward(d_min, reached, a, prev_action, cfg);

        next.vehicle = vehicle_next;
        next.pedestrians = world.after;
        next.time = 0.0;
        const double v = r + discount * value_fn(to_ego_frame(next));

        min_value = std::min(min_value, v);
        if (cfg.aggregation == Aggregation::Min && min_value < floor) return min_value;
        agg += (cfg.aggregation == Aggregation::WeightedMean ? world.weight * v
                                                             : v / static_cast<double>(worlds.size()));
    }
    return cfg.aggregation == Aggregation::Min ? min_value : agg;
}

}  // namespace

double evaluate_action(const Action& a, const std::vector<PredictedWorld>& worlds,
                       const VehicleState& vehicle_prev, const Action& prev_action,
                       const ValueFunction& value_fn, const PlannerConfig& cfg) {
    return evaluate_action_impl(a, worlds, vehicle_prev, prev_action, value_fn, cfg,
                                -std::numeric_limits<double>::infinity());
}

double evaluate_action(const Action& a, const PredictionSet& preds, const JointState& s_prev,
                       const ValueFunction& value_fn, const PlannerConfig& cfg) {
    return evaluate_action(a, worlds_from_predictions(s_prev, preds, cfg.dt), s_prev.vehicle,
                           previous_action(s_prev.vehicle), value_fn, cfg);
}

ScoredAction select_initial(const ActionSpace& space, const std::vector<PredictedWorld>& worlds,
                            const VehicleState& vehicle_prev, const Action& prev_action,
                            const ValueFunction& value_fn, const PlannerConfig& cfg) {
    if (space.actions.empty()) throw std::invalid_argument("select_initial: empty action space");

    const auto heading_change = [&](const Action& a) {
        return std::abs(wrap_angle(a.heading - prev_action.heading));
    };

    ScoredAction best{space.actions.front(),
                      evaluate_action(space.actions.front(), worlds, vehicle_prev, prev_action,
                                      value_fn, cfg)};
    for (std::size_t i = 1; i < space.actions.size(); ++i) {
        const Action& a = space.actions[i];
        const double v =
            evaluate_action_impl(a, worlds, vehicle_prev, prev_action, value_fn, cfg, best.value);
        const bool better =
            v > best.value ||
            (v == best.value &&
             (a.speed > best.action.speed ||
              (a.speed == best.action.speed && heading_change(a) < heading_change(best.action))));
        if (better) best = {a, v};
    }
    return best;
}

ScoredAction select_initial(const ActionSpace& space, const PredictionSet& preds,
                            const JointState& s_prev, const ValueFunction& value_fn,
                            const PlannerConfig& cfg) {
    return select_initial(space, worlds_from_predictions(s_prev, preds, cfg.dt), s_prev.vehicle,
                          previous_action(s_prev.vehicle), value_fn, cfg);
}

ActionSpace expand_space(const Action& seed, double epsilon_speed, double epsilon_heading, int n,
                         const KinematicLimits& limits, double v_pref, const Action& prev_action,
                         double dt) {
    ActionSpace grid;
    grid.tag = SpaceTag::Expanded;
    for (int i = -n; i <= n; ++i) {
        for (int j = -n; j <= n; ++j) {
            const double speed =
                std::clamp(seed.speed + static_cast<double>(i) * epsilon_speed, 0.0, v_pref);
            const double heading = wrap_angle(seed.heading + static_cast<double>(j) * epsilon_heading);
            grid.actions.emplace_back(speed, heading);
        }
    }
    ActionSpace filtered = kinematic_filter(grid, prev_action, limits, dt);

    ActionSpace out;
    out.tag = SpaceTag::Expanded;
    out.actions.push_back(seed);  // seed passed the first-pass filter already
    for (const Action& a : filtered.actions) {
        const bool dup = std::any_of(out.actions.begin(), out.actions.end(),
                                     [&](const Action& b) { return same_action(a, b); });
        if (!dup) out.actions.push_back(a);
    }
    return out;
}

ActionSpace initial_space_for(double v_pref, const Action& prev_action, const PlannerConfig& cfg) {
    ActionSpace space = build_initial_space(v_pref, cfg);
    const bool has_prev = std::any_of(space.actions.begin(), space.actions.end(),
                                      [&](const Action& a) { return same_action(a, prev_action); });
    if (!has_prev) space.actions.push_back(prev_action);  // holding course always stays legal
    return kinematic_filter(space, prev_action, cfg.limits, cfg.dt);
}

PlanResult plan_on_worlds(const std::vector<PredictedWorld>& worlds,
                          const VehicleState& vehicle_prev, const Action& prev_action,
                          const ValueFunction& value_fn, const PlannerConfig& cfg) {
    const ActionSpace initial = initial_space_for(vehicle_prev.v_pref, prev_action, cfg);
    const ScoredAction first =
        select_initial(initial, worlds, vehicle_prev, prev_action, value_fn, cfg);

    PlanResult result;
    result.initial_action = first.action;
    result.initial_value = first.value;
    result.initial_space_size = initial.actions.size();

    if (!cfg.kce_enabled || cfg.exploration_n == 0) {
        result.action = first.action;
        result.final_value = first.value;
        result.expanded_space_size = 1;
        return result;
    }

    const ActionSpace expanded =
        expand_space(first.action, cfg.epsilon_speed_frac * vehicle_prev.v_pref,
                     cfg.epsilon_heading, cfg.exploration_n, cfg.limits, vehicle_prev.v_pref,
                     prev_action, cfg.dt);
    const ScoredAction final_choice =
        select_initial(expanded, worlds, vehicle_prev, prev_action, value_fn, cfg);

    result.action = final_choice.action;
    result.final_value = final_choice.value;
    result.expanded_space_size = expanded.actions.size();
    if (result.final_value < result.initial_value) {
        // The expanded space contains the seed, so refinement cannot regress.
        throw std::logic_error("plan_on_worlds: second pass regressed below the first");
    }
    return result;
}

PlanResult plan_step(const JointState& s_prev, const ObservedTracks& tracks,
                     const Action& prev_action, const ValueFunction& value_fn,
                     const PredictorFn& predictor, const PlannerConfig& cfg) {
    const PredictionSet preds = predictor(tracks);
    return plan_on_worlds(worlds_from_predictions(s_prev, preds, cfg.dt), s_prev.vehicle,
                          prev_action, value_fn, cfg);
}

}  // namespace crowdnav
