#pragma once

#include <vector>

#include "crowdnav/core/geometry.hpp"
#include "crowdnav/core/types.hpp"
#include "crowdnav/predict/predictors.hpp"
#include "crowdnav/value/network.hpp"

namespace crowdnav {

enum class SpaceTag { Initial, Expanded };

struct ActionSpace {
    std::vector<Action> actions;
    SpaceTag tag = SpaceTag::Initial;
};

enum class Aggregation { Min, Mean, WeightedMean };

struct PlannerConfig {
    double gamma = 0.9;
    double dt = 0.25;
    double reward_threshold = 0.1;        // m/s, the threshold of the smoothness term
    bool reward_smoothing = true;         // include f_delta in the reward cases
    double discomfort_dist = 0.2;         // meters
    // Discomfort case value = offset + slope * d_min. Defaults follow the
    // planning reward; training overrides them with the small continuous
    // penalty that value learning needs to stay stable.
    double discomfort_offset = -0.1;
    double discomfort_slope = -0.5;
    double epsilon_speed_frac = 0.1;      // exploration grid speed step, fraction of v_pref
    double epsilon_heading = 6.0 * M_PI / 180.0;  // rad
    int exploration_n = 2;
    Aggregation aggregation = Aggregation::Min;
    KinematicLimits limits;               // unlimited by default
    int speed_samples = 5;
    int heading_samples = 16;
    bool kce_enabled = true;              // expansion pass on/off
};

// One prediction sample's pedestrian motion across a single step.
struct PredictedWorld {
    std::vector<PedestrianState> before;
    std::vector<PedestrianState> after;  // predicted positions with implied velocities
    double weight = 1.0;
};

// Default 5 exponentially spaced speeds in (0, v_pref] x 16 uniform headings
// plus the stop action.
ActionSpace build_initial_space(double v_pref, const PlannerConfig& cfg = {});

// Keeps actions whose per-step speed and heading changes stay within the
// limits; the acceleration cap additionally bounds the velocity-vector
// change so logged accelerations can never exceed a_max. prev_action itself
// always passes.
ActionSpace kinematic_filter(const ActionSpace& space, const Action& prev_action,
                             const KinematicLimits& limits, double dt);

// Smoothness term: threshold - |velocity(a) - velocity(a_prev)|.
double f_delta(const Action& a, const Action& a_prev, double threshold);

// Acceleration-shaped reward, cases in printed order: collision, discomfort,
// goal, otherwise zero.
double reward(double d_min, bool reached_goal, const Action& a, const Action& a_prev,
              const PlannerConfig& cfg);

// Expands a PredictionSet into per-sample single-step worlds starting from
// the current joint state.
std::vector<PredictedWorld> worlds_from_predictions(const JointState& s_prev,
                                                    const PredictionSet& preds, double dt);

// One-step lookahead value of a candidate action, aggregated over the
// prediction samples (default: worst case).
double evaluate_action(const Action& a, const std::vector<PredictedWorld>& worlds,
                       const VehicleState& vehicle_prev, const Action& prev_action,
                       const ValueFunction& value_fn, const PlannerConfig& cfg);

double evaluate_action(const Action& a, const PredictionSet& preds, const JointState& s_prev,
                       const ValueFunction& value_fn, const PlannerConfig& cfg);

struct ScoredAction {
    Action action;
    double value = 0.0;
};

// Deterministic argmax; ties broken by higher speed, then smaller absolute
// heading change from prev_action.
ScoredAction select_initial(const ActionSpace& space, const std::vector<PredictedWorld>& worlds,
                            const VehicleState& vehicle_prev, const Action& prev_action,
                            const ValueFunction& value_fn, const PlannerConfig& cfg);

ScoredAction select_initial(const ActionSpace& space, const PredictionSet& preds,
                            const JointState& s_prev, const ValueFunction& value_fn,
                            const PlannerConfig& cfg);

// Axis-aligned exploration grid around the first-pass action: speeds and
// headings offset by up to n steps of epsilon per axis, clipped to
// [0, v_pref], re-filtered kinematically, deduplicated. Always contains
// the seed action.
ActionSpace expand_space(const Action& seed, double epsilon_speed, double epsilon_heading, int n,
                         const KinematicLimits& limits, double v_pref, const Action& prev_action,
                         double dt);

struct PlanResult {
    Action action;          // final choice
    Action initial_action;  // first-pass argmax
    double initial_value = 0.0;
    double final_value = 0.0;
    std::size_t initial_space_size = 0;
    std::size_t expanded_space_size = 0;
};

// Filtered initial space for a step: the default grid plus the hold-previous
// action, kinematically filtered (never empty).
ActionSpace initial_space_for(double v_pref, const Action& prev_action, const PlannerConfig& cfg);

// Full two-pass pipeline on prebuilt worlds.
PlanResult plan_on_worlds(const std::vector<PredictedWorld>& worlds,
                          const VehicleState& vehicle_prev, const Action& prev_action,
                          const ValueFunction& value_fn, const PlannerConfig& cfg);

// predict -> filter -> first-pass argmax -> expand -> final argmax.
PlanResult plan_step(const JointState& s_prev, const ObservedTracks& tracks,
                     const Action& prev_action, const ValueFunction& value_fn,
                     const PredictorFn& predictor, const PlannerConfig& cfg);

// The previous commanded action implied by a vehicle state.
Action previous_action(const VehicleState& vehicle);

}  // namespace crowdnav
