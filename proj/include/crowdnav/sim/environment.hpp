#pragma once

#include <optional>
#include <vector>

#include "crowdnav/core/geometry.hpp"
#include "crowdnav/core/types.hpp"
#include "crowdnav/sim/orca.hpp"
#include "crowdnav/sim/scenario.hpp"
#include "crowdnav/util/rng.hpp"

namespace crowdnav {

struct Transition {
    JointState next;
    double d_min = 0.0;  // continuous-time minimum separation over the step
    bool reached_goal = false;
    bool collided = false;
    bool timed_out = false;

    bool terminal() const { return reached_goal || collided || timed_out; }
};

enum class OnGoalBehavior { Stand, Resample };

struct SimConfig {
    double dt = 0.25;
    double time_limit = 25.0;
    OrcaParams orca;
    OnGoalBehavior on_goal = OnGoalBehavior::Stand;
};

// ORCA-driven pedestrian simulation around a caller-controlled vehicle.
// Single-threaded and mutable; distinct instances run fully in parallel.
class Environment {
  public:
    Environment(Scenario scenario, SimConfig cfg);

    const JointState& state() const { return state_; }
    const Scenario& scenario() const { return scenario_; }
    const SimConfig& config() const { return cfg_; }
    bool done() const { return done_; }

    // Advances pedestrians one ORCA step (ignoring the vehicle unless it is
    // visible) and the vehicle by the commanded action. Throws
    // std::logic_error when the episode already terminated.
    Transition step(const Action& vehicle_action);

    // ORCA internals of the latest step, for feasibility checks.
    const OrcaResult& last_orca() const { return last_orca_; }

  private:
    std::vector<OrcaAgent> pedestrian_agents() const;

    Scenario scenario_;
    SimConfig cfg_;
    JointState state_;
    std::vector<Vec2> goals_;  // current pedestrian goals (may be resampled)
    OrcaResult last_orca_;
    Rng goal_rng_;
    bool done_ = false;
};

}  // namespace crowdnav
