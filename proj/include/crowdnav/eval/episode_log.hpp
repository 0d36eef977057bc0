#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "crowdnav/core/types.hpp"
#include "crowdnav/sim/scenario.hpp"

namespace crowdnav {

enum class Outcome { Success, Collision, Timeout, Aborted };

std::string outcome_name(Outcome outcome);
Outcome outcome_from_name(const std::string& name);

struct StepRecord {
    double t = 0.0;  // time after the step
    Vec2 vehicle_position;
    Vec2 vehicle_velocity;
    Action action;
    double reward = 0.0;
    double d_min = 0.0;
    std::vector<PedestrianState> pedestrians;  // after the step
};

// Per-step record of one episode; every metric is recomputable from it.
struct EpisodeLog {
    int schema_version = 1;
    double dt = 0.25;
    std::uint64_t seed = 0;
    std::uint64_t scenario_hash = 0;
    Scenario scenario;
    Outcome outcome = Outcome::Timeout;
    double time_to_goal = std::numeric_limits<double>::quiet_NaN();  // success only
    std::string error;                                               // Aborted detail
    std::vector<StepRecord> steps;

    // Per-step speeds ||v_t - v_{t-1}|| / dt, starting from rest.
    std::vector<double> accelerations() const;
    double max_acceleration() const;
};

// Documented JSON schema: schema_version, dt, seed, scenario_hash, outcome,
// agents[] (static info, vehicle first), steps[] with per-step
// positions/velocities/action/reward/d_min.
std::string episode_to_json(const EpisodeLog& log);
EpisodeLog episode_from_json(const std::string& text);

std::string scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const std::string& text);

}  // namespace crowdnav
