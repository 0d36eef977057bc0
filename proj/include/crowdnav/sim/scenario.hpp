#pragma once

#include <cstdint>
#include <vector>

#include "crowdnav/core/types.hpp"
#include "crowdnav/sim/orca.hpp"

namespace crowdnav {

struct ScenarioAgent {
    Vec2 start;
    Vec2 goal;
    double radius = 0.3;
    double v_pref = 1.0;
};

// Circle-crossing scenario: agents start on a perturbed circle and cross to
// (perturbed) antipodal goals.
struct Scenario {
    std::vector<ScenarioAgent> pedestrians;
    ScenarioAgent vehicle;
    double circle_radius = 4.0;
    std::uint64_t seed = 0;
    bool visible_vehicle = false;  // pedestrians react to the vehicle when true
};

struct ScenarioConfig {
    double circle_radius = 4.0;
    double sigma_position = 0.5;  // Gaussian perturbation of starts and goals, meters
    bool visible_vehicle = false;
    double vehicle_radius = 0.3;
    double vehicle_v_pref = 1.0;
    OrcaParams orca;  // pedestrian radius / v_pref distributions
    int max_placement_attempts = 100;
    double placement_margin = 0.1;  // extra clearance between placed agents, meters
};

// Deterministic for fixed (n_pedestrians, seed, cfg). Starts are rejection
// re-sampled until pairwise non-overlapping against every placed agent and
// the vehicle start. Throws std::runtime_error when the circle is too
// crowded to place all agents within the attempt budget.
Scenario generate_scenario(int n_pedestrians, std::uint64_t seed, const ScenarioConfig& cfg);

// Initial joint state implied by a scenario: everyone at rest at their start,
// the vehicle headed toward its goal.
JointState initial_state(const Scenario& scenario);

// FNV-1a over the canonical serialized form; used to verify that paired
// ablation runs saw identical scenarios.
std::uint64_t scenario_hash(const Scenario& scenario);

}  // namespace crowdnav
