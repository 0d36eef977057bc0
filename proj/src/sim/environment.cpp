#include "crowdnav/sim/environment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "crowdnav/util/rng.hpp"

namespace crowdnav {

Environment::Environment(Scenario scenario, SimConfig cfg)
    : scenario_(std::move(scenario)),
      cfg_(cfg),
      state_(initial_state(scenario_)),
      goal_rng_(Rng::derive_seed(scenario_.seed, 0x60a1)) {
    goals_.reserve(scenario_.pedestrians.size());
    for (const ScenarioAgent& a : scenario_.pedestrians) goals_.push_back(a.goal);
}

std::vector<OrcaAgent> Environment::pedestrian_agents() const {
    std::vector<OrcaAgent> agents;
    agents.reserve(scenario_.pedestrians.size() + 1);
    for (std::size_t i = 0; i < scenario_.pedestrians.size(); ++i) {
        const PedestrianState& p = state_.pedestrians[i];
        const ScenarioAgent& meta = scenario_.pedestrians[i];
        OrcaAgent agent;
        agent.position = p.position;
        agent.velocity = p.velocity;
        agent.radius = p.radius;
        agent.max_speed = meta.v_pref;
        const Vec2 to_goal = goals_[i] - p.position;
        if (to_goal.norm() < p.radius) {
            agent.pref_velocity = {0.0, 0.0};  // arrived; stand (or resampled below)
        } else {
            agent.pref_velocity = to_goal.normalized() * meta.v_pref;
        }
        agents.push_back(agent);
    }
    if (scenario_.visible_vehicle) {
        OrcaAgent vehicle;
        vehicle.position = state_.vehicle.position;
        vehicle.velocity = state_.vehicle.velocity;
        vehicle.radius = state_.vehicle.radius;
        vehicle.max_speed = state_.vehicle.v_pref;
        vehicle.pref_velocity = state_.vehicle.velocity;
        agents.push_back(vehicle);
    }
    return agents;
}

Transition Environment::step(const Action& vehicle_action) {
    if (done_) throw std::logic_error("Environment::step called on a terminated episode");

    if (cfg_.on_goal == OnGoalBehavior::Resample) {
        for (std::size_t i = 0; i < state_.pedestrians.size(); ++i) {
            if (distance(state_.pedestrians[i].position, goals_[i]) <
                state_.pedestrians[i].radius) {
                const double angle = goal_rng_.uniform(0.0, 2.0 * M_PI);
                goals_[i] = {scenario_.circle_radius * std::cos(angle),
                             scenario_.circle_radius * std::sin(angle)};
            }
        }
    }

    const std::vector<OrcaAgent> agents = pedestrian_agents();
    last_orca_ = orca_velocities(agents, cfg_.orca, cfg_.dt);
    for (std::size_t i = 0; i < last_orca_.velocities.size(); ++i) {
        if (!last_orca_.feasible[i]) continue;
        for (const OrcaLine& line : last_orca_.lines[i]) {
            if (!satisfies(line, last_orca_.velocities[i])) {
                throw std::logic_error("ORCA feasibility invariant violated");
            }
        }
    }

    const VehicleState vehicle_prev = state_.vehicle;
    const std::vector<PedestrianState> peds_prev = state_.pedestrians;

    for (std::size_t i = 0; i < state_.pedestrians.size(); ++i) {
        PedestrianState& p = state_.pedestrians[i];
        p.velocity = last_orca_.velocities[i];
        p.position += p.velocity * cfg_.dt;
    }
    state_.vehicle = propagate(vehicle_prev, vehicle_action, cfg_.dt);
    state_.time += cfg_.dt;

    double d_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state_.pedestrians.size(); ++i) {
        d_min = std::min(d_min, min_separation(vehicle_prev, state_.vehicle, peds_prev[i],
                                               state_.pedestrians[i]));
    }

    Transition tr;
    tr.next = state_;
    tr.d_min = d_min;
    tr.collided = d_min < 0.0;
    if (!tr.collided) {
        tr.reached_goal = state_.vehicle.goal_distance() < state_.vehicle.radius;
    }
    if (!tr.collided && !tr.reached_goal) {
        tr.timed_out = state_.time > cfg_.time_limit;
    }
    done_ = tr.terminal();
    return tr;
}

}  // namespace crowdnav
