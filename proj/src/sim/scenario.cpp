#include "crowdnav/sim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

#include "crowdnav/util/rng.hpp"

namespace crowdnav {

Scenario generate_scenario(int n_pedestrians, std::uint64_t seed, const ScenarioConfig& cfg) {
    if (n_pedestrians < 0) throw std::invalid_argument("n_pedestrians must be >= 0");

    Rng rng(seed);
    Scenario scenario;
    scenario.circle_radius = cfg.circle_radius;
    scenario.seed = seed;
    scenario.visible_vehicle = cfg.visible_vehicle;

    scenario.vehicle.radius = cfg.vehicle_radius;
    scenario.vehicle.v_pref = cfg.vehicle_v_pref;
    scenario.vehicle.start = Vec2{0.0, -cfg.circle_radius} +
                             Vec2{rng.normal(0.0, cfg.sigma_position), rng.normal(0.0, cfg.sigma_position)};
    scenario.vehicle.goal = {0.0, cfg.circle_radius};

    const auto overlaps = [&](const Vec2& p, double r) {
        if (distance(p, scenario.vehicle.start) <
            r + scenario.vehicle.radius + cfg.placement_margin) {
            return true;
        }
        for (const ScenarioAgent& other : scenario.pedestrians) {
            if (distance(p, other.start) < r + other.radius + cfg.placement_margin) return true;
        }
        return false;
    };

    for (int i = 0; i < n_pedestrians; ++i) {
        ScenarioAgent agent;
        agent.radius = std::clamp(rng.normal(cfg.orca.radius_mean, cfg.orca.radius_sigma),
                                  cfg.orca.radius_min, cfg.orca.radius_max);
        agent.v_pref = std::max(0.1, rng.normal(cfg.orca.vpref_mean, cfg.orca.vpref_sigma));

        bool placed = false;
        for (int attempt = 0; attempt < cfg.max_placement_attempts; ++attempt) {
            const double angle = rng.uniform(0.0, 2.0 * M_PI);
            const Vec2 on_circle{cfg.circle_radius * std::cos(angle),
                                 cfg.circle_radius * std::sin(angle)};
            const Vec2 start = on_circle + Vec2{rng.normal(0.0, cfg.sigma_position),
                                                rng.normal(0.0, cfg.sigma_position)};
            if (overlaps(start, agent.radius)) continue;
            agent.start = start;
            agent.goal = -on_circle + Vec2{rng.normal(0.0, cfg.sigma_position),
                                           rng.normal(0.0, cfg.sigma_position)};
            placed = true;
            break;
        }
        if (!placed) {
            throw std::runtime_error("generate_scenario: could not place pedestrian " +
                                     std::to_string(i) + " after " +
                                     std::to_string(cfg.max_placement_attempts) + " attempts");
        }
        scenario.pedestrians.push_back(agent);
    }
    return scenario;
}

JointState initial_state(const Scenario& scenario) {
    JointState js;
    js.time = 0.0;
    js.vehicle.position = scenario.vehicle.start;
    js.vehicle.velocity = {0.0, 0.0};
    js.vehicle.radius = scenario.vehicle.radius;
    js.vehicle.goal = scenario.vehicle.goal;
    js.vehicle.v_pref = scenario.vehicle.v_pref;
    const Vec2 to_goal = scenario.vehicle.goal - scenario.vehicle.start;
    js.vehicle.heading = to_goal.norm() > 0.0 ? to_goal.angle() : 0.0;
    for (const ScenarioAgent& agent : scenario.pedestrians) {
        PedestrianState p;
        p.position = agent.start;
        p.velocity = {0.0, 0.0};
        p.radius = agent.radius;
        js.pedestrians.push_back(p);
    }
    return js;
}

std::uint64_t scenario_hash(const Scenario& scenario) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](double value) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(value));
        std::memcpy(&bits, &value, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffULL;
            h *= 1099511628211ULL;
        }
    };
    mix(scenario.circle_radius);
    mix(static_cast<double>(scenario.visible_vehicle));
    mix(scenario.vehicle.start.x);
    mix(scenario.vehicle.start.y);
    mix(scenario.vehicle.goal.x);
    mix(scenario.vehicle.goal.y);
    mix(scenario.vehicle.radius);
    mix(scenario.vehicle.v_pref);
    for (const ScenarioAgent& a : scenario.pedestrians) {
        mix(a.start.x);
        mix(a.start.y);
        mix(a.goal.x);
        mix(a.goal.y);
        mix(a.radius);
        mix(a.v_pref);
    }
    return h;
}

}  // namespace crowdnav
