#pragma once

#include <limits>
#include <vector>

#include "crowdnav/core/vec2.hpp"

namespace crowdnav {

// Commanded velocity. Stored as (speed, heading); heading is absolute in the
// world frame and normalized to (-pi, pi]. The Cartesian view converts
// losslessly up to float tolerance.
struct Action {
    double speed = 0.0;
    double heading = 0.0;

    Action() = default;
    Action(double speed_, double heading_) : speed(speed_), heading(wrap_angle(heading_)) {}

    Vec2 velocity() const { return {speed * std::cos(heading), speed * std::sin(heading)}; }

    static Action from_velocity(const Vec2& v) {
        const double n = v.norm();
        return Action{n, n > 0.0 ? v.angle() : 0.0};
    }

    bool operator==(const Action& o) const { return speed == o.speed && heading == o.heading; }
};

struct VehicleState {
    Vec2 position;
    Vec2 velocity;
    double radius = 0.3;
    Vec2 goal;
    double v_pref = 1.0;
    double heading = 0.0;

    double goal_distance() const { return (goal - position).norm(); }
};

struct PedestrianState {
    Vec2 position;
    Vec2 velocity;
    double radius = 0.3;
};

// Vehicle full state plus the observable state of every pedestrian at one
// timestep. Pedestrian ordering is stable across an episode.
struct JointState {
    VehicleState vehicle;
    std::vector<PedestrianState> pedestrians;
    double time = 0.0;
};

// Per-step change bounds on the commanded (speed, heading) pair, plus the
// acceleration cap they derive from. Infinite entries disable a bound.
struct KinematicLimits {
    double dv_max = std::numeric_limits<double>::infinity();      // m/s per step
    double dtheta_max = std::numeric_limits<double>::infinity();  // rad per step
    double a_max = std::numeric_limits<double>::infinity();       // m/s^2

    static KinematicLimits unlimited() { return {}; }

    static KinematicLimits from_acceleration(double a_max, double dtheta_max, double dt) {
        return {a_max * dt, dtheta_max, a_max};
    }

    bool is_unlimited() const {
        return std::isinf(dv_max) && std::isinf(dtheta_max) && std::isinf(a_max);
    }
};

}  // namespace crowdnav
