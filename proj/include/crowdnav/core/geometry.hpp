#pragma once

#include <vector>

#include "crowdnav/core/types.hpp"

namespace crowdnav {

// Advances the vehicle one step under instantaneous velocity control: the
// commanded velocity is achieved immediately and held for dt seconds.
VehicleState propagate(const VehicleState& state, const Action& a, double dt);

// Continuous-time minimum surface-to-surface separation of two discs moving
// linearly over the same interval. Negative iff the discs overlap at some
// instant during the step.
double min_separation(const Vec2& a0, const Vec2& a1, double radius_a,
                      const Vec2& b0, const Vec2& b1, double radius_b);

double min_separation(const VehicleState& vehicle_t0, const VehicleState& vehicle_t1,
                      const PedestrianState& ped_t0, const PedestrianState& ped_t1);

struct EgoPedestrian {
    Vec2 position;   // in the vehicle-centric frame
    Vec2 velocity;   // in the vehicle-centric frame
    double radius = 0.0;
    double dist = 0.0;  // center distance to the vehicle
};

// Vehicle-centric view of a JointState: the vehicle sits at the origin with
// its goal on the +x axis at distance goal_dist.
struct EgoJointState {
    double goal_dist = 0.0;
    double v_pref = 0.0;
    double heading = 0.0;  // vehicle heading in the ego frame
    double radius = 0.0;
    Vec2 velocity;         // vehicle velocity in the ego frame
    std::vector<EgoPedestrian> pedestrians;
};

// Rotation + translation into the vehicle-centric frame. All pairwise
// distances and the vehicle-goal distance are preserved. When the vehicle
// already sits at its goal the current heading defines the frame axis.
EgoJointState to_ego_frame(const JointState& js);

}  // namespace crowdnav
