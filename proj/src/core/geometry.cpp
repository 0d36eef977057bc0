#include "crowdnav/core/geometry.hpp"

#include <algorithm>

namespace crowdnav {

VehicleState propagate(const VehicleState& state, const Action& a, double dt) {
    VehicleState next = state;
    const Vec2 v = a.velocity();
    next.position = state.position + v * dt;
    next.velocity = v;
    next.heading = a.speed > 0.0 ? a.heading : state.heading;
    return next;
}

double min_separation(const Vec2& a0, const Vec2& a1, double radius_a,
                      const Vec2& b0, const Vec2& b1, double radius_b) {
    // Relative motion: p(tau) = p0 + tau * d, tau in [0, 1]. |p|^2 is a
    // quadratic in tau, minimized in closed form and clamped to the step.
    const Vec2 p0 = a0 - b0;
    const Vec2 d = (a1 - a0) - (b1 - b0);
    double tau = 0.0;
    const double dd = d.norm_sq();
    if (dd > 0.0) tau = std::clamp(-p0.dot(d) / dd, 0.0, 1.0);
    const Vec2 closest = p0 + d * tau;
    return closest.norm() - radius_a - radius_b;
}

double min_separation(const VehicleState& vehicle_t0, const VehicleState& vehicle_t1,
                      const PedestrianState& ped_t0, const PedestrianState& ped_t1) {
    return min_separation(vehicle_t0.position, vehicle_t1.position, vehicle_t0.radius,
                          ped_t0.position, ped_t1.position, ped_t0.radius);
}

EgoJointState to_ego_frame(const JointState& js) {
    const VehicleState& v = js.vehicle;
    const Vec2 to_goal = v.goal - v.position;
    const double dg = to_goal.norm();
    const double axis = dg > 0.0 ? to_goal.angle() : v.heading;

    EgoJointState ego;
    ego.goal_dist = dg;
    ego.v_pref = v.v_pref;
    ego.heading = wrap_angle(v.heading - axis);
    ego.radius = v.radius;
    ego.velocity = v.velocity.rotated(-axis);
    ego.pedestrians.reserve(js.pedestrians.size());
    for (const PedestrianState& p : js.pedestrians) {
        EgoPedestrian ep;
        ep.position = (p.position - v.position).rotated(-axis);
        ep.velocity = p.velocity.rotated(-axis);
        ep.radius = p.radius;
        ep.dist = ep.position.norm();
        ego.pedestrians.push_back(ep);
    }
    return ego;
}

}  // namespace crowdnav
