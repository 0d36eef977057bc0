#pragma once

#include <cstddef>
#include <vector>

#include "crowdnav/core/vec2.hpp"

namespace crowdnav {

// Gaussian parameter distributions follow the cited simulator's conventions;
// all values are config-overridable.
struct OrcaParams {
    double time_horizon = 5.0;    // tau, seconds
    double neighbor_dist = 10.0;  // meters
    int max_neighbors = 10;
    double vpref_mean = 1.0;
    double vpref_sigma = 0.1;
    double radius_mean = 0.3;
    double radius_sigma = 0.02;
    double radius_min = 0.2;
    double radius_max = 0.4;
};

struct OrcaAgent {
    Vec2 position;
    Vec2 velocity;
    double radius = 0.3;
    double max_speed = 1.0;
    Vec2 pref_velocity;
};

// Feasible half-plane: det(direction, v - point) >= 0 (left of the line).
struct OrcaLine {
    Vec2 point;
    Vec2 direction;
};

inline bool satisfies(const OrcaLine& line, const Vec2& v, double eps = 1e-9) {
    return line.direction.det(v - line.point) >= -eps;
}

struct OrcaResult {
    std::vector<Vec2> velocities;
    std::vector<std::vector<OrcaLine>> lines;  // constraints seen by each agent
    std::vector<bool> feasible;                // 2D LP feasible (no 3D fallback)
};

// One reciprocal collision-avoidance step: every agent picks the velocity
// closest to its preferred velocity inside the intersection of its ORCA
// half-planes, via sequential 2D linear programming with the least-violation
// 3D fallback when the intersection is empty.
OrcaResult orca_velocities(const std::vector<OrcaAgent>& agents, const OrcaParams& params,
                           double dt);

// Closest feasible velocity for a single agent against fixed neighbors.
// Exposed for the vehicle-side ORCA baseline policy.
Vec2 orca_single(const OrcaAgent& self, const std::vector<OrcaAgent>& neighbors,
                 const OrcaParams& params, double dt,
                 std::vector<OrcaLine>* lines_out = nullptr);

}  // namespace crowdnav
