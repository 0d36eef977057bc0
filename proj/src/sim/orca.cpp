#include "crowdnav/sim/orca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crowdnav {
namespace {

constexpr double kEps = 1e-10;

// Optimizes along half-plane boundary `line_no` subject to the previous
// lines and the speed disc. Returns false when that segment is empty.
bool linear_program_1(const std::vector<OrcaLine>& lines, std::size_t line_no, double radius,
                      const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
    const Vec2& point = lines[line_no].point;
    const Vec2& direction = lines[line_no].direction;
    const double dot = point.dot(direction);
    const double discriminant = dot * dot + radius * radius - point.norm_sq();
    if (discriminant < 0.0) return false;  // boundary line misses the speed disc

    const double sqrt_disc = std::sqrt(discriminant);
    double t_left = -dot - sqrt_disc;
    double t_right = -dot + sqrt_disc;

    for (std::size_t i = 0; i < line_no; ++i) {
        const double denominator = direction.det(lines[i].direction);
        const double numerator = lines[i].direction.det(point - lines[i].point);
        if (std::abs(denominator) <= kEps) {
            // Parallel lines: either always satisfied or never.
            if (numerator < 0.0) return false;
            continue;
        }
        const double t = numerator / denominator;
        if (denominator >= 0.0) {
            t_right = std::min(t_right, t);
        } else {
            t_left = std::max(t_left, t);
        }
        if (t_left > t_right) return false;
    }

    if (direction_opt) {
        result = opt_velocity.dot(direction) > 0.0 ? point + t_right * direction
                                                   : point + t_left * direction;
    } else {
        const double t = direction.dot(opt_velocity - point);
        result = point + std::clamp(t, t_left, t_right) * direction;
    }
    return true;
}

// Sequentially satisfies every half-plane, keeping the feasible velocity
// closest to opt_velocity inside the speed disc. Returns lines.size() on
// success or the index of the first infeasible constraint.
std::size_t linear_program_2(const std::vector<OrcaLine>& lines, double radius,
                             const Vec2& opt_velocity, bool direction_opt, Vec2& result) {
    if (direction_opt) {
        result = opt_velocity * radius;  // opt_velocity is a unit direction here
    } else if (opt_velocity.norm_sq() > radius * radius) {
        result = opt_velocity.normalized() * radius;
    } else {
        result = opt_velocity;
    }

    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].direction.det(lines[i].point - result) > 0.0) {
            const Vec2 temp = result;
            if (!linear_program_1(lines, i, radius, opt_velocity, direction_opt, result)) {
                result = temp;
                return i;
            }
        }
    }
    return lines.size();
}

// Least-violation fallback: when the intersection is empty, minimizes the
// maximum constraint penetration starting from the first failed line.
void linear_program_3(const std::vector<OrcaLine>& lines, std::size_t begin_line, double radius,
                      Vec2& result) {
    double distance = 0.0;
    for (std::size_t i = begin_line; i < lines.size(); ++i) {
        if (lines[i].direction.det(lines[i].point - result) > distance) {
            std::vector<OrcaLine> proj_lines;
            proj_lines.reserve(i);
            for (std::size_t j = 0; j < i; ++j) {
                OrcaLine line;
                const double determinant = lines[i].direction.det(lines[j].direction);
                if (std::abs(determinant) <= kEps) {
                    if (lines[i].direction.dot(lines[j].direction) > 0.0) continue;
                    line.point = 0.5 * (lines[i].point + lines[j].point);
                } else {
                    line.point = lines[i].point +
                                 (lines[j].direction.det(lines[i].point - lines[j].point) /
                                  determinant) *
                                     lines[i].direction;
                }
                line.direction = (lines[j].direction - lines[i].direction).normalized();
                proj_lines.push_back(line);
            }
            const Vec2 temp = result;
            if (linear_program_2(proj_lines, radius,
                                 Vec2{-lines[i].direction.y, lines[i].direction.x}, true,
                                 result) < proj_lines.size()) {
                result = temp;
            }
            distance = lines[i].direction.det(lines[i].point - result);
        }
    }
}

OrcaLine line_against(const OrcaAgent& self, const OrcaAgent& other, double inv_time_horizon,
                      double inv_time_step) {
    const Vec2 relative_position = other.position - self.position;
    const Vec2 relative_velocity = self.velocity - other.velocity;
    const double dist_sq = relative_position.norm_sq();
    const double combined_radius = self.radius + other.radius;
    const double combined_radius_sq = combined_radius * combined_radius;

    OrcaLine line;
    Vec2 u;
    if (dist_sq > combined_radius_sq) {
        // w is the vector from the cutoff circle center to the relative velocity.
        const Vec2 w = relative_velocity - inv_time_horizon * relative_position;
        const double w_length_sq = w.norm_sq();
        const double dot1 = w.dot(relative_position);
        if (dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_length_sq) {
            // Project on the cutoff circle.
            const double w_length = std::sqrt(w_length_sq);
            const Vec2 unit_w = w / w_length;
            line.direction = {unit_w.y, -unit_w.x};
            u = (combined_radius * inv_time_horizon - w_length) * unit_w;
        } else {
            // Project on the nearest leg of the velocity obstacle cone.
            const double leg = std::sqrt(dist_sq - combined_radius_sq);
            if (relative_position.det(w) > 0.0) {
                line.direction = Vec2{relative_position.x * leg - relative_position.y * combined_radius,
                                      relative_position.x * combined_radius + relative_position.y * leg} /
                                 dist_sq;
            } else {
                line.direction = -Vec2{relative_position.x * leg + relative_position.y * combined_radius,
                                       -relative_position.x * combined_radius + relative_position.y * leg} /
                                 dist_sq;
            }
            u = relative_velocity.dot(line.direction) * line.direction - relative_velocity;
        }
    } else {
        // Already overlapping: separate within one time step.
        const Vec2 w = relative_velocity - inv_time_step * relative_position;
        const double w_length = w.norm();
        Vec2 unit_w;
        if (w_length > kEps) {
            unit_w = w / w_length;
        } else if (dist_sq > 0.0) {
            unit_w = -relative_position.normalized();
        } else {
            unit_w = {1.0, 0.0};  // coincident centers: any direction separates
        }
        line.direction = {unit_w.y, -unit_w.x};
        u = (combined_radius * inv_time_step - w_length) * unit_w;
    }
    // Reciprocity: each agent takes half of the needed velocity change.
    line.point = self.velocity + 0.5 * u;
    return line;
}

std::vector<std::size_t> neighbor_indices(const std::vector<OrcaAgent>& agents, std::size_t self,
                                          const OrcaParams& params) {
    std::vector<std::pair<double, std::size_t>> candidates;
    const double range_sq = params.neighbor_dist * params.neighbor_dist;
    for (std::size_t j = 0; j < agents.size(); ++j) {
        if (j == self) continue;
        const double d = (agents[j].position - agents[self].position).norm_sq();
        if (d < range_sq) candidates.emplace_back(d, j);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() > static_cast<std::size_t>(params.max_neighbors)) {
        candidates.resize(static_cast<std::size_t>(params.max_neighbors));
    }
    std::vector<std::size_t> out;
    out.reserve(candidates.size());
    for (const auto& [d, j] : candidates) out.push_back(j);
    return out;
}

Vec2 solve(const OrcaAgent& self, const std::vector<OrcaLine>& lines, bool* feasible_out) {
    Vec2 result;
    const std::size_t fail = linear_program_2(lines, self.max_speed, self.pref_velocity, false, result);
    const bool feasible = fail == lines.size();
    if (!feasible) linear_program_3(lines, fail, self.max_speed, result);
    if (feasible_out) *feasible_out = feasible;
    return result;
}

}  // namespace

OrcaResult orca_velocities(const std::vector<OrcaAgent>& agents, const OrcaParams& params,
                           double dt) {
    const double inv_time_horizon = 1.0 / params.time_horizon;
    const double inv_time_step = 1.0 / dt;

    OrcaResult result;
    result.velocities.resize(agents.size());
    result.lines.resize(agents.size());
    result.feasible.resize(agents.size());

    // Lines for all agents are built from the same pre-step snapshot.
    for (std::size_t i = 0; i < agents.size(); ++i) {
        std::vector<OrcaLine> lines;
        for (std::size_t j : neighbor_indices(agents, i, params)) {
            lines.push_back(line_against(agents[i], agents[j], inv_time_horizon, inv_time_step));
        }
        bool feasible = true;
        result.velocities[i] = solve(agents[i], lines, &feasible);
        result.lines[i] = std::move(lines);
        result.feasible[i] = feasible;
    }
    return result;
}

Vec2 orca_single(const OrcaAgent& self, const std::vector<OrcaAgent>& neighbors,
                 const OrcaParams& params, double dt, std::vector<OrcaLine>* lines_out) {
    const double inv_time_horizon = 1.0 / params.time_horizon;
    const double inv_time_step = 1.0 / dt;
    const double range_sq = params.neighbor_dist * params.neighbor_dist;

    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
        const double d = (neighbors[j].position - self.position).norm_sq();
        if (d < range_sq) candidates.emplace_back(d, j);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() > static_cast<std::size_t>(params.max_neighbors)) {
        candidates.resize(static_cast<std::size_t>(params.max_neighbors));
    }

    std::vector<OrcaLine> lines;
    for (const auto& [d, j] : candidates) {
        lines.push_back(line_against(self, neighbors[j], inv_time_horizon, inv_time_step));
    }
    const Vec2 v = solve(self, lines, nullptr);
    if (lines_out) *lines_out = std::move(lines);
    return v;
}

}  // namespace crowdnav
