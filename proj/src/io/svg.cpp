#include "crowdnav/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace crowdnav {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

constexpr double kScale = 60.0;  // pixels per meter

struct Frame {
    double half_extent;
    double size() const { return 2.0 * half_extent * kScale; }
    double x(double wx) const { return (wx + half_extent) * kScale; }
    double y(double wy) const { return (half_extent - wy) * kScale; }  // y up in world
};

const char* ped_color(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                   "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#ff7f0e"};
    return colors[i % 10];
}

}  // namespace

std::string render_episode_svg(const EpisodeLog& log) {
    double extent = log.scenario.circle_radius + 1.5;
    for (const StepRecord& s : log.steps) {
        extent = std::max(extent, std::abs(s.vehicle_position.x) + 1.0);
        extent = std::max(extent, std::abs(s.vehicle_position.y) + 1.0);
    }
    const Frame f{extent};

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fmt(f.size())
        << "\" height=\"" << fmt(f.size()) << "\" viewBox=\"0 0 " << fmt(f.size()) << ' '
        << fmt(f.size()) << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<circle cx=\"" << fmt(f.x(0)) << "\" cy=\"" << fmt(f.y(0)) << "\" r=\""
        << fmt(log.scenario.circle_radius * kScale)
        << "\" fill=\"none\" stroke=\"#dddddd\" stroke-dasharray=\"6,6\"/>\n";

    // Goal marker.
    const Vec2 goal = log.scenario.vehicle.goal;
    svg << "<g stroke=\"#d62728\" stroke-width=\"2\">"
        << "<line x1=\"" << fmt(f.x(goal.x) - 8) << "\" y1=\"" << fmt(f.y(goal.y)) << "\" x2=\""
        << fmt(f.x(goal.x) + 8) << "\" y2=\"" << fmt(f.y(goal.y)) << "\"/>"
        << "<line x1=\"" << fmt(f.x(goal.x)) << "\" y1=\"" << fmt(f.y(goal.y) - 8) << "\" x2=\""
        << fmt(f.x(goal.x)) << "\" y2=\"" << fmt(f.y(goal.y) + 8) << "\"/></g>\n";

    const std::size_t n = log.scenario.pedestrians.size();

    // Pedestrian paths.
    for (std::size_t i = 0; i < n; ++i) {
        svg << "<polyline fill=\"none\" stroke=\"" << ped_color(i)
            << "\" stroke-width=\"1\" opacity=\"0.4\" points=\"";
        svg << fmt(f.x(log.scenario.pedestrians[i].start.x)) << ','
            << fmt(f.y(log.scenario.pedestrians[i].start.y));
        for (const StepRecord& s : log.steps) {
            svg << ' ' << fmt(f.x(s.pedestrians[i].position.x)) << ','
                << fmt(f.y(s.pedestrians[i].position.y));
        }
        svg << "\"/>\n";
    }

    // Vehicle path.
    svg << "<polyline fill=\"none\" stroke=\"#111111\" stroke-width=\"2\" points=\"";
    svg << fmt(f.x(log.scenario.vehicle.start.x)) << ',' << fmt(f.y(log.scenario.vehicle.start.y));
    for (const StepRecord& s : log.steps) {
        svg << ' ' << fmt(f.x(s.vehicle_position.x)) << ',' << fmt(f.y(s.vehicle_position.y));
    }
    svg << "\"/>\n";

    // Numbered snapshots every ~2 simulated seconds.
    const std::size_t stride =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(2.0 / log.dt)));
    for (std::size_t t = 0; t < log.steps.size(); t += stride) {
        const StepRecord& s = log.steps[t];
        for (std::size_t i = 0; i < n; ++i) {
            const double r = log.scenario.pedestrians[i].radius * kScale;
            svg << "<circle cx=\"" << fmt(f.x(s.pedestrians[i].position.x)) << "\" cy=\""
                << fmt(f.y(s.pedestrians[i].position.y)) << "\" r=\"" << fmt(r) << "\" fill=\""
                << ped_color(i) << "\" opacity=\"0.35\"/>";
            svg << "<text x=\"" << fmt(f.x(s.pedestrians[i].position.x)) << "\" y=\""
                << fmt(f.y(s.pedestrians[i].position.y) + 4) << "\" font-size=\"11\""
                << " text-anchor=\"middle\" fill=\"#222222\">" << (i + 1) << "</text>";
        }
        svg << "<circle cx=\"" << fmt(f.x(s.vehicle_position.x)) << "\" cy=\""
            << fmt(f.y(s.vehicle_position.y)) << "\" r=\""
            << fmt(log.scenario.vehicle.radius * kScale)
            << "\" fill=\"#ffcc00\" stroke=\"#111111\"/>";
        svg << "<text x=\"" << fmt(f.x(s.vehicle_position.x) + 12) << "\" y=\""
            << fmt(f.y(s.vehicle_position.y) - 8) << "\" font-size=\"10\" fill=\"#555555\">"
            << fmt(s.t) << "s</text>\n";
    }

    svg << "<text x=\"10\" y=\"18\" font-size=\"13\" fill=\"#333333\">outcome: "
        << outcome_name(log.outcome) << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string metrics_to_csv(const Metrics& m) {
    std::ostringstream out;
    out << "num_cases,successes,collisions,timeouts,aborted,success_rate,collision_rate,"
           "timeout_rate,mean_time_success,max_acceleration\n";
    out << m.num_cases << ',' << m.successes << ',' << m.collisions << ',' << m.timeouts << ','
        << m.aborted << ',' << m.success_rate << ',' << m.collision_rate << ',' << m.timeout_rate
        << ',' << m.mean_time_success << ',' << m.max_acceleration << '\n';
    return out.str();
}

std::string metrics_to_table(const Metrics& m) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%-18s %8d\n%-18s %7.1f%%\n%-18s %7.1f%%\n%-18s %7.1f%%\n%-18s %8.2f\n"
                  "%-18s %8.2f\n",
                  "cases", m.num_cases, "success", 100.0 * m.success_rate, "collision",
                  100.0 * m.collision_rate, "timeout", 100.0 * m.timeout_rate, "time (s)",
                  m.mean_time_success, "max acc (m/s^2)", m.max_acceleration);
    return buf;
}

std::string episode_results_to_csv(const std::vector<EpisodeResult>& episodes) {
    std::ostringstream out;
    out << "seed,scenario_hash,outcome,time,max_acc,min_d_min\n";
    for (const EpisodeResult& e : episodes) {
        out << e.seed << ',' << e.scenario_hash << ',' << outcome_name(e.outcome) << ',' << e.time
            << ',' << e.max_acc << ',' << e.min_d_min << '\n';
    }
    return out.str();
}

}  // namespace crowdnav
