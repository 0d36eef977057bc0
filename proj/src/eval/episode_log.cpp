#include "crowdnav/eval/episode_log.hpp"

#include <stdexcept>

#include "json.hpp"

namespace crowdnav {

using nlohmann::json;

std::string outcome_name(Outcome outcome) {
    switch (outcome) {
        case Outcome::Success: return "success";
        case Outcome::Collision: return "collision";
        case Outcome::Timeout: return "timeout";
        case Outcome::Aborted: return "aborted";
    }
    return "unknown";
}

Outcome outcome_from_name(const std::string& name) {
    if (name == "success") return Outcome::Success;
    if (name == "collision") return Outcome::Collision;
    if (name == "timeout") return Outcome::Timeout;
    if (name == "aborted") return Outcome::Aborted;
    throw std::runtime_error("unknown outcome: " + name);
}

std::vector<double> EpisodeLog::accelerations() const {
    std::vector<double> out;
    out.reserve(steps.size());
    Vec2 prev{0.0, 0.0};  // episodes start from rest
    for (const StepRecord& step : steps) {
        out.push_back((step.vehicle_velocity - prev).norm() / dt);
        prev = step.vehicle_velocity;
    }
    return out;
}

double EpisodeLog::max_acceleration() const {
    double best = 0.0;
    for (double a : accelerations()) best = std::max(best, a);
    return best;
}

namespace {

json vec_to_json(const Vec2& v) { return json::array({v.x, v.y}); }

Vec2 vec_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json agent_to_json(const ScenarioAgent& a) {
    json j;
    j["start"] = vec_to_json(a.start);
    j["goal"] = vec_to_json(a.goal);
    j["radius"] = a.radius;
    j["v_pref"] = a.v_pref;
    return j;
}

ScenarioAgent agent_from_json(const json& j) {
    ScenarioAgent a;
    a.start = vec_from_json(j.at("start"));
    a.goal = vec_from_json(j.at("goal"));
    a.radius = j.at("radius").get<double>();
    a.v_pref = j.at("v_pref").get<double>();
    return a;
}

json scenario_to_json_obj(const Scenario& s) {
    json j;
    j["circle_radius"] = s.circle_radius;
    j["seed"] = s.seed;
    j["visible_vehicle"] = s.visible_vehicle;
    j["vehicle"] = agent_to_json(s.vehicle);
    json peds = json::array();
    for (const ScenarioAgent& p : s.pedestrians) peds.push_back(agent_to_json(p));
    j["pedestrians"] = std::move(peds);
    return j;
}

Scenario scenario_from_json_obj(const json& j) {
    Scenario s;
    s.circle_radius = j.at("circle_radius").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.visible_vehicle = j.at("visible_vehicle").get<bool>();
    s.vehicle = agent_from_json(j.at("vehicle"));
    for (const json& p : j.at("pedestrians")) s.pedestrians.push_back(agent_from_json(p));
    return s;
}

}  // namespace

std::string scenario_to_json(const Scenario& scenario) {
    json j = scenario_to_json_obj(scenario);
    j["schema_version"] = 1;
    return j.dump();
}

Scenario scenario_from_json(const std::string& text) {
    const json j = json::parse(text);
    if (j.value("schema_version", -1) != 1) {
        throw std::runtime_error("scenario file: unknown schema_version");
    }
    return scenario_from_json_obj(j);
}

std::string episode_to_json(const EpisodeLog& log) {
    json j;
    j["schema_version"] = log.schema_version;
    j["dt"] = log.dt;
    j["seed"] = log.seed;
    j["scenario_hash"] = log.scenario_hash;
    j["outcome"] = outcome_name(log.outcome);
    if (std::isfinite(log.time_to_goal)) j["time_to_goal"] = log.time_to_goal;
    if (!log.error.empty()) j["error"] = log.error;
    j["scenario"] = scenario_to_json_obj(log.scenario);

    json agents = json::array();
    {
        json v = agent_to_json(log.scenario.vehicle);
        v["id"] = "vehicle";
        agents.push_back(std::move(v));
    }
    for (std::size_t i = 0; i < log.scenario.pedestrians.size(); ++i) {
        json p = agent_to_json(log.scenario.pedestrians[i]);
        p["id"] = "ped" + std::to_string(i);
        agents.push_back(std::move(p));
    }
    j["agents"] = std::move(agents);

    json steps = json::array();
    for (const StepRecord& s : log.steps) {
        json js;
        js["t"] = s.t;
        js["vehicle"]["position"] = vec_to_json(s.vehicle_position);
        js["vehicle"]["velocity"] = vec_to_json(s.vehicle_velocity);
        js["action"]["speed"] = s.action.speed;
        js["action"]["heading"] = s.action.heading;
        js["reward"] = s.reward;
        js["d_min"] = s.d_min;
        json peds = json::array();
        for (const PedestrianState& p : s.pedestrians) {
            peds.push_back(json::array({p.position.x, p.position.y, p.velocity.x, p.velocity.y}));
        }
        js["pedestrians"] = std::move(peds);
        steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    return j.dump();
}

EpisodeLog episode_from_json(const std::string& text) {
    const json j = json::parse(text);
    EpisodeLog log;
    log.schema_version = j.at("schema_version").get<int>();
    if (log.schema_version != 1) throw std::runtime_error("episode file: unknown schema_version");
    log.dt = j.at("dt").get<double>();
    log.seed = j.at("seed").get<std::uint64_t>();
    log.scenario_hash = j.at("scenario_hash").get<std::uint64_t>();
    log.outcome = outcome_from_name(j.at("outcome").get<std::string>());
    if (j.contains("time_to_goal")) log.time_to_goal = j.at("time_to_goal").get<double>();
    if (j.contains("error")) log.error = j.at("error").get<std::string>();
    log.scenario = scenario_from_json_obj(j.at("scenario"));
    for (const json& js : j.at("steps")) {
        StepRecord s;
        s.t = js.at("t").get<double>();
        s.vehicle_position = vec_from_json(js.at("vehicle").at("position"));
        s.vehicle_velocity = vec_from_json(js.at("vehicle").at("velocity"));
        s.action = Action{js.at("action").at("speed").get<double>(),
                          js.at("action").at("heading").get<double>()};
        s.reward = js.at("reward").get<double>();
        s.d_min = js.at("d_min").get<double>();
        for (const json& p : js.at("pedestrians")) {
            PedestrianState ped;
            ped.position = {p.at(0).get<double>(), p.at(1).get<double>()};
            ped.velocity = {p.at(2).get<double>(), p.at(3).get<double>()};
            const std::size_t index = s.pedestrians.size();
            if (index < log.scenario.pedestrians.size()) {
                ped.radius = log.scenario.pedestrians[index].radius;
            }
            s.pedestrians.push_back(ped);
        }
        log.steps.push_back(std::move(s));
    }
    return log;
}

}  // namespace crowdnav
