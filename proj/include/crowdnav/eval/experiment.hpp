#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "crowdnav/eval/episode_log.hpp"
#include "crowdnav/planner/planner.hpp"
#include "crowdnav/sim/environment.hpp"

namespace crowdnav {

enum class PlanningMode { ReplanEveryStep, OpenLoop8 };

// A resolved, runnable policy for one episode.
struct PolicySpec {
    enum class Kind { Planner, OrcaBaseline, Custom };
    Kind kind = Kind::Planner;

    // Planner policy
    ValueFunction value_fn;
    PredictorFn predictor;
    PlannerConfig planner;

    // ORCA baseline (reciprocity assumed, which pedestrians may not honor)
    OrcaParams orca;
    double orca_safety_margin = 0.0;

    // Custom (tests): action from the current state and previous action
    std::function<Action(const JointState&, const Action&)> custom;
};

// Factory invoked once per episode so stochastic predictors get their own
// per-episode stream and external predictors their own connection.
using PolicyFactory = std::function<PolicySpec(std::uint64_t episode_seed)>;

struct EpisodeOptions {
    SimConfig sim;
    PlanningMode mode = PlanningMode::ReplanEveryStep;
    std::size_t track_k = 8;
    std::size_t open_loop_window = 8;
};

EpisodeLog run_episode(const Scenario& scenario, const PolicySpec& policy,
                       const EpisodeOptions& options);

struct Metrics {
    int num_cases = 0;
    int successes = 0;
    int collisions = 0;
    int timeouts = 0;
    int aborted = 0;
    double success_rate = 0.0;
    double collision_rate = 0.0;
    double timeout_rate = 0.0;
    double mean_time_success = std::numeric_limits<double>::quiet_NaN();
    double max_acceleration = 0.0;               // max over steps and episodes
    std::vector<double> episode_max_acceleration;  // per-episode distribution
};

struct EpisodeResult {
    std::uint64_t seed = 0;
    std::uint64_t scenario_hash = 0;
    Outcome outcome = Outcome::Timeout;
    double time = 0.0;     // simulated seconds until termination
    double max_acc = 0.0;  // per-episode max acceleration
    double min_d_min = std::numeric_limits<double>::infinity();
};

struct ExperimentConfig {
    ScenarioConfig scenario;
    int n_pedestrians = 5;
    EpisodeOptions episode;
    int num_cases = 100;
    std::uint64_t base_seed = 0;
    int workers = 0;       // 0 = hardware concurrency
    bool keep_logs = false;
};

struct MonteCarloOutput {
    Metrics metrics;
    std::vector<EpisodeResult> episodes;
    std::vector<EpisodeLog> logs;  // filled when keep_logs
};

// Runs num_cases seeded episodes (seed = base + index); episodes are
// independent and fan out across workers, aggregation is index-ordered and
// therefore deterministic.
MonteCarloOutput monte_carlo(const ExperimentConfig& config, const PolicyFactory& policy_factory);

// Independent recomputation of Metrics from logs alone.
Metrics metrics_from_logs(const std::vector<EpisodeLog>& logs);

struct ComparisonRow {
    std::uint64_t seed = 0;
    bool success_a = false, success_b = false;
    double time_a = 0.0, time_b = 0.0;
    double max_acc_a = 0.0, max_acc_b = 0.0;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
    double success_rate_a = 0.0, success_rate_b = 0.0;
    double mean_rel_time_change = 0.0;     // (b - a) / a over paired successes
    double mean_rel_max_acc_change = 0.0;  // (b - a) / a
    int acc_decreased = 0;                 // sign counts over paired seeds
    int acc_increased = 0;
    int acc_tied = 0;

    std::string to_csv() const;
};

// Paired per-seed comparison; throws when the runs do not share scenarios.
ComparisonReport ablation_compare(const std::vector<EpisodeResult>& a,
                                  const std::vector<EpisodeResult>& b);

}  // namespace crowdnav
