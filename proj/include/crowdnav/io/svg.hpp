#pragma once

#include <string>

#include "crowdnav/eval/episode_log.hpp"
#include "crowdnav/eval/experiment.hpp"

namespace crowdnav {

// Standalone SVG of an episode: vehicle path with timestamps, numbered
// pedestrian circles at regular intervals, goal marker. Byte-deterministic
// for a given log.
std::string render_episode_svg(const EpisodeLog& log);

// Metrics as CSV and as an aligned text table.
std::string metrics_to_csv(const Metrics& metrics);
std::string metrics_to_table(const Metrics& metrics);
std::string episode_results_to_csv(const std::vector<EpisodeResult>& episodes);

}  // namespace crowdnav
