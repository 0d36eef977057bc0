#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "crowdnav/core/types.hpp"

namespace crowdnav {

// Fixed-rate position histories, one per pedestrian, oldest first. All
// pedestrians share the same length k >= 2 and timestamps.
struct ObservedTracks {
    double dt = 0.25;
    std::vector<std::vector<Vec2>> tracks;

    std::size_t num_pedestrians() const { return tracks.size(); }
    std::size_t length() const { return tracks.empty() ? 0 : tracks.front().size(); }
};

// m candidate future trajectories per pedestrian over a fixed horizon.
struct PredictionSet {
    std::size_t horizon = 0;
    std::size_t num_samples = 1;
    // [pedestrian][sample][step]
    std::vector<std::vector<std::vector<Vec2>>> trajectories;
    std::vector<double> weights;  // per sample, sum to 1

    std::size_t num_pedestrians() const { return trajectories.size(); }
};

// Rolling observation window. Pedestrians observed for fewer than k steps
// are padded by repeating the earliest observation, so predictors stay total
// from t = 0.
class TrackHistory {
  public:
    TrackHistory(std::size_t k, double dt) : k_(k), dt_(dt) {}

    void observe(const std::vector<PedestrianState>& pedestrians);
    ObservedTracks tracks() const;

  private:
    std::size_t k_;
    double dt_;
    std::vector<std::vector<Vec2>> history_;
};

struct MultimodalConfig {
    double sigma_heading = 0.25;  // rad, per-sample heading perturbation
    double sigma_speed = 0.15;    // m/s
    bool social_repulsion = false;
    double repulsion_distance = 0.6;  // center distance that counts as a conflict
    double repulsion_gain = 0.15;     // rad per unit of conflict overlap
};

// Constant-velocity extrapolation from the last two observed points.
PredictionSet predict_cvm(const ObservedTracks& tracks, std::size_t horizon);

// Per-coordinate least-squares line over the whole window, extrapolated.
PredictionSet predict_linear(const ObservedTracks& tracks, std::size_t horizon);

// Stochastic multimodal sampler standing in for a learned generator: sample 0
// is the CVM anchor; the rest perturb its heading and speed, optionally with
// a pairwise social-repulsion adjustment. Deterministic per seed.
PredictionSet predict_multimodal(const ObservedTracks& tracks, std::size_t horizon,
                                 std::size_t num_samples, std::uint64_t seed,
                                 const MultimodalConfig& cfg = {});

using PredictorFn = std::function<PredictionSet(const ObservedTracks&)>;

}  // namespace crowdnav
