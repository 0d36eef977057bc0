#include "crowdnav/predict/predictors.hpp"

#include <cmath>
#include <stdexcept>

#include "crowdnav/util/rng.hpp"

namespace crowdnav {

void TrackHistory::observe(const std::vector<PedestrianState>& pedestrians) {
    if (history_.empty()) {
        history_.resize(pedestrians.size());
        for (std::size_t i = 0; i < pedestrians.size(); ++i) {
            history_[i].assign(k_, pedestrians[i].position);
        }
        return;
    }
    if (history_.size() != pedestrians.size()) {
        throw std::invalid_argument("TrackHistory: pedestrian count changed mid-episode");
    }
    for (std::size_t i = 0; i < pedestrians.size(); ++i) {
        history_[i].erase(history_[i].begin());
        history_[i].push_back(pedestrians[i].position);
    }
}

ObservedTracks TrackHistory::tracks() const {
    ObservedTracks t;
    t.dt = dt_;
    t.tracks = history_;
    return t;
}

namespace {

void check_tracks(const ObservedTracks& tracks) {
    for (const auto& track : tracks.tracks) {
        if (track.size() != tracks.length() || track.size() < 2) {
            throw std::invalid_argument("ObservedTracks: all tracks need the same k >= 2");
        }
    }
}

PredictionSet extrapolate(const ObservedTracks& tracks, std::size_t horizon,
                          const std::vector<Vec2>& velocities) {
    PredictionSet preds;
    preds.horizon = horizon;
    preds.num_samples = 1;
    preds.weights = {1.0};
    preds.trajectories.resize(tracks.num_pedestrians());
    for (std::size_t i = 0; i < tracks.num_pedestrians(); ++i) {
        const Vec2 last = tracks.tracks[i].back();
        std::vector<Vec2> traj;
        traj.reserve(horizon);
        for (std::size_t h = 1; h <= horizon; ++h) {
            traj.push_back(last + velocities[i] * (tracks.dt * static_cast<double>(h)));
        }
        preds.trajectories[i] = {std::move(traj)};
    }
    return preds;
}

}  // namespace

PredictionSet predict_cvm(const ObservedTracks& tracks, std::size_t horizon) {
    check_tracks(tracks);
    std::vector<Vec2> velocities;
    velocities.reserve(tracks.num_pedestrians());
    for (const auto& track : tracks.tracks) {
        const std::size_t k = track.size();
        velocities.push_back((track[k - 1] - track[k - 2]) / tracks.dt);
    }
    return extrapolate(tracks, horizon, velocities);
}

PredictionSet predict_linear(const ObservedTracks& tracks, std::size_t horizon) {
    check_tracks(tracks);
    const std::size_t k = tracks.length();

    PredictionSet preds;
    preds.horizon = horizon;
    preds.num_samples = 1;
    preds.weights = {1.0};
    preds.trajectories.resize(tracks.num_pedestrians());

    // Per-coordinate least squares over times t_i = i*dt, i = 0..k-1.
    const double n = static_cast<double>(k);
    double sum_t = 0.0, sum_tt = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double t = static_cast<double>(i) * tracks.dt;
        sum_t += t;
        sum_tt += t * t;
    }
    const double denom = n * sum_tt - sum_t * sum_t;

    for (std::size_t p = 0; p < tracks.num_pedestrians(); ++p) {
        const auto& track = tracks.tracks[p];
        Vec2 sum_x{0.0, 0.0}, sum_tx{0.0, 0.0};
        for (std::size_t i = 0; i < k; ++i) {
            const double t = static_cast<double>(i) * tracks.dt;
            sum_x += track[i];
            sum_tx += track[i] * t;
        }
        Vec2 slope{0.0, 0.0}, intercept = track.back();
        if (denom > 0.0) {
            slope = (sum_tx * n - sum_x * sum_t) / denom;
            intercept = (sum_x - slope * sum_t) / n;
        }
        std::vector<Vec2> traj;
        traj.reserve(horizon);
        for (std::size_t h = 1; h <= horizon; ++h) {
            const double t = static_cast<double>(k - 1 + h) * tracks.dt;
            traj.push_back(intercept + slope * t);
        }
        preds.trajectories[p] = {std::move(traj)};
    }
    return preds;
}

PredictionSet predict_multimodal(const ObservedTracks& tracks, std::size_t horizon,
                                 std::size_t num_samples, std::uint64_t seed,
                                 const MultimodalConfig& cfg) {
    check_tracks(tracks);
    if (num_samples < 1) throw std::invalid_argument("predict_multimodal: need m >= 1");

    const std::size_t n = tracks.num_pedestrians();
    Rng rng(seed);

    // Sampled velocity per (pedestrian, sample); sample 0 is the CVM anchor.
    std::vector<std::vector<Vec2>> velocities(n, std::vector<Vec2>(num_samples));
    for (std::size_t p = 0; p < n; ++p) {
        const auto& track = tracks.tracks[p];
        const Vec2 v_cvm = (track[track.size() - 1] - track[track.size() - 2]) / tracks.dt;
        velocities[p][0] = v_cvm;
        for (std::size_t s = 1; s < num_samples; ++s) {
            const double dtheta = rng.normal(0.0, cfg.sigma_heading);
            const double dspeed = rng.normal(0.0, cfg.sigma_speed);
            Vec2 v = v_cvm.rotated(dtheta);
            const double speed = v.norm();
            if (speed > 0.0) v = v * (std::max(0.0, speed + dspeed) / speed);
            velocities[p][s] = v;
        }
    }

    if (cfg.social_repulsion && n > 1) {
        // Steer non-anchor samples of near-colliding pedestrian pairs apart.
        // The anchor stays untouched so m=1 remains exactly the CVM output.
        for (std::size_t s = 1; s < num_samples; ++s) {
            for (std::size_t p = 0; p < n; ++p) {
                for (std::size_t q = p + 1; q < n; ++q) {
                    for (std::size_t h = 1; h <= horizon; ++h) {
                        const double t = tracks.dt * static_cast<double>(h);
                        const Vec2 pp = tracks.tracks[p].back() + velocities[p][s] * t;
                        const Vec2 pq = tracks.tracks[q].back() + velocities[q][s] * t;
                        const double d = distance(pp, pq);
                        if (d >= cfg.repulsion_distance) continue;
                        const double overlap = 1.0 - d / cfg.repulsion_distance;
                        const Vec2 delta = pq - pp;
                        const double side_p = velocities[p][s].det(delta) >= 0.0 ? -1.0 : 1.0;
                        const double side_q = velocities[q][s].det(-delta) >= 0.0 ? -1.0 : 1.0;
                        velocities[p][s] = velocities[p][s].rotated(side_p * cfg.repulsion_gain * overlap);
                        velocities[q][s] = velocities[q][s].rotated(side_q * cfg.repulsion_gain * overlap);
                        break;  // first conflict step only
                    }
                }
            }
        }
    }

    PredictionSet preds;
    preds.horizon = horizon;
    preds.num_samples = num_samples;
    preds.weights.assign(num_samples, 1.0 / static_cast<double>(num_samples));
    preds.trajectories.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
        preds.trajectories[p].resize(num_samples);
        const Vec2 last = tracks.tracks[p].back();
        for (std::size_t s = 0; s < num_samples; ++s) {
            std::vector<Vec2> traj;
            traj.reserve(horizon);
            for (std::size_t h = 1; h <= horizon; ++h) {
                traj.push_back(last + velocities[p][s] * (tracks.dt * static_cast<double>(h)));
            }
            preds.trajectories[p][s] = std::move(traj);
        }
    }
    return preds;
}

}  // namespace crowdnav
