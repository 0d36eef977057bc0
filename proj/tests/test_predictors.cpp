#include <stdexcept>
#include <cmath>

#include "crowdnav/predict/predictors.hpp"
#include "crowdnav/util/rng.hpp"
#include "doctest.h"

using namespace crowdnav;

namespace {

ObservedTracks single_track(std::vector<Vec2> points, double dt = 0.25) {
    ObservedTracks t;
    t.dt = dt;
    t.tracks = {std::move(points)};
    return t;
}

bool same_preds(const PredictionSet& a, const PredictionSet& b, double tol = 0.0) {
    if (a.trajectories.size() != b.trajectories.size()) return false;
    for (std::size_t p = 0; p < a.trajectories.size(); ++p) {
        if (a.trajectories[p].size() != b.trajectories[p].size()) return false;
        for (std::size_t s = 0; s < a.trajectories[p].size(); ++s) {
            for (std::size_t h = 0; h < a.trajectories[p][s].size(); ++h) {
                if (std::abs(a.trajectories[p][s][h].x - b.trajectories[p][s][h].x) > tol ||
                    std::abs(a.trajectories[p][s][h].y - b.trajectories[p][s][h].y) > tol) {
                    return false;
                }
            }
        }
    }
    return true;
}

}  // namespace

TEST_CASE("cvm extrapolates the last displacement") {
    const ObservedTracks t = single_track({{0, 0}, {0.25, 0}});
    const PredictionSet preds = predict_cvm(t, 3);
    CHECK(preds.trajectories[0][0][0].x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(preds.trajectories[0][0][1].x == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(preds.trajectories[0][0][2].x == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(preds.trajectories[0][0][0].y == 0.0);
}

TEST_CASE("cvm on a stationary track stays put") {
    const ObservedTracks t = single_track({{1, 2}, {1, 2}, {1, 2}});
    const PredictionSet preds = predict_cvm(t, 8);
    for (const Vec2& p : preds.trajectories[0][0]) {
        CHECK(p.x == 1.0);
        CHECK(p.y == 2.0);
    }
}

TEST_CASE("cvm on a curved track matches the two-point formula") {
    // Points on a circle; the model only sees the last two.
    std::vector<Vec2> points;
    for (int i = 0; i < 8; ++i) {
        const double a = 0.2 * i;
        points.push_back({std::cos(a), std::sin(a)});
    }
    const ObservedTracks t = single_track(points);
    const PredictionSet preds = predict_cvm(t, 8);
    const Vec2 v = (points[7] - points[6]) / t.dt;
    for (std::size_t h = 0; h < 8; ++h) {
        const Vec2 expect = points[7] + v * (t.dt * static_cast<double>(h + 1));
        CHECK(preds.trajectories[0][0][h].x == doctest::Approx(expect.x).epsilon(1e-12));
        CHECK(preds.trajectories[0][0][h].y == doctest::Approx(expect.y).epsilon(1e-12));
    }
    // Prediction error against the continued circle grows with the horizon.
    double prev_err = 0.0;
    for (std::size_t h = 0; h < 8; ++h) {
        const double a = 0.2 * (8 + h);
        const double err = distance(preds.trajectories[0][0][h], {std::cos(a), std::sin(a)});
        CHECK(err >= prev_err);
        prev_err = err;
    }
}

TEST_CASE("linear equals cvm on an exactly collinear uniform-speed track") {
    std::vector<Vec2> points;
    for (int i = 0; i < 8; ++i) points.push_back({0.3 * i, -0.1 * i});
    const ObservedTracks t = single_track(points);
    CHECK(same_preds(predict_linear(t, 8), predict_cvm(t, 8), 1e-9));
}

TEST_CASE("linear fit matches the closed-form normal equations on a noisy track") {
    Rng rng(3);
    std::vector<Vec2> points;
    for (int i = 0; i < 8; ++i) {
        points.push_back({0.25 * i + rng.normal(0, 0.05), 1.0 - 0.1 * i + rng.normal(0, 0.05)});
    }
    const ObservedTracks t = single_track(points);
    const PredictionSet preds = predict_linear(t, 4);

    // Oracle: solve the 2x2 normal equations directly.
    const std::size_t k = points.size();
    double st = 0, stt = 0;
    for (std::size_t i = 0; i < k; ++i) {
        st += i * t.dt;
        stt += (i * t.dt) * (i * t.dt);
    }
    for (int axis = 0; axis < 2; ++axis) {
        double sx = 0, stx = 0;
        for (std::size_t i = 0; i < k; ++i) {
            const double x = axis == 0 ? points[i].x : points[i].y;
            sx += x;
            stx += i * t.dt * x;
        }
        const double det = k * stt - st * st;
        const double slope = (k * stx - st * sx) / det;
        const double intercept = (sx - slope * st) / k;
        for (std::size_t h = 1; h <= 4; ++h) {
            const double time = (k - 1 + h) * t.dt;
            const double expect = intercept + slope * time;
            const double got = axis == 0 ? preds.trajectories[0][0][h - 1].x
                                         : preds.trajectories[0][0][h - 1].y;
            CHECK(got == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("linear on identical points predicts a stationary future") {
    const ObservedTracks t = single_track(std::vector<Vec2>(8, Vec2{2, 3}));
    const PredictionSet preds = predict_linear(t, 8);
    for (const Vec2& p : preds.trajectories[0][0]) {
        CHECK(p.x == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(p.y == doctest::Approx(3.0).epsilon(1e-12));
    }
}

TEST_CASE("multimodal with m=1 is exactly the cvm anchor") {
    const ObservedTracks t = single_track({{0, 0}, {0.2, 0.1}});
    CHECK(same_preds(predict_multimodal(t, 8, 1, 77), predict_cvm(t, 8)));
}

TEST_CASE("multimodal with zero noise collapses to identical samples") {
    const ObservedTracks t = single_track({{0, 0}, {0.2, 0.1}});
    MultimodalConfig cfg;
    cfg.sigma_heading = 0.0;
    cfg.sigma_speed = 0.0;
    const PredictionSet preds = predict_multimodal(t, 8, 6, 77, cfg);
    REQUIRE(preds.trajectories[0].size() == 6);
    for (std::size_t s = 1; s < 6; ++s) {
        for (std::size_t h = 0; h < 8; ++h) {
            CHECK(preds.trajectories[0][s][h].x == preds.trajectories[0][0][h].x);
            CHECK(preds.trajectories[0][s][h].y == preds.trajectories[0][0][h].y);
        }
    }
}

TEST_CASE("multimodal heading spread tracks sigma_heading") {
    const ObservedTracks t = single_track({{0, 0}, {0.25, 0}});  // anchor heads along +x
    MultimodalConfig cfg;
    cfg.sigma_heading = 0.3;
    cfg.sigma_speed = 0.0;
    double sum = 0.0, sum_sq = 0.0;
    std::size_t count = 0;
    for (std::uint64_t seed = 0; seed < 600; ++seed) {
        const PredictionSet preds = predict_multimodal(t, 1, 20, seed, cfg);
        for (std::size_t s = 1; s < 20; ++s) {
            const Vec2 step = preds.trajectories[0][s][0] - Vec2{0.25, 0};
            const double heading = step.angle();
            sum += heading;
            sum_sq += heading * heading;
            ++count;
        }
    }
    const double mean = sum / count;
    const double stddev = std::sqrt(sum_sq / count - mean * mean);
    CHECK(count >= 10000);
    CHECK(std::abs(stddev - cfg.sigma_heading) <= 0.15 * cfg.sigma_heading);
}

TEST_CASE("multimodal is reproducible bitwise per seed") {
    ObservedTracks t;
    t.dt = 0.25;
    t.tracks = {{{0, 0}, {0.2, 0.1}}, {{1, 1}, {1.1, 0.8}}};
    const PredictionSet a = predict_multimodal(t, 8, 20, 4242);
    const PredictionSet b = predict_multimodal(t, 8, 20, 4242);
    CHECK(same_preds(a, b));
    const PredictionSet c = predict_multimodal(t, 8, 20, 4243);
    CHECK(!same_preds(a, c));
}

TEST_CASE("all predictors are translation equivariant") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        ObservedTracks t;
        t.dt = 0.25;
        for (int p = 0; p < 3; ++p) {
            std::vector<Vec2> track;
            for (int i = 0; i < 8; ++i) {
                track.push_back({rng.uniform(-4, 4), rng.uniform(-4, 4)});
            }
            t.tracks.push_back(std::move(track));
        }
        const Vec2 shift{rng.uniform(-10, 10), rng.uniform(-10, 10)};
        ObservedTracks shifted = t;
        for (auto& track : shifted.tracks) {
            for (Vec2& p : track) p += shift;
        }

        const auto check_equivariant = [&](const PredictionSet& a, const PredictionSet& b) {
            for (std::size_t p = 0; p < a.trajectories.size(); ++p) {
                for (std::size_t s = 0; s < a.trajectories[p].size(); ++s) {
                    for (std::size_t h = 0; h < a.trajectories[p][s].size(); ++h) {
                        const Vec2 moved = a.trajectories[p][s][h] + shift;
                        CHECK(moved.x == doctest::Approx(b.trajectories[p][s][h].x).epsilon(1e-9));
                        CHECK(moved.y == doctest::Approx(b.trajectories[p][s][h].y).epsilon(1e-9));
                    }
                }
            }
        };
        check_equivariant(predict_cvm(t, 8), predict_cvm(shifted, 8));
        check_equivariant(predict_linear(t, 8), predict_linear(shifted, 8));
        check_equivariant(predict_multimodal(t, 8, 5, 55), predict_multimodal(shifted, 8, 5, 55));
    }
}

TEST_CASE("track history pads short observations with the earliest point") {
    TrackHistory history(4, 0.25);
    std::vector<PedestrianState> peds(1);
    peds[0].position = {1, 1};
    history.observe(peds);
    ObservedTracks t = history.tracks();
    REQUIRE(t.length() == 4);
    for (const Vec2& p : t.tracks[0]) CHECK(p == Vec2{1, 1});

    peds[0].position = {1.25, 1};
    history.observe(peds);
    t = history.tracks();
    CHECK(t.tracks[0][2] == Vec2{1, 1});
    CHECK(t.tracks[0][3] == Vec2{1.25, 1});
}

TEST_CASE("predictors reject malformed tracks") {
    ObservedTracks t;
    t.dt = 0.25;
    t.tracks = {{{0, 0}}};  // k = 1
    CHECK_THROWS_AS(predict_cvm(t, 8), std::invalid_argument);
    ObservedTracks uneven;
    uneven.dt = 0.25;
    uneven.tracks = {{{0, 0}, {1, 0}}, {{0, 0}, {1, 0}, {2, 0}}};
    CHECK_THROWS_AS(predict_linear(uneven, 8), std::invalid_argument);
}
