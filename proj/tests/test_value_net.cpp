#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "crowdnav/util/rng.hpp"
#include "crowdnav/value/network.hpp"
#include "doctest.h"

using namespace crowdnav;

namespace {

EgoJointState random_ego(Rng& rng, std::size_t n_pedestrians) {
    EgoJointState ego;
    ego.goal_dist = rng.uniform(0, 8);
    ego.v_pref = 1.0;
    ego.heading = rng.uniform(-M_PI, M_PI);
    ego.radius = 0.3;
    ego.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    for (std::size_t i = 0; i < n_pedestrians; ++i) {
        EgoPedestrian p;
        p.position = {rng.uniform(-4, 4), rng.uniform(-4, 4)};
        p.velocity = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        p.radius = rng.uniform(0.2, 0.4);
        p.dist = p.position.norm();
        ego.pedestrians.push_back(p);
    }
    return ego;
}

ValueNetConfig small_config() {
    ValueNetConfig cfg;
    cfg.embedding = {16, 12};
    cfg.attention = {10, 1};
    cfg.value_head = {14, 8, 1};
    return cfg;
}

}  // namespace

TEST_CASE("a single pedestrian gets attention weight one") {
    Rng rng(1);
    const ValueNetParams params = ValueNetParams::init(small_config(), 5);
    const EgoJointState ego = random_ego(rng, 1);
    const std::vector<double> w = attention_weights(ego, params);
    REQUIRE(w.size() == 1);
    CHECK(w[0] == 1.0);
}

TEST_CASE("identical pedestrians share attention equally") {
    Rng rng(2);
    const ValueNetParams params = ValueNetParams::init(small_config(), 6);
    EgoJointState ego = random_ego(rng, 1);
    ego.pedestrians.push_back(ego.pedestrians[0]);
    const std::vector<double> w = attention_weights(ego, params);
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 0.5);
}

TEST_CASE("attention weights are a distribution and exactly permutation equivariant") {
    Rng rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const ValueNetParams params =
            ValueNetParams::init(small_config(), 100 + static_cast<std::uint64_t>(trial));
        EgoJointState ego = random_ego(rng, 5);
        const std::vector<double> w = attention_weights(ego, params);
        double sum = 0.0;
        for (double x : w) {
            CHECK(x >= 0.0);
            sum += x;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        std::vector<std::size_t> perm(5);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = 5; i > 1; --i) std::swap(perm[i - 1], perm[rng.uniform_index(i)]);
        EgoJointState shuffled = ego;
        for (std::size_t i = 0; i < 5; ++i) shuffled.pedestrians[i] = ego.pedestrians[perm[i]];
        const std::vector<double> ws = attention_weights(shuffled, params);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(ws[i] == w[perm[i]]);  // exact
        }
        CHECK(value_forward(shuffled, params) == value_forward(ego, params));  // exact
    }
}

TEST_CASE("all-zero parameters give value zero exactly") {
    Rng rng(4);
    const ValueNetParams params = ValueNetParams::zeros(small_config());
    CHECK(value_forward(random_ego(rng, 3), params) == 0.0);
    CHECK(value_forward(random_ego(rng, 0), params) == 0.0);
}

TEST_CASE("zero-loss batches give zero gradients") {
    Rng rng(5);
    const ValueNetParams params = ValueNetParams::init(small_config(), 9);
    std::vector<TrainingSample> batch;
    for (int i = 0; i < 4; ++i) {
        TrainingSample s;
        s.state = random_ego(rng, 3);
        s.target = value_forward(s.state, params);  // target == output
        batch.push_back(std::move(s));
    }
    const ValueNetGrads grads = gradient(params, batch);
    CHECK(grads.loss == 0.0);
    for (const double* g : grads.shape.flat()) CHECK(*g == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
    // Three random architectures, ten probes each, 1e-4 relative agreement.
    std::vector<ValueNetConfig> configs;
    configs.push_back(small_config());
    {
        ValueNetConfig c;
        c.embedding = {10};
        c.attention = {8, 1};
        c.value_head = {12, 1};
        configs.push_back(c);
    }
    {
        ValueNetConfig c;
        c.embedding = {20, 14, 10};
        c.attention = {10, 10, 1};
        c.value_head = {16, 12, 8, 1};
        configs.push_back(c);
    }

    Rng rng(6);
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        ValueNetParams params = ValueNetParams::init(configs[ci], 1000 + ci);
        std::vector<TrainingSample> batch;
        for (int i = 0; i < 5; ++i) {
            TrainingSample s;
            s.state = random_ego(rng, i % 4);  // include a pedestrian-free state
            s.target = rng.uniform(-1, 1);
            batch.push_back(std::move(s));
        }
        // Give the empty-crowd placeholder a nonzero value so its gradient path is live.
        for (double& v : params.empty_crowd) v = rng.uniform(-0.5, 0.5);

        const ValueNetGrads grads = gradient(params, batch);
        std::vector<double*> flat = params.flat();
        std::vector<const double*> gflat = grads.shape.flat();
        REQUIRE(flat.size() == gflat.size());

        Rng probe_rng(2000 + ci);
        for (int probe = 0; probe < 10; ++probe) {
            const std::size_t idx = probe_rng.uniform_index(flat.size());
            const double eps = 1e-6;
            const double saved = *flat[idx];
            *flat[idx] = saved + eps;
            const double loss_plus = gradient(params, batch).loss;
            *flat[idx] = saved - eps;
            const double loss_minus = gradient(params, batch).loss;
            *flat[idx] = saved;
            const double numeric = (loss_plus - loss_minus) / (2 * eps);
            const double analytic = *gflat[idx];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            CHECK(rel < 1e-4);
        }
    }
}

TEST_CASE("attention block gradients alone match finite differences") {
    Rng rng(7);
    ValueNetParams params = ValueNetParams::init(small_config(), 31);
    std::vector<TrainingSample> batch;
    for (int i = 0; i < 3; ++i) {
        TrainingSample s;
        s.state = random_ego(rng, 4);
        s.target = rng.uniform(-1, 1);
        batch.push_back(std::move(s));
    }
    const ValueNetGrads grads = gradient(params, batch);

    // Probe only the attention scorer's parameters.
    for (std::size_t layer = 0; layer < params.attention.layers.size(); ++layer) {
        double& w = params.attention.layers[layer].w.a[0];
        const double g = grads.shape.attention.layers[layer].w.a[0];
        const double eps = 1e-6;
        const double saved = w;
        w = saved + eps;
        const double lp = gradient(params, batch).loss;
        w = saved - eps;
        const double lm = gradient(params, batch).loss;
        w = saved;
        const double numeric = (lp - lm) / (2 * eps);
        CHECK(std::abs(g - numeric) / std::max({std::abs(g), std::abs(numeric), 1e-8}) < 1e-4);
    }
}

TEST_CASE("params serialize round-trip bit exactly") {
    const ValueNetParams params = ValueNetParams::init(small_config(), 12345);
    const std::string text = serialize_params(params);
    const ValueNetParams back = deserialize_params(text);
    const std::vector<const double*> a = params.flat();
    const std::vector<const double*> b = back.flat();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);
    CHECK(serialize_params(back) == text);
}

TEST_CASE("analytic value prefers states nearer the goal") {
    Rng rng(8);
    EgoJointState near = random_ego(rng, 2);
    EgoJointState far = near;
    near.goal_dist = 1.0;
    far.goal_dist = 3.0;
    CHECK(analytic_value(near) > analytic_value(far));

    EgoJointState at_goal;
    at_goal.goal_dist = 0.0;
    at_goal.radius = 0.3;
    at_goal.v_pref = 1.0;
    for (int i = 0; i < 50; ++i) {
        CHECK(analytic_value(at_goal) >= analytic_value(random_ego(rng, 0)));
    }
}

TEST_CASE("analytic value field is Lipschitz over sampled displacements") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
        EgoJointState a = random_ego(rng, 3);
        EgoJointState b = a;
        const double dd = rng.uniform(-0.1, 0.1);
        b.goal_dist = std::max(0.0, a.goal_dist + dd);
        const double moved = std::abs(b.goal_dist - a.goal_dist);
        CHECK(std::abs(analytic_value(a) - analytic_value(b)) <= 1.0 * moved + 1e-12);

        EgoJointState c = a;
        const Vec2 shift{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
        c.pedestrians[0].position += shift;
        c.pedestrians[0].dist = c.pedestrians[0].position.norm();
        const double ped_moved = shift.norm();
        CHECK(std::abs(analytic_value(a) - analytic_value(c)) <= 1.0 * ped_moved + 1e-12);
    }
}

TEST_CASE("attention_weights demands at least one pedestrian") {
    const ValueNetParams params = ValueNetParams::init(small_config(), 2);
    EgoJointState empty;
    CHECK_THROWS_AS(attention_weights(empty, params), std::invalid_argument);
}
