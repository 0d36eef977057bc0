#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "crowdnav/core/geometry.hpp"

namespace crowdnav {

struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;  // row-major

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }
};

struct LinearLayer {
    Matrix w;               // out x in
    std::vector<double> b;  // out
};

// Dense stack with ReLU between layers; relu_output controls the last one.
struct Mlp {
    std::vector<LinearLayer> layers;
    bool relu_output = false;
};

struct ValueNetConfig {
    std::vector<std::size_t> embedding = {150, 100};      // both towers
    std::vector<std::size_t> attention = {100, 100, 1};   // last entry must be 1
    std::vector<std::size_t> value_head = {150, 100, 100, 1};

    std::size_t embedding_dim() const { return embedding.back(); }
};

// Weights of the socially attentive value network: two per-pedestrian
// embedding towers (one scored by the attention net, one pooled into the
// crowd feature), the attention scorer, the value head, and a learned
// placeholder crowd feature for pedestrian-free states.
struct ValueNetParams {
    ValueNetConfig config;
    Mlp embed_attention;
    Mlp embed_pooled;
    Mlp attention;
    Mlp value_head;
    std::vector<double> empty_crowd;

    static ValueNetParams init(const ValueNetConfig& config, std::uint64_t seed);
    static ValueNetParams zeros(const ValueNetConfig& config);

    // Flat parameter views, used by the optimizer and the gradient checker.
    std::vector<double*> flat();
    std::vector<const double*> flat() const;
    std::size_t parameter_count() const;
};

// Feature layout fed to the network, built from an EgoJointState.
inline constexpr std::size_t kSelfFeatureDim = 6;  // dg, v_pref, heading, r, vx, vy
inline constexpr std::size_t kPedFeatureDim = 7;   // px, py, vx, vy, r, dist, r_sum
inline constexpr std::size_t kInputDim = kSelfFeatureDim + kPedFeatureDim;

std::vector<double> self_feature(const EgoJointState& ego);
std::vector<double> pair_feature(const EgoJointState& ego, const EgoPedestrian& ped);

// Softmax attention over pedestrians; nonnegative, sums to 1, exactly
// permutation-equivariant in pedestrian order. Requires >= 1 pedestrian.
std::vector<double> attention_weights(const EgoJointState& ego, const ValueNetParams& params);

// Scalar state value; exactly permutation-invariant in pedestrian order.
double value_forward(const EgoJointState& ego, const ValueNetParams& params);

struct TrainingSample {
    EgoJointState state;
    double target = 0.0;
};

struct ValueNetGrads {
    ValueNetParams shape;  // same structure, entries hold gradients
    double loss = 0.0;
};

// Mean-squared-error gradient over the batch via manual backpropagation.
ValueNetGrads gradient(const ValueNetParams& params,
                       const std::vector<TrainingSample>& batch);

// Unscaled building block: adds per-sample gradients (d sum of squared
// errors) into accum and returns the summed squared error.
double gradient_accumulate(const ValueNetParams& params, const TrainingSample* samples,
                           std::size_t count, ValueNetParams& accum);

// Training-free baseline: goal-distance decay minus pedestrian-proximity
// penalties. Lets the planner run and be tested without any training.
double analytic_value(const EgoJointState& ego);

using ValueFunction = std::function<double(const EgoJointState&)>;

// Versioned JSON round-trip for trained weights; bit-exact.
std::string serialize_params(const ValueNetParams& params);
ValueNetParams deserialize_params(const std::string& text);
void save_params(const ValueNetParams& params, const std::string& path);
ValueNetParams load_params(const std::string& path);

}  // namespace crowdnav
