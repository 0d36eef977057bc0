#include "crowdnav/value/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "crowdnav/util/rng.hpp"
#include "json.hpp"

namespace crowdnav {

namespace {

void mat_vec(const LinearLayer& layer, const std::vector<double>& x, std::vector<double>& out) {
    out.resize(layer.w.rows);
    const double* w = layer.w.a.data();
    for (std::size_t r = 0; r < layer.w.rows; ++r) {
        double acc = layer.b[r];
        const double* row = w + r * layer.w.cols;
        for (std::size_t c = 0; c < layer.w.cols; ++c) acc += row[c] * x[c];
        out[r] = acc;
    }
}

struct MlpCache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;  // per-layer preactivation
    std::vector<std::vector<double>> act;  // per-layer activation
};

// Writes the mlp output into `out`; `out` must not alias `x`.
void mlp_forward(const Mlp& mlp, const std::vector<double>& x, std::vector<double>& out,
                 MlpCache* cache) {
    thread_local std::vector<double> buf_a, buf_b;
    if (cache) {
        cache->input = x;
        cache->pre.resize(mlp.layers.size());
        cache->act.resize(mlp.layers.size());
    }
    const std::vector<double>* cur = &x;
    std::vector<double>* next = &buf_a;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        mat_vec(mlp.layers[l], *cur, *next);
        if (cache) cache->pre[l] = *next;
        const bool relu = l + 1 < mlp.layers.size() || mlp.relu_output;
        if (relu) {
            for (double& v : *next) v = v > 0.0 ? v : 0.0;
        }
        if (cache) cache->act[l] = *next;
        cur = next;
        next = (next == &buf_a) ? &buf_b : &buf_a;
    }
    out = *cur;
}

// Propagates g (grad wrt mlp output) back through the cache, accumulating
// parameter gradients, and returns the grad wrt the mlp input.
std::vector<double> mlp_backward(const Mlp& mlp, const MlpCache& cache, std::vector<double> g,
                                 Mlp& grads) {
    for (std::size_t li = mlp.layers.size(); li-- > 0;) {
        const LinearLayer& layer = mlp.layers[li];
        const bool relu = li + 1 < mlp.layers.size() || mlp.relu_output;
        if (relu) {
            for (std::size_t r = 0; r < g.size(); ++r) {
                if (cache.pre[li][r] <= 0.0) g[r] = 0.0;
            }
        }
        const std::vector<double>& input = li == 0 ? cache.input : cache.act[li - 1];
        LinearLayer& glayer = grads.layers[li];
        std::vector<double> gin(layer.w.cols, 0.0);
        for (std::size_t r = 0; r < layer.w.rows; ++r) {
            const double gz = g[r];
            glayer.b[r] += gz;
            double* grow = glayer.w.a.data() + r * layer.w.cols;
            const double* row = layer.w.a.data() + r * layer.w.cols;
            for (std::size_t c = 0; c < layer.w.cols; ++c) {
                grow[c] += gz * input[c];
                gin[c] += row[c] * gz;
            }
        }
        g = std::move(gin);
    }
    return g;
}

Mlp make_mlp(std::size_t in_dim, const std::vector<std::size_t>& sizes, bool relu_output) {
    Mlp mlp;
    mlp.relu_output = relu_output;
    std::size_t prev = in_dim;
    for (std::size_t s : sizes) {
        LinearLayer layer;
        layer.w = Matrix(s, prev);
        layer.b.assign(s, 0.0);
        mlp.layers.push_back(std::move(layer));
        prev = s;
    }
    return mlp;
}

void init_mlp(Mlp& mlp, Rng& rng) {
    for (LinearLayer& layer : mlp.layers) {
        const double lim =
            std::sqrt(6.0 / static_cast<double>(layer.w.rows + layer.w.cols));
        for (double& v : layer.w.a) v = rng.uniform(-lim, lim);
        for (double& v : layer.b) v = 0.0;
    }
}

// Canonical pedestrian processing order: sorting by the pair feature makes
// the pooled sums independent of input order, so permutation invariance is
// exact rather than up to float reassociation.
std::vector<std::size_t> canonical_order(const std::vector<std::vector<double>>& features) {
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(features[a].begin(), features[a].end(),
                                            features[b].begin(), features[b].end());
    });
    return order;
}

struct StateForward {
    std::vector<std::vector<double>> features;  // per pedestrian, original order
    std::vector<std::size_t> order;             // canonical processing order
    std::vector<double> scores;                 // per pedestrian in canonical order
    std::vector<double> alpha;                  // softmax weights, canonical order
    std::vector<double> crowd;                  // pooled crowd feature
    std::vector<double> self;
    double value = 0.0;

    // caches (only filled when requested)
    std::vector<MlpCache> att_embed_cache;
    std::vector<MlpCache> att_score_cache;
    std::vector<MlpCache> pool_embed_cache;
    std::vector<std::vector<double>> pooled;  // per pedestrian, canonical order
    MlpCache head_cache;
};

void forward_state(const EgoJointState& ego, const ValueNetParams& params, bool want_cache,
                   StateForward& fwd) {
    const std::size_t n = ego.pedestrians.size();
    fwd.self = self_feature(ego);
    fwd.features.resize(n);
    for (std::size_t i = 0; i < n; ++i) fwd.features[i] = pair_feature(ego, ego.pedestrians[i]);
    fwd.order = canonical_order(fwd.features);

    const std::size_t e_dim = params.config.embedding_dim();
    if (n == 0) {
        fwd.crowd = params.empty_crowd;
    } else {
        fwd.scores.resize(n);
        fwd.alpha.resize(n);
        if (want_cache) {
            fwd.att_embed_cache.resize(n);
            fwd.att_score_cache.resize(n);
            fwd.pool_embed_cache.resize(n);
        }
        fwd.pooled.resize(n);
        std::vector<double> e_att, score;
        for (std::size_t k = 0; k < n; ++k) {
            const std::vector<double>& x = fwd.features[fwd.order[k]];
            mlp_forward(params.embed_attention, x, e_att,
                        want_cache ? &fwd.att_embed_cache[k] : nullptr);
            mlp_forward(params.attention, e_att, score,
                        want_cache ? &fwd.att_score_cache[k] : nullptr);
            fwd.scores[k] = score[0];
            mlp_forward(params.embed_pooled, x, fwd.pooled[k],
                        want_cache ? &fwd.pool_embed_cache[k] : nullptr);
        }
        const double max_score = *std::max_element(fwd.scores.begin(), fwd.scores.end());
        double denom = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            fwd.alpha[k] = std::exp(fwd.scores[k] - max_score);
            denom += fwd.alpha[k];
        }
        for (double& a : fwd.alpha) a /= denom;
        fwd.crowd.assign(e_dim, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t j = 0; j < e_dim; ++j) fwd.crowd[j] += fwd.alpha[k] * fwd.pooled[k][j];
        }
    }

    std::vector<double> head_in;
    head_in.reserve(fwd.self.size() + fwd.crowd.size());
    head_in.insert(head_in.end(), fwd.self.begin(), fwd.self.end());
    head_in.insert(head_in.end(), fwd.crowd.begin(), fwd.crowd.end());
    std::vector<double> out;
    mlp_forward(params.value_head, head_in, out, want_cache ? &fwd.head_cache : nullptr);
    fwd.value = out[0];
}

void backward_state(const EgoJointState& ego, const ValueNetParams& params, StateForward& fwd,
                    double dvalue, ValueNetParams& grads) {
    const std::size_t n = ego.pedestrians.size();
    const std::size_t e_dim = params.config.embedding_dim();

    std::vector<double> ghead =
        mlp_backward(params.value_head, fwd.head_cache, {dvalue}, grads.value_head);
    std::vector<double> gcrowd(ghead.begin() + static_cast<long>(fwd.self.size()), ghead.end());

    if (n == 0) {
        for (std::size_t j = 0; j < e_dim; ++j) grads.empty_crowd[j] += gcrowd[j];
        return;
    }

    // crowd = sum_k alpha_k * pooled_k ; alpha = softmax(scores)
    std::vector<double> galpha(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < e_dim; ++j) galpha[k] += gcrowd[j] * fwd.pooled[k][j];
    }
    double dot = 0.0;
    for (std::size_t k = 0; k < n; ++k) dot += galpha[k] * fwd.alpha[k];
    for (std::size_t k = 0; k < n; ++k) {
        const double gscore = fwd.alpha[k] * (galpha[k] - dot);
        std::vector<double> ge_att = mlp_backward(params.attention, fwd.att_score_cache[k],
                                                  {gscore}, grads.attention);
        mlp_backward(params.embed_attention, fwd.att_embed_cache[k], std::move(ge_att),
                     grads.embed_attention);

        std::vector<double> gpool(e_dim);
        for (std::size_t j = 0; j < e_dim; ++j) gpool[j] = fwd.alpha[k] * gcrowd[j];
        mlp_backward(params.embed_pooled, fwd.pool_embed_cache[k], std::move(gpool),
                     grads.embed_pooled);
    }
}

void collect_flat(Mlp& mlp, std::vector<double*>& out) {
    for (LinearLayer& layer : mlp.layers) {
        for (double& v : layer.w.a) out.push_back(&v);
        for (double& v : layer.b) out.push_back(&v);
    }
}

}  // namespace

std::vector<double> self_feature(const EgoJointState& ego) {
    return {ego.goal_dist, ego.v_pref, ego.heading, ego.radius, ego.velocity.x, ego.velocity.y};
}

std::vector<double> pair_feature(const EgoJointState& ego, const EgoPedestrian& ped) {
    // Vehicle context followed by the pedestrian block; matches kInputDim.
    return {ego.goal_dist,  ego.v_pref,     ego.heading,    ego.radius,    ego.velocity.x,
            ego.velocity.y, ped.position.x, ped.position.y, ped.velocity.x, ped.velocity.y,
            ped.radius,     ped.dist,       ego.radius + ped.radius};
}

ValueNetParams ValueNetParams::zeros(const ValueNetConfig& config) {
    if (config.attention.empty() || config.attention.back() != 1) {
        throw std::invalid_argument("ValueNetConfig: attention must end with a scalar layer");
    }
    if (config.value_head.empty() || config.value_head.back() != 1) {
        throw std::invalid_argument("ValueNetConfig: value_head must end with a scalar layer");
    }
    ValueNetParams p;
    p.config = config;
    p.embed_attention = make_mlp(kInputDim, config.embedding, true);
    p.embed_pooled = make_mlp(kInputDim, config.embedding, true);
    p.attention = make_mlp(config.embedding_dim(), config.attention, false);
    p.value_head = make_mlp(kSelfFeatureDim + config.embedding_dim(), config.value_head, false);
    p.empty_crowd.assign(config.embedding_dim(), 0.0);
    return p;
}

ValueNetParams ValueNetParams::init(const ValueNetConfig& config, std::uint64_t seed) {
    ValueNetParams p = zeros(config);
    Rng rng(seed);
    init_mlp(p.embed_attention, rng);
    init_mlp(p.embed_pooled, rng);
    init_mlp(p.attention, rng);
    init_mlp(p.value_head, rng);
    return p;
}

std::vector<double*> ValueNetParams::flat() {
    std::vector<double*> out;
    collect_flat(embed_attention, out);
    collect_flat(embed_pooled, out);
    collect_flat(attention, out);
    collect_flat(value_head, out);
    for (double& v : empty_crowd) out.push_back(&v);
    return out;
}

std::vector<const double*> ValueNetParams::flat() const {
    auto mutable_flat = const_cast<ValueNetParams*>(this)->flat();
    return {mutable_flat.begin(), mutable_flat.end()};
}

std::size_t ValueNetParams::parameter_count() const { return flat().size(); }

std::vector<double> attention_weights(const EgoJointState& ego, const ValueNetParams& params) {
    if (ego.pedestrians.empty()) {
        throw std::invalid_argument("attention_weights: need at least one pedestrian");
    }
    StateForward fwd;
    forward_state(ego, params, false, fwd);
    std::vector<double> weights(ego.pedestrians.size());
    for (std::size_t k = 0; k < fwd.order.size(); ++k) weights[fwd.order[k]] = fwd.alpha[k];
    return weights;
}

double value_forward(const EgoJointState& ego, const ValueNetParams& params) {
    StateForward fwd;
    forward_state(ego, params, false, fwd);
    return fwd.value;
}

double gradient_accumulate(const ValueNetParams& params, const TrainingSample* samples,
                           std::size_t count, ValueNetParams& accum) {
    double sq_err = 0.0;
    StateForward fwd;
    for (std::size_t i = 0; i < count; ++i) {
        forward_state(samples[i].state, params, true, fwd);
        const double err = fwd.value - samples[i].target;
        sq_err += err * err;
        backward_state(samples[i].state, params, fwd, 2.0 * err, accum);
    }
    return sq_err;
}

ValueNetGrads gradient(const ValueNetParams& params, const std::vector<TrainingSample>& batch) {
    if (batch.empty()) throw std::invalid_argument("gradient: batch must be nonempty");
    ValueNetGrads out;
    out.shape = ValueNetParams::zeros(params.config);
    out.loss = gradient_accumulate(params, batch.data(), batch.size(), out.shape);
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv_n;
    for (double* g : out.shape.flat()) *g *= inv_n;
    return out;
}

double analytic_value(const EgoJointState& ego) {
    double value = std::exp(-0.25 * ego.goal_dist);
    for (const EgoPedestrian& ped : ego.pedestrians) {
        const double clearance = std::max(0.0, ped.dist - (ego.radius + ped.radius));
        value -= 0.25 * std::exp(-3.0 * clearance);
    }
    return value;
}

namespace {

using nlohmann::json;

void mlp_to_json(const Mlp& mlp, const std::string& name, json& layers) {
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        const LinearLayer& layer = mlp.layers[l];
        json jl;
        jl["name"] = name + "." + std::to_string(l);
        jl["rows"] = layer.w.rows;
        jl["cols"] = layer.w.cols;
        jl["w"] = layer.w.a;
        jl["b"] = layer.b;
        layers.push_back(std::move(jl));
    }
}

void mlp_from_json(Mlp& mlp, const std::string& name, const json& layers, std::size_t& cursor) {
    for (std::size_t l = 0; l < mlp.layers.size(); ++l, ++cursor) {
        if (cursor >= layers.size()) throw std::runtime_error("params file: missing layers");
        const json& jl = layers[cursor];
        if (jl.value("name", "") != name + "." + std::to_string(l)) {
            throw std::runtime_error("params file: unexpected layer order");
        }
        LinearLayer& layer = mlp.layers[l];
        if (jl.value("rows", std::size_t{0}) != layer.w.rows ||
            jl.value("cols", std::size_t{0}) != layer.w.cols) {
            throw std::runtime_error("params file: layer shape mismatch with config");
        }
        layer.w.a = jl.at("w").get<std::vector<double>>();
        layer.b = jl.at("b").get<std::vector<double>>();
        if (layer.w.a.size() != layer.w.rows * layer.w.cols || layer.b.size() != layer.w.rows) {
            throw std::runtime_error("params file: layer value count mismatch");
        }
    }
}

}  // namespace

std::string serialize_params(const ValueNetParams& params) {
    json j;
    j["schema_version"] = 1;
    j["kind"] = "sarl_value_net";
    j["config"]["embedding"] = params.config.embedding;
    j["config"]["attention"] = params.config.attention;
    j["config"]["value_head"] = params.config.value_head;
    json layers = json::array();
    mlp_to_json(params.embed_attention, "embed_attention", layers);
    mlp_to_json(params.embed_pooled, "embed_pooled", layers);
    mlp_to_json(params.attention, "attention", layers);
    mlp_to_json(params.value_head, "value_head", layers);
    j["layers"] = std::move(layers);
    j["empty_crowd"] = params.empty_crowd;
    return j.dump();
}

ValueNetParams deserialize_params(const std::string& text) {
    const json j = json::parse(text);
    if (j.value("schema_version", -1) != 1 || j.value("kind", "") != "sarl_value_net") {
        throw std::runtime_error("params file: unknown schema");
    }
    ValueNetConfig config;
    config.embedding = j.at("config").at("embedding").get<std::vector<std::size_t>>();
    config.attention = j.at("config").at("attention").get<std::vector<std::size_t>>();
    config.value_head = j.at("config").at("value_head").get<std::vector<std::size_t>>();
    ValueNetParams params = ValueNetParams::zeros(config);
    const json& layers = j.at("layers");
    std::size_t cursor = 0;
    mlp_from_json(params.embed_attention, "embed_attention", layers, cursor);
    mlp_from_json(params.embed_pooled, "embed_pooled", layers, cursor);
    mlp_from_json(params.attention, "attention", layers, cursor);
    mlp_from_json(params.value_head, "value_head", layers, cursor);
    params.empty_crowd = j.at("empty_crowd").get<std::vector<double>>();
    if (params.empty_crowd.size() != config.embedding_dim()) {
        throw std::runtime_error("params file: empty_crowd size mismatch");
    }
    return params;
}

void save_params(const ValueNetParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write params file: " + path);
    out << serialize_params(params);
}

ValueNetParams load_params(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read params file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return deserialize_params(ss.str());
}

}  // namespace crowdnav
