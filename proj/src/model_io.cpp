#include "alert/model_io.hpp"

#include <cmath>
#include <random>

namespace alert {

namespace {

std::string fg_name(size_t layer, const char* part) {
    return "fg.layer" + std::to_string(layer) + "." + part;
}

std::vector<float> expect_tensor(const WeightArchive& archive, const std::string& name,
                                 std::vector<uint32_t> dims) {
    const Tensor& t = require_tensor(archive, name);
    if (t.dims != dims) {
        std::string want, got;
        for (uint32_t d : dims)
            want += std::to_string(d) + " ";
        for (uint32_t d : t.dims)
            got += std::to_string(d) + " ";
        throw ConfigError("tensor \"" + name + "\" has dims [ " + got + "], expected [ " + want +
                          "]");
    }
    return t.data;
}

LinearParams load_linear(const WeightArchive& archive, const std::string& base, uint32_t in,
                         uint32_t out) {
    LinearParams lin;
    lin.in = in;
    lin.out = out;
    lin.weight = expect_tensor(archive, base + ".weight", {out, in});
    lin.bias = expect_tensor(archive, base + ".bias", {out});
    return lin;
}

LayerNormParams load_norm(const WeightArchive& archive, const std::string& base, uint32_t width) {
    LayerNormParams ln;
    ln.weight = expect_tensor(archive, base + ".weight", {width});
    ln.bias = expect_tensor(archive, base + ".bias", {width});
    return ln;
}

void store_linear(WeightArchive& archive, const std::string& base, const LinearParams& lin) {
    archive[base + ".weight"] = Tensor{{lin.out, lin.in}, lin.weight};
    archive[base + ".bias"] = Tensor{{lin.out}, lin.bias};
}

void store_norm(WeightArchive& archive, const std::string& base, const LayerNormParams& ln) {
    archive[base + ".weight"] = Tensor{{uint32_t(ln.weight.size())}, ln.weight};
    archive[base + ".bias"] = Tensor{{uint32_t(ln.bias.size())}, ln.bias};
}

double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

std::vector<float> random_matrix(std::mt19937_64& rng, size_t count, double span) {
    std::vector<float> v(count);
    for (float& x : v)
        x = float((uniform01(rng) * 2.0 - 1.0) * span);
    return v;
}

LinearParams random_linear(std::mt19937_64& rng, uint32_t in, uint32_t out) {
    LinearParams lin;
    lin.in = in;
    lin.out = out;
    const double span = 1.0 / std::sqrt(double(in));
    lin.weight = random_matrix(rng, size_t(in) * out, span);
    lin.bias = random_matrix(rng, out, span);
    return lin;
}

LayerNormParams identity_norm(uint32_t width) {
    return LayerNormParams{std::vector<float>(width, 1.0f), std::vector<float>(width, 0.0f)};
}

} // namespace

MlpWeights load_mlp_weights(const WeightArchive& archive, const MlpConfig& cfg) {
    cfg.validate();
    const auto dims = cfg.layer_dims();
    MlpWeights weights;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        MlpWeights::Layer layer;
        layer.in = dims[i];
        layer.out = dims[i + 1];
        layer.weight = expect_tensor(archive, fg_name(i, "weight"), {layer.out, layer.in});
        layer.bias = expect_tensor(archive, fg_name(i, "bias"), {layer.out});
        layer.scale = expect_tensor(archive, fg_name(i, "scale"), {layer.out});
        layer.shift = expect_tensor(archive, fg_name(i, "shift"), {layer.out});
        weights.layers.push_back(std::move(layer));
    }
    validate_weights(cfg, weights);
    return weights;
}

PositionalTable load_positional(const WeightArchive& archive, const GridConfig& grid,
                                uint32_t channels) {
    PositionalTable table;
    table.rows = grid.patch_count();
    table.cols = channels;
    table.data = expect_tensor(archive, "pos.table", {table.rows, table.cols});
    return table;
}

HeadWeights load_head_weights(const WeightArchive& archive, const HeadConfig& cfg) {
    cfg.validate();
    const uint32_t c = cfg.token_width;
    HeadWeights weights;
    for (uint32_t i = 0; i < cfg.layers; ++i) {
        const std::string base = "head.layer" + std::to_string(i);
        EncoderLayerWeights layer;
        layer.ln1 = load_norm(archive, base + ".ln1", c);
        layer.qkv = load_linear(archive, base + ".qkv", c, 3 * c);
        layer.attn_out = load_linear(archive, base + ".attn_out", c, c);
        layer.ln2 = load_norm(archive, base + ".ln2", c);
        layer.ff1 = load_linear(archive, base + ".ff1", c, cfg.mlp_ratio * c);
        layer.ff2 = load_linear(archive, base + ".ff2", cfg.mlp_ratio * c, c);
        weights.layers.push_back(std::move(layer));
    }
    if (cfg.use_class_token)
        weights.cls_token = expect_tensor(archive, "head.cls_token", {c});
    if (cfg.final_norm)
        weights.final_norm = load_norm(archive, "head.final_norm", c);
    weights.classifier = load_linear(archive, "head.classifier", c, cfg.num_classes);
    validate_head(cfg, weights);
    return weights;
}

void store_mlp_weights(WeightArchive& archive, const MlpWeights& weights) {
    for (size_t i = 0; i < weights.layers.size(); ++i) {
        const auto& layer = weights.layers[i];
        archive[fg_name(i, "weight")] = Tensor{{layer.out, layer.in}, layer.weight};
        archive[fg_name(i, "bias")] = Tensor{{layer.out}, layer.bias};
        archive[fg_name(i, "scale")] = Tensor{{layer.out}, layer.scale};
        archive[fg_name(i, "shift")] = Tensor{{layer.out}, layer.shift};
    }
}

void store_positional(WeightArchive& archive, const PositionalTable& table) {
    archive["pos.table"] = Tensor{{table.rows, table.cols}, table.data};
}

void store_head_weights(WeightArchive& archive, const HeadConfig& cfg,
                        const HeadWeights& weights) {
    for (size_t i = 0; i < weights.layers.size(); ++i) {
        const auto& layer = weights.layers[i];
        const std::string base = "head.layer" + std::to_string(i);
        store_norm(archive, base + ".ln1", layer.ln1);
        store_linear(archive, base + ".qkv", layer.qkv);
        store_linear(archive, base + ".attn_out", layer.attn_out);
        store_norm(archive, base + ".ln2", layer.ln2);
        store_linear(archive, base + ".ff1", layer.ff1);
        store_linear(archive, base + ".ff2", layer.ff2);
    }
    if (cfg.use_class_token)
        archive["head.cls_token"] = Tensor{{cfg.token_width}, weights.cls_token};
    if (cfg.final_norm)
        store_norm(archive, "head.final_norm", weights.final_norm);
    store_linear(archive, "head.classifier", weights.classifier);
}

MlpWeights make_random_mlp_weights(const MlpConfig& cfg, uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const auto dims = cfg.layer_dims();
    MlpWeights weights;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        MlpWeights::Layer layer;
        layer.in = dims[i];
        layer.out = dims[i + 1];
        const double span = 1.0 / std::sqrt(double(layer.in));
        layer.weight = random_matrix(rng, size_t(layer.in) * layer.out, span);
        layer.bias = random_matrix(rng, layer.out, span);
        // Folded normalization starts as the identity affine.
        layer.scale.assign(layer.out, 1.0f);
        layer.shift.assign(layer.out, 0.0f);
        weights.layers.push_back(std::move(layer));
    }
    return weights;
}

PositionalTable make_random_positional(const GridConfig& grid, uint32_t channels, uint64_t seed) {
    std::mt19937_64 rng(seed);
    PositionalTable table;
    table.rows = grid.patch_count();
    table.cols = channels;
    table.data = random_matrix(rng, size_t(table.rows) * channels, 0.1);
    return table;
}

HeadWeights make_random_head_weights(const HeadConfig& cfg, uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    const uint32_t c = cfg.token_width;
    HeadWeights weights;
    for (uint32_t i = 0; i < cfg.layers; ++i) {
        EncoderLayerWeights layer;
        layer.ln1 = identity_norm(c);
        layer.qkv = random_linear(rng, c, 3 * c);
        layer.attn_out = random_linear(rng, c, c);
        layer.ln2 = identity_norm(c);
        layer.ff1 = random_linear(rng, c, cfg.mlp_ratio * c);
        layer.ff2 = random_linear(rng, cfg.mlp_ratio * c, c);
        weights.layers.push_back(std::move(layer));
    }
    if (cfg.use_class_token)
        weights.cls_token = random_matrix(rng, c, 0.1);
    if (cfg.final_norm)
        weights.final_norm = identity_norm(c);
    weights.classifier = random_linear(rng, c, cfg.num_classes);
    return weights;
}

WeightArchive dump_state(const TokenState& state) {
    WeightArchive archive;
    const uint32_t p = state.patch_count;
    const uint32_t c = state.channels;
    archive["state.values"] = Tensor{{p, c}, state.values};
    Tensor wins{{p, c}, {}};
    wins.data.reserve(size_t(p) * c);
    for (uint64_t w : state.last_win)
        wins.data.push_back(float(w));
    archive["state.last_win"] = std::move(wins);
    Tensor counts{{p}, {}};
    counts.data.reserve(p);
    for (uint32_t n : state.counts)
        counts.data.push_back(float(n));
    archive["state.counts"] = std::move(counts);
    return archive;
}

} // namespace alert
