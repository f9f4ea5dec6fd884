#include "alert/head.hpp"

#include <algorithm>
#include <cmath>

namespace alert {

namespace {

constexpr float kLnEps = 1e-5f;

void check_linear(const LinearParams& lin, uint32_t in, uint32_t out, const std::string& name) {
    if (lin.in != in || lin.out != out || lin.weight.size() != size_t(in) * out ||
        lin.bias.size() != out)
        throw ConfigError(name + " has shape " + std::to_string(lin.in) + "->" +
                          std::to_string(lin.out) + ", expected " + std::to_string(in) + "->" +
                          std::to_string(out));
}

void check_norm(const LayerNormParams& ln, uint32_t width, const std::string& name) {
    if (ln.weight.size() != width || ln.bias.size() != width)
        throw ConfigError(name + " layer norm width mismatch");
}

// y = W x + b
void linear(const LinearParams& lin, std::span<const float> x, std::span<float> y) {
    for (uint32_t o = 0; o < lin.out; ++o) {
        const float* w = lin.weight.data() + size_t(o) * lin.in;
        float acc = lin.bias[o];
        for (uint32_t i = 0; i < lin.in; ++i)
            acc += w[i] * x[i];
        y[o] = acc;
    }
}

void layer_norm(const LayerNormParams& ln, std::span<const float> x, std::span<float> y) {
    const size_t n = x.size();
    float mean = 0.0f;
    for (float v : x)
        mean += v;
    mean /= float(n);
    float var = 0.0f;
    for (float v : x)
        var += (v - mean) * (v - mean);
    var /= float(n);
    const float inv = 1.0f / std::sqrt(var + kLnEps);
    for (size_t i = 0; i < n; ++i)
        y[i] = (x[i] - mean) * inv * ln.weight[i] + ln.bias[i];
}

float gelu(float x) {
    return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f));
}

// softmax in place over a row
void softmax_inplace(std::span<float> row) {
    float hi = row[0];
    for (float v : row)
        hi = std::max(hi, v);
    float sum = 0.0f;
    for (float& v : row) {
        v = std::exp(v - hi);
        sum += v;
    }
    for (float& v : row)
        v /= sum;
}

} // namespace

void HeadConfig::validate() const {
    if (layers == 0)
        throw ConfigError("encoder needs at least one layer");
    if (heads == 0 || token_width % heads != 0)
        throw ConfigError("token width must be divisible by the head count");
    if (mlp_ratio == 0)
        throw ConfigError("mlp_ratio must be >= 1");
    if (num_classes < 2)
        throw ConfigError("classification needs at least two classes");
}

void validate_head(const HeadConfig& cfg, const HeadWeights& weights) {
    cfg.validate();
    const uint32_t c = cfg.token_width;
    if (weights.layers.size() != cfg.layers)
        throw ConfigError("weight archive has " + std::to_string(weights.layers.size()) +
                          " encoder layers, config expects " + std::to_string(cfg.layers));
    for (size_t i = 0; i < weights.layers.size(); ++i) {
        const auto& l = weights.layers[i];
        const std::string tag = "encoder layer " + std::to_string(i);
        check_norm(l.ln1, c, tag);
        check_linear(l.qkv, c, 3 * c, tag + " qkv");
        check_linear(l.attn_out, c, c, tag + " attn_out");
        check_norm(l.ln2, c, tag);
        check_linear(l.ff1, c, cfg.mlp_ratio * c, tag + " ff1");
        check_linear(l.ff2, cfg.mlp_ratio * c, c, tag + " ff2");
    }
    if (cfg.use_class_token && weights.cls_token.size() != c)
        throw ConfigError("class token width mismatch");
    if (cfg.final_norm)
        check_norm(weights.final_norm, c, "final");
    check_linear(weights.classifier, c, cfg.num_classes, "classifier");
}

std::vector<float> softmax(std::span<const float> logits) {
    if (logits.empty())
        throw ValidationError("softmax needs at least one logit");
    std::vector<float> out(logits.begin(), logits.end());
    softmax_inplace(out);
    return out;
}

std::vector<std::vector<float>> encode(const HeadConfig& cfg, const HeadWeights& weights,
                                       const std::vector<std::vector<float>>& tokens) {
    validate_head(cfg, weights);
    if (tokens.empty())
        throw ValidationError("encoder input must hold at least one token");
    const uint32_t c = cfg.token_width;
    const size_t len = tokens.size();
    for (const auto& t : tokens)
        if (t.size() != c)
            throw ValidationError("encoder token width mismatch");

    const uint32_t head_dim = c / cfg.heads;
    const float scale = 1.0f / std::sqrt(float(head_dim));

    // Flat row-major activations.
    std::vector<float> x(len * c);
    for (size_t i = 0; i < len; ++i)
        std::copy(tokens[i].begin(), tokens[i].end(), x.begin() + i * c);

    std::vector<float> normed(len * c);
    std::vector<float> qkv(len * 3 * c);
    std::vector<float> attn(len * c);
    std::vector<float> scores(len);
    std::vector<float> ff_hidden(size_t(cfg.mlp_ratio) * c);
    std::vector<float> ff_out(c);

    for (const EncoderLayerWeights& layer : weights.layers) {
        // Attention block.
        for (size_t i = 0; i < len; ++i)
            layer_norm(layer.ln1, {x.data() + i * c, c}, {normed.data() + i * c, c});
        for (size_t i = 0; i < len; ++i)
            linear(layer.qkv, {normed.data() + i * c, c}, {qkv.data() + i * 3 * c, 3 * c});

        std::fill(attn.begin(), attn.end(), 0.0f);
        for (uint32_t h = 0; h < cfg.heads; ++h) {
            const size_t off = size_t(h) * head_dim;
            for (size_t i = 0; i < len; ++i) {
                const float* qi = qkv.data() + i * 3 * c + off;
                for (size_t j = 0; j < len; ++j) {
                    const float* kj = qkv.data() + j * 3 * c + c + off;
                    float dot = 0.0f;
                    for (uint32_t d = 0; d < head_dim; ++d)
                        dot += qi[d] * kj[d];
                    scores[j] = dot * scale;
                }
                softmax_inplace({scores.data(), len});
                float* out = attn.data() + i * c + off;
                for (size_t j = 0; j < len; ++j) {
                    const float* vj = qkv.data() + j * 3 * c + 2 * c + off;
                    const float a = scores[j];
                    for (uint32_t d = 0; d < head_dim; ++d)
                        out[d] += a * vj[d];
                }
            }
        }
        for (size_t i = 0; i < len; ++i) {
            linear(layer.attn_out, {attn.data() + i * c, c}, {ff_out.data(), c});
            for (uint32_t d = 0; d < c; ++d)
                x[i * c + d] += ff_out[d];
        }

        // Feed-forward block.
        for (size_t i = 0; i < len; ++i) {
            layer_norm(layer.ln2, {x.data() + i * c, c}, {normed.data(), c});
            linear(layer.ff1, {normed.data(), c}, {ff_hidden.data(), layer.ff1.out});
            for (float& v : ff_hidden)
                v = gelu(v);
            linear(layer.ff2, {ff_hidden.data(), layer.ff2.in}, {ff_out.data(), c});
            for (uint32_t d = 0; d < c; ++d)
                x[i * c + d] += ff_out[d];
        }
    }

    std::vector<std::vector<float>> out(len);
    for (size_t i = 0; i < len; ++i)
        out[i].assign(x.begin() + i * c, x.begin() + (i + 1) * c);
    return out;
}

Prediction classify(const HeadConfig& cfg, const HeadWeights& weights, const Snapshot& snap) {
    validate_head(cfg, weights);

    Prediction pred;
    pred.step = snap.step;
    if (snap.tokens.empty()) {
        pred.probs.assign(cfg.num_classes, 1.0f / float(cfg.num_classes));
        pred.argmax = 0;
        pred.degenerate = true;
        return pred;
    }

    std::vector<std::vector<float>> seq;
    seq.reserve(snap.tokens.size() + 1);
    if (cfg.use_class_token)
        seq.push_back(weights.cls_token);
    for (const PatchToken& t : snap.tokens)
        seq.push_back(t.values);

    const auto encoded = encode(cfg, weights, seq);

    std::vector<float> pooled(cfg.token_width, 0.0f);
    if (cfg.use_class_token) {
        pooled = encoded.front();
    } else {
        for (const auto& t : encoded)
            for (uint32_t d = 0; d < cfg.token_width; ++d)
                pooled[d] += t[d];
        for (float& v : pooled)
            v /= float(encoded.size());
    }
    if (cfg.final_norm) {
        std::vector<float> normed(cfg.token_width);
        layer_norm(weights.final_norm, pooled, normed);
        pooled = std::move(normed);
    }

    std::vector<float> logits(cfg.num_classes);
    linear(weights.classifier, pooled, logits);
    pred.probs = softmax(logits);
    pred.argmax = uint32_t(std::max_element(pred.probs.begin(), pred.probs.end()) -
                           pred.probs.begin());
    return pred;
}

} // namespace alert
