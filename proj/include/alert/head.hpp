#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alert/alert_state.hpp"

namespace alert {

struct HeadConfig {
    uint32_t layers = 2;
    uint32_t heads = 4;
    uint32_t token_width = 128; // c, must be divisible by heads
    uint32_t mlp_ratio = 4;     // feed-forward expansion
    uint32_t num_classes = 11;
    bool use_class_token = true; // mean pooling over tokens otherwise
    bool final_norm = true;      // layer norm before the classifier

    void validate() const;
};

struct LayerNormParams {
    std::vector<float> weight; // gamma
    std::vector<float> bias;   // beta
};

struct LinearParams {
    uint32_t in = 0;
    uint32_t out = 0;
    std::vector<float> weight; // out x in, row-major
    std::vector<float> bias;   // out
};

struct EncoderLayerWeights {
    LayerNormParams ln1;
    LinearParams qkv; // 3c x c, rows ordered q, k, v
    LinearParams attn_out;
    LayerNormParams ln2;
    LinearParams ff1;
    LinearParams ff2;
};

struct HeadWeights {
    std::vector<EncoderLayerWeights> layers;
    std::vector<float> cls_token; // c, present iff use_class_token
    LayerNormParams final_norm;
    LinearParams classifier; // num_classes x c
};

void validate_head(const HeadConfig& cfg, const HeadWeights& weights);

/// Numerically stabilized softmax (subtracts the max, so arbitrarily large
/// logits never overflow).
std::vector<float> softmax(std::span<const float> logits);

/// Pre-norm encoder stack over a variable-length token sequence: normalized
/// multi-head self-attention with residual add, then a normalized GELU
/// feed-forward with residual add. Sequence length is preserved. With
/// all-zero attention and feed-forward weights this is the identity map.
std::vector<std::vector<float>> encode(const HeadConfig& cfg, const HeadWeights& weights,
                                       const std::vector<std::vector<float>>& tokens);

struct Prediction {
    std::vector<float> probs; // simplex over num_classes
    uint32_t argmax = 0;
    uint64_t step = 0;    // snapshot step the prediction refers to
    bool degenerate = false; // empty snapshot: uniform fallback

    bool operator==(const Prediction&) const = default;
};

/// Class token (or mean pooled) representation -> linear -> softmax. An
/// empty snapshot yields uniform probabilities with the degenerate flag set
/// so accuracy accounting can include or exclude it explicitly.
Prediction classify(const HeadConfig& cfg, const HeadWeights& weights, const Snapshot& snap);

} // namespace alert
