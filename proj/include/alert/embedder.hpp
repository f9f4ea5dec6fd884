#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alert/grid.hpp"

namespace alert {

/// Periodic wrap of the raw timestamp onto a circle of radius alpha, so an
/// unbounded time axis enters the feature generator as two bounded values.
struct TimeEncodingConfig {
    double alpha = 1.0;
    double f_hz = 4.0; // default tuned so one period spans about two samples
    double phi = 0.0;
    bool enabled = true;

    void validate() const;
};

struct TimeEncoding {
    double tx = 0.0;
    double ty = 0.0;
};

/// tx = alpha*cos(2*pi*f*t + phi), ty = alpha*sin(...), t in seconds.
/// Computed in double so the circle identity tx^2 + ty^2 = alpha^2 holds to
/// well below 1e-9 even for very large timestamps; the feature generator
/// narrows to f32 at its input boundary.
TimeEncoding encode_time(const TimeEncodingConfig& cfg, uint64_t t_us);

/// Feature-generator shape. Layer widths chain
/// input_dim -> base_channels -> expansion*base -> ... -> out_channels,
/// with depth counting every layer including the output projection.
struct MlpConfig {
    uint32_t depth = 2;
    uint32_t base_channels = 12;
    double expansion = 2.0;
    uint32_t out_channels = 128; // token width c
    uint32_t input_dim = 5;      // 5 = (tx,ty,x,y,p); 4 = (t,x,y,p)
    bool rectify_last = false;   // hidden layers always rectify

    std::vector<uint32_t> layer_dims() const; // depth+1 entries
    void validate() const;
};

/// Inference weights with batch normalization folded into a per-channel
/// affine (scale, shift).
struct MlpWeights {
    struct Layer {
        uint32_t in = 0;
        uint32_t out = 0;
        std::vector<float> weight; // out x in, row-major
        std::vector<float> bias;   // out
        std::vector<float> scale;  // out
        std::vector<float> shift;  // out
    };
    std::vector<Layer> layers;
};

void validate_weights(const MlpConfig& cfg, const MlpWeights& weights);

/// Reusable intermediate buffers for the per-event forward pass.
struct FgScratch {
    std::vector<float> a;
    std::vector<float> b;
};

/// One event through the shared MLP: per layer affine -> folded-norm affine
/// -> rectifier (last layer per config). Deterministic accumulation order;
/// all arithmetic in f32.
void event_feature(const MlpConfig& cfg, const MlpWeights& weights, std::span<const float> input,
                   FgScratch& scratch, std::vector<float>& out);

std::vector<float> event_feature(const MlpConfig& cfg, const MlpWeights& weights,
                                 std::span<const float> input);

/// Channel-wise maximum over the per-event features of one patch.
std::vector<float> pool_patch(std::span<const std::vector<float>> features);

/// Token plus the patch it summarizes.
struct PatchToken {
    PatchId patch;
    std::vector<float> values;

    bool operator==(const PatchToken&) const = default;
};

/// One learnt row per patch coordinate.
struct PositionalTable {
    uint32_t rows = 0;
    uint32_t cols = 0;
    std::vector<float> data; // rows x cols, row-major

    std::span<const float> row(uint32_t r) const;
};

void add_positional(PatchToken& token, const PositionalTable& table, const GridConfig& cfg);

/// t' = t - t_first; the synchronous path re-anchors every sample at zero.
std::vector<Event> shift_time_origin(std::span<const Event> events);

uint32_t fg_input_dim(const TimeEncodingConfig& te);

/// Assembles the feature-generator input for one event. With time encoding:
/// (tx, ty, xn, yn, p). Without: (t - t_origin in seconds, xn, yn, p).
void build_fg_input(const NormalizedEvent& ev, const TimeEncodingConfig& te, uint64_t t_origin_us,
                    std::span<float> out);

/// The full synchronous events-to-tokens stack: grid partition, activation
/// filter, normalization, optional time encoding, shared MLP, channel-wise
/// max, positional embedding.
struct TokenEmbedder {
    GridConfig grid;
    TimeEncodingConfig te;
    MlpConfig mlp;
    MlpWeights fg;
    PositionalTable pos;

    void validate() const;

    /// One token per active patch, ordered row-major by patch id. Invariant
    /// under within-patch event permutations (max pooling is exact).
    std::vector<PatchToken> embed_sample(std::span<const Event> events) const;
};

} // namespace alert
