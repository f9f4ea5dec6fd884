#include "alert/flops.hpp"

namespace alert {

namespace {

// Fixed per-element costs under the documented convention.
constexpr double kTimeEncodeFlops = 6.0; // angle (2) + cos + sin + two amplitude scales
constexpr double kTimeShiftFlops = 1.0;  // subtract the sample origin
constexpr double kSoftmaxPerElement = 4.0;
constexpr double kLayerNormPerElement = 5.0;
constexpr double kActivationPerElement = 1.0;

double linear_flops(double in, double out) {
    return 2.0 * in * out + out; // MACs + bias adds
}

} // namespace

FlopReport count_flops(const MlpConfig& mlp, const TimeEncodingConfig& te, const HeadConfig& head,
                       const SampleStats& stats) {
    mlp.validate();
    head.validate();
    FlopReport report;

    // Per-event embedder path.
    report.event_breakdown.push_back(
        {"time", te.enabled ? kTimeEncodeFlops : kTimeShiftFlops});
    const auto dims = mlp.layer_dims();
    double mlp_total = 0.0;
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        // affine + folded norm (2/elem) + rectifier (1/elem)
        const double layer = linear_flops(dims[i], dims[i + 1]) + 3.0 * dims[i + 1];
        report.event_breakdown.push_back(
            {"fg.layer" + std::to_string(i) + " " + std::to_string(dims[i]) + "->" +
                 std::to_string(dims[i + 1]),
             layer});
        mlp_total += layer;
    }
    report.event_breakdown.push_back({"pool", double(mlp.out_channels)});
    report.per_event = 0.0;
    for (const FlopLine& line : report.event_breakdown)
        report.per_event += line.flops;

    // Per-sample: embedder over the active events, positional adds, then the
    // encoder over one readout sequence.
    const double c = double(head.token_width);
    const double seq = double(stats.active_patches) + (head.use_class_token ? 1.0 : 0.0);
    report.sample_breakdown.push_back(
        {"embedder(active events)", report.per_event * double(stats.active_events)});
    report.sample_breakdown.push_back({"positional", c * double(stats.active_patches)});

    if (stats.active_patches > 0) {
        const double heads = double(head.heads);
        double per_layer = 0.0;
        per_layer += 2.0 * kLayerNormPerElement * c * seq;          // ln1 + ln2
        per_layer += linear_flops(c, 3.0 * c) * seq;                // qkv
        per_layer += 2.0 * c * seq * seq + heads * seq * seq;       // scores + scaling
        per_layer += kSoftmaxPerElement * heads * seq * seq;        // attention softmax
        per_layer += 2.0 * c * seq * seq;                           // attention-weighted values
        per_layer += linear_flops(c, c) * seq;                      // attention projection
        per_layer += linear_flops(c, double(head.mlp_ratio) * c) * seq; // ff1
        per_layer += kActivationPerElement * double(head.mlp_ratio) * c * seq; // gelu
        per_layer += linear_flops(double(head.mlp_ratio) * c, c) * seq; // ff2
        per_layer += 2.0 * c * seq;                                 // residual adds
        report.sample_breakdown.push_back(
            {"encoder x" + std::to_string(head.layers), per_layer * double(head.layers)});

        double tail = 0.0;
        if (!head.use_class_token)
            tail += c * (seq + 1.0); // mean pooling
        if (head.final_norm)
            tail += kLayerNormPerElement * c;
        tail += linear_flops(c, double(head.num_classes));
        tail += kSoftmaxPerElement * double(head.num_classes);
        report.sample_breakdown.push_back({"head tail", tail});
    }

    report.per_sample = 0.0;
    for (const FlopLine& line : report.sample_breakdown)
        report.per_sample += line.flops;
    return report;
}

} // namespace alert
