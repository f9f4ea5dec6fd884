#include "alert/embedder.hpp"

#include <algorithm>
#include <cmath>

namespace alert {

void TimeEncodingConfig::validate() const {
    if (enabled && (alpha <= 0.0 || f_hz <= 0.0))
        throw ConfigError("time encoding needs alpha > 0 and f_hz > 0");
}

TimeEncoding encode_time(const TimeEncodingConfig& cfg, uint64_t t_us) {
    const double t_s = double(t_us) * 1e-6;
    const double angle = 2.0 * M_PI * cfg.f_hz * t_s + cfg.phi;
    return TimeEncoding{cfg.alpha * std::cos(angle), cfg.alpha * std::sin(angle)};
}

std::vector<uint32_t> MlpConfig::layer_dims() const {
    std::vector<uint32_t> dims;
    dims.push_back(input_dim);
    // Hidden widths grow geometrically from base_channels; the final layer
    // always projects to the token width.
    uint32_t width = base_channels;
    for (uint32_t i = 0; i + 1 < depth; ++i) {
        dims.push_back(width);
        width = uint32_t(std::lround(double(width) * expansion));
    }
    dims.push_back(out_channels);
    return dims;
}

void MlpConfig::validate() const {
    if (depth == 0)
        throw ConfigError("mlp depth must be >= 1");
    if (base_channels == 0)
        throw ConfigError("mlp base_channels must be >= 1");
    if (expansion < 1.0)
        throw ConfigError("mlp expansion must be >= 1");
    if (out_channels == 0)
        throw ConfigError("mlp out_channels must be >= 1");
    if (input_dim != 4 && input_dim != 5)
        throw ConfigError("mlp input_dim must be 4 or 5");
}

void validate_weights(const MlpConfig& cfg, const MlpWeights& weights) {
    cfg.validate();
    const auto dims = cfg.layer_dims();
    if (weights.layers.size() != cfg.depth)
        throw ConfigError("weight archive has " + std::to_string(weights.layers.size()) +
                          " feature-generator layers, config expects " +
                          std::to_string(cfg.depth));
    for (size_t i = 0; i < weights.layers.size(); ++i) {
        const auto& layer = weights.layers[i];
        if (layer.in != dims[i] || layer.out != dims[i + 1])
            throw ConfigError("feature-generator layer " + std::to_string(i) + " is " +
                              std::to_string(layer.in) + "->" + std::to_string(layer.out) +
                              ", config expects " + std::to_string(dims[i]) + "->" +
                              std::to_string(dims[i + 1]));
        if (layer.weight.size() != size_t(layer.in) * layer.out ||
            layer.bias.size() != layer.out || layer.scale.size() != layer.out ||
            layer.shift.size() != layer.out)
            throw ConfigError("feature-generator layer " + std::to_string(i) +
                              " has inconsistent tensor sizes");
        auto finite = [](std::span<const float> v) {
            return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
        };
        if (!finite(layer.weight) || !finite(layer.bias) || !finite(layer.scale) ||
            !finite(layer.shift))
            throw NumericError("feature-generator layer " + std::to_string(i) +
                               " contains non-finite values");
    }
}

void event_feature(const MlpConfig& cfg, const MlpWeights& weights, std::span<const float> input,
                   FgScratch& scratch, std::vector<float>& out) {
    if (input.size() != cfg.input_dim)
        throw ConfigError("feature input has dim " + std::to_string(input.size()) +
                          ", expected " + std::to_string(cfg.input_dim));

    scratch.a.assign(input.begin(), input.end());
    std::vector<float>* cur = &scratch.a;
    std::vector<float>* next = &scratch.b;

    for (size_t li = 0; li < weights.layers.size(); ++li) {
        const auto& layer = weights.layers[li];
        const bool rectify = li + 1 < weights.layers.size() || cfg.rectify_last;
        next->assign(layer.out, 0.0f);
        for (uint32_t o = 0; o < layer.out; ++o) {
            const float* w = layer.weight.data() + size_t(o) * layer.in;
            float acc = layer.bias[o];
            for (uint32_t i = 0; i < layer.in; ++i)
                acc += w[i] * (*cur)[i];
            acc = acc * layer.scale[o] + layer.shift[o];
            if (rectify && acc < 0.0f)
                acc = 0.0f;
            (*next)[o] = acc;
        }
        std::swap(cur, next);
    }

    out.assign(cur->begin(), cur->end());
    for (float v : out)
        if (!std::isfinite(v))
            throw NumericError("non-finite feature value");
}

std::vector<float> event_feature(const MlpConfig& cfg, const MlpWeights& weights,
                                 std::span<const float> input) {
    FgScratch scratch;
    std::vector<float> out;
    event_feature(cfg, weights, input, scratch, out);
    return out;
}

std::vector<float> pool_patch(std::span<const std::vector<float>> features) {
    if (features.empty())
        throw ValidationError("pool_patch needs at least one feature vector");
    std::vector<float> out = features.front();
    for (size_t i = 1; i < features.size(); ++i) {
        const auto& f = features[i];
        if (f.size() != out.size())
            throw ValidationError("feature width mismatch in pool_patch");
        for (size_t j = 0; j < out.size(); ++j)
            out[j] = std::max(out[j], f[j]);
    }
    return out;
}

std::span<const float> PositionalTable::row(uint32_t r) const {
    if (r >= rows)
        throw ConfigError("positional table has no row " + std::to_string(r));
    return std::span<const float>(data.data() + size_t(r) * cols, cols);
}

void add_positional(PatchToken& token, const PositionalTable& table, const GridConfig& cfg) {
    const uint32_t flat = flat_index(cfg, token.patch);
    const auto row = table.row(flat);
    if (row.size() != token.values.size())
        throw ConfigError("positional row width " + std::to_string(row.size()) +
                          " does not match token width " + std::to_string(token.values.size()));
    for (size_t j = 0; j < row.size(); ++j)
        token.values[j] += row[j];
}

std::vector<Event> shift_time_origin(std::span<const Event> events) {
    if (events.empty())
        throw ValidationError("cannot shift the time origin of an empty sample");
    const uint64_t t0 = events.front().t;
    std::vector<Event> shifted(events.begin(), events.end());
    for (Event& e : shifted)
        e.t -= t0;
    return shifted;
}

uint32_t fg_input_dim(const TimeEncodingConfig& te) {
    return te.enabled ? 5u : 4u;
}

void build_fg_input(const NormalizedEvent& ev, const TimeEncodingConfig& te, uint64_t t_origin_us,
                    std::span<float> out) {
    if (te.enabled) {
        const TimeEncoding enc = encode_time(te, ev.t);
        out[0] = float(enc.tx);
        out[1] = float(enc.ty);
        out[2] = ev.xn;
        out[3] = ev.yn;
        out[4] = ev.p;
    } else {
        out[0] = float(double(ev.t - t_origin_us) * 1e-6);
        out[1] = ev.xn;
        out[2] = ev.yn;
        out[3] = ev.p;
    }
}

void TokenEmbedder::validate() const {
    grid.validate();
    te.validate();
    mlp.validate();
    validate_weights(mlp, fg);
    if (mlp.input_dim != fg_input_dim(te))
        throw ConfigError("mlp input_dim " + std::to_string(mlp.input_dim) +
                          " does not match time-encoding mode (expected " +
                          std::to_string(fg_input_dim(te)) + ")");
    if (pos.rows != grid.patch_count() || pos.cols != mlp.out_channels)
        throw ConfigError("positional table is " + std::to_string(pos.rows) + "x" +
                          std::to_string(pos.cols) + ", expected " +
                          std::to_string(grid.patch_count()) + "x" +
                          std::to_string(mlp.out_channels));
}

std::vector<PatchToken> TokenEmbedder::embed_sample(std::span<const Event> events) const {
    Partition part = partition_sample(grid, events);
    const std::vector<uint32_t> active = filter_active(grid, part);

    // Without time encoding every sample is re-anchored at its first event.
    const uint64_t t_origin = (!te.enabled && !events.empty()) ? events.front().t : 0;

    FgScratch scratch;
    std::vector<float> input(mlp.input_dim);
    std::vector<float> feature;
    std::vector<PatchToken> tokens;
    tokens.reserve(active.size());

    for (uint32_t flat : active) {
        PatchToken token;
        token.patch = patch_from_flat(grid, flat);
        bool first = true;
        for (const NormalizedEvent& ev : part.cells[flat]) {
            build_fg_input(ev, te, t_origin, input);
            event_feature(mlp, fg, input, scratch, feature);
            if (first) {
                token.values = feature;
                first = false;
            } else {
                for (size_t j = 0; j < feature.size(); ++j)
                    token.values[j] = std::max(token.values[j], feature[j]);
            }
        }
        add_positional(token, pos, grid);
        tokens.push_back(std::move(token));
    }
    return tokens;
}

} // namespace alert
