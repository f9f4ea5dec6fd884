#include "alert/grid.hpp"

#include <cmath>

namespace alert {

void GridConfig::validate() const {
    if (sensor_width == 0 || sensor_height == 0)
        throw ConfigError("sensor dimensions must be nonzero");
    if (patch_w == 0 || patch_h == 0)
        throw ConfigError("patch dimensions must be >= 1");
}

uint32_t threshold_from_rate(const GridConfig& cfg, double rate_per_patch_pixel) {
    if (rate_per_patch_pixel < 0)
        throw ConfigError("activation rate must be >= 0");
    const double pixels = double(cfg.patch_w) * double(cfg.patch_h);
    return uint32_t(std::llround(rate_per_patch_pixel * pixels));
}

PatchId assign_patch(const GridConfig& cfg, const Event& e) {
    if (e.x >= cfg.sensor_width || e.y >= cfg.sensor_height)
        throw ValidationError("event (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                              ") outside sensor " + std::to_string(cfg.sensor_width) + "x" +
                              std::to_string(cfg.sensor_height));
    return PatchId{uint16_t(e.x / cfg.patch_w), uint16_t(e.y / cfg.patch_h)};
}

namespace {

// Maps a local pixel offset to [-1, 1]; a 1-pixel axis has no extent and
// collapses to 0.
float normalize_axis(uint16_t coord, uint32_t origin, uint16_t extent) {
    if (extent <= 1)
        return 0.0f;
    return 2.0f * float(coord - origin) / float(extent - 1) - 1.0f;
}

} // namespace

NormalizedEvent normalize(const GridConfig& cfg, const Event& e) {
    const PatchId id = assign_patch(cfg, e);
    NormalizedEvent n;
    n.t = e.t;
    n.xn = normalize_axis(e.x, uint32_t(id.gx) * cfg.patch_w, cfg.patch_w);
    n.yn = normalize_axis(e.y, uint32_t(id.gy) * cfg.patch_h, cfg.patch_h);
    n.p = float(e.p);
    n.patch = id;
    return n;
}

Partition partition_sample(const GridConfig& cfg, std::span<const Event> events) {
    cfg.validate();
    Partition part;
    part.cells.resize(cfg.patch_count());
    part.counts.assign(cfg.patch_count(), 0);
    for (const Event& e : events) {
        const NormalizedEvent n = normalize(cfg, e);
        const uint32_t flat = flat_index(cfg, n.patch);
        part.cells[flat].push_back(n);
        ++part.counts[flat];
        ++part.total;
    }
    return part;
}

std::vector<uint32_t> filter_active(const GridConfig& cfg, Partition& partition) {
    std::vector<uint32_t> active;
    for (uint32_t flat = 0; flat < partition.cells.size(); ++flat) {
        const bool present = !partition.cells[flat].empty();
        if (present && partition.counts[flat] >= cfg.activation_threshold) {
            active.push_back(flat);
        } else if (present) {
            // Non-active events are dropped from the sample entirely.
            partition.cells[flat].clear();
            partition.counts[flat] = 0;
        }
    }
    size_t total = 0;
    for (uint32_t flat : active)
        total += partition.counts[flat];
    partition.total = total;
    return active;
}

} // namespace alert
