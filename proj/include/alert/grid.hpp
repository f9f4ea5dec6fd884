#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alert/events.hpp"

namespace alert {

/// Fixed spatial partition of the sensor plane. Sensor sizes that do not
/// divide evenly get truncated edge patches; normalization still uses the
/// nominal patch size so the learned embedding sees one consistent scale.
struct GridConfig {
    uint16_t sensor_width = 128;
    uint16_t sensor_height = 128;
    uint16_t patch_w = 8;
    uint16_t patch_h = 8;
    uint32_t activation_threshold = 1; // events per patch per sample

    uint16_t grid_w() const { return uint16_t((sensor_width + patch_w - 1) / patch_w); }
    uint16_t grid_h() const { return uint16_t((sensor_height + patch_h - 1) / patch_h); }
    uint32_t patch_count() const { return uint32_t(grid_w()) * grid_h(); }

    void validate() const;
};

/// The activation threshold is an absolute per-sample event count; this
/// converts the per-patch-pixel rate reading of the same knob.
uint32_t threshold_from_rate(const GridConfig& cfg, double rate_per_patch_pixel);

struct PatchId {
    uint16_t gx = 0;
    uint16_t gy = 0;

    bool operator==(const PatchId&) const = default;
};

inline uint32_t flat_index(const GridConfig& cfg, PatchId id) {
    return uint32_t(id.gy) * cfg.grid_w() + id.gx;
}

inline PatchId patch_from_flat(const GridConfig& cfg, uint32_t flat) {
    return PatchId{uint16_t(flat % cfg.grid_w()), uint16_t(flat / cfg.grid_w())};
}

/// Event with spatial coordinates scaled to [-1, 1] with respect to its
/// patch (not the full sensor). The timestamp is untouched here.
struct NormalizedEvent {
    uint64_t t = 0;
    float xn = 0.0f;
    float yn = 0.0f;
    float p = 1.0f; // -1 or +1
    PatchId patch;
};

PatchId assign_patch(const GridConfig& cfg, const Event& e);

NormalizedEvent normalize(const GridConfig& cfg, const Event& e);

/// Per-patch local event clouds for one sample, dense over the grid.
struct Partition {
    std::vector<std::vector<NormalizedEvent>> cells; // patch_count() entries
    std::vector<uint32_t> counts;                    // pre-filter event counts
    size_t total = 0;                                // sum of counts
};

/// Every event lands in exactly one cell; within-cell order preserves the
/// input order.
Partition partition_sample(const GridConfig& cfg, std::span<const Event> events);

/// Drops patches whose event count is below the activation threshold along
/// with their events, and returns the surviving flat patch ids in row-major
/// order. Idempotent.
std::vector<uint32_t> filter_active(const GridConfig& cfg, Partition& partition);

} // namespace alert
