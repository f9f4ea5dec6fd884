#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alert/error.hpp"

namespace alert {

/// One sensor event. Timestamps are integer microseconds; all time math on
/// streams stays integral so long recordings never accumulate float drift.
struct Event {
    uint64_t t = 0; // microseconds, non-decreasing within a stream
    uint16_t x = 0; // pixel column, < sensor_width
    uint16_t y = 0; // pixel row, < sensor_height
    int8_t p = 1;   // polarity, -1 or +1 (0 is rejected, never coerced)

    bool operator==(const Event&) const = default;
};

struct StreamHeader {
    uint16_t sensor_width = 0;
    uint16_t sensor_height = 0;
    uint64_t event_count = 0;
    uint64_t duration_us = 0; // t_last - t_first over the payload
};

struct EventStream {
    StreamHeader header;
    std::vector<Event> events;
};

enum class StreamFormat { kBinary, kCsv };

/// ".csv" selects CSV, anything else the binary container.
StreamFormat format_from_path(const std::string& path);

EventStream read_stream(const std::string& path, StreamFormat format);

/// Events must be sorted by t and lie within the header's sensor bounds.
/// Binary round-trips bit-exactly, CSV value-exactly.
void write_stream(const EventStream& stream, const std::string& path, StreamFormat format);

/// Validates ordering, bounds and polarity; used by write_stream and callers
/// that assemble streams by hand.
void validate_stream(const EventStream& stream);

struct SyntheticConfig {
    uint16_t sensor_width = 128;
    uint16_t sensor_height = 128;
    uint64_t rate_hz = 100000;     // events per second, scheduled deterministically
    uint64_t duration_us = 100000; // recording length
    uint32_t blobs = 3;            // moving emitters
    uint32_t class_id = 0;         // selects the blob trajectory direction
    uint32_t num_classes = 11;
    double blob_sigma_px = 3.0;    // spatial spread around each blob center
    double speed_px_s = 40.0;      // blob drift speed
};

/// Deterministic moving-blob stream: a pure function of (config, seed).
/// Distinct class ids share the event schedule but move along distinct
/// directions, so a trained classifier has signal to pick up.
EventStream generate_synthetic(const SyntheticConfig& cfg, uint64_t seed);

enum class SampleMode { kConstantCount, kConstantTime };

struct SampleWindow {
    SampleMode mode = SampleMode::kConstantCount;
    uint64_t ne = 0;          // requested event count (constant-count mode)
    uint64_t delta_t_us = 0;  // window width (constant-time mode)
    size_t start_index = 0;   // index of the first event in the stream
    uint64_t start_time = 0;  // window start time (constant-time) or first event t
    uint64_t duration_us = 0; // T: t_last - t_first (count mode) or delta_t (time mode)
};

struct Sample {
    SampleWindow window;
    std::span<const Event> events;
};

/// Constant-count slice of exactly `ne` events starting at `start_index`.
/// Returns nullopt once the stream cannot supply a full window; padding or
/// stopping is the caller's policy.
std::optional<Sample> sample_ccim(const EventStream& stream, uint64_t ne, size_t start_index);

/// Constant-time slice covering [start_time, start_time + delta_t).
/// An empty slice is a valid result.
Sample sample_ctim(const EventStream& stream, uint64_t delta_t_us, uint64_t start_time);

} // namespace alert
