#pragma once

// Shared fixtures for the test binaries: temp-file management, quick event
// builders and deterministic random data.

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "alert/events.hpp"
#include "alert/grid.hpp"

namespace testutil {

inline std::string tmp_path(const std::string& tag) {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path();
    return (dir / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)))
        .string();
}

struct TmpFile {
    std::string path;
    explicit TmpFile(const std::string& tag) : path(tmp_path(tag)) {}
    ~TmpFile() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

inline alert::EventStream make_stream(std::vector<alert::Event> events, uint16_t w, uint16_t h) {
    alert::EventStream s;
    s.header.sensor_width = w;
    s.header.sensor_height = h;
    s.header.event_count = events.size();
    s.header.duration_us = events.empty() ? 0 : events.back().t - events.front().t;
    s.events = std::move(events);
    return s;
}

inline std::vector<alert::Event> random_events(std::mt19937_64& rng, size_t count, uint16_t w,
                                               uint16_t h, uint64_t max_gap_us = 100) {
    std::vector<alert::Event> events;
    events.reserve(count);
    uint64_t t = 0;
    for (size_t i = 0; i < count; ++i) {
        t += rng() % (max_gap_us + 1);
        alert::Event e;
        e.t = t;
        e.x = uint16_t(rng() % w);
        e.y = uint16_t(rng() % h);
        e.p = (rng() & 1) ? int8_t(1) : int8_t(-1);
        events.push_back(e);
    }
    return events;
}

inline float random_float(std::mt19937_64& rng, float lo, float hi) {
    const double u = double(rng() >> 11) * 0x1.0p-53;
    return float(lo + (hi - lo) * u);
}

} // namespace testutil
