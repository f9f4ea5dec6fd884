#pragma once

#include <cstdint>

#include "alert/head.hpp"
#include "alert/verify.hpp"

namespace alert {

/// Wall-clock figures; machine-dependent and informational only.
struct BenchReport {
    uint64_t events = 0;
    double event_mean_us = 0.0; // per-event update latency
    double event_p50_us = 0.0;
    double event_p99_us = 0.0;
    double readout_ms = 0.0;  // snapshot + classify, the inference time t_p
    double mean_t_in_ms = 0.0; // accumulation time implied by the schedule
};

BenchReport bench(const EventStream& stream, const TokenEmbedder& embedder,
                  const AlertConfig& alert_cfg, const HeadConfig& head_cfg,
                  const HeadWeights& head_weights, const ReadoutSchedule& schedule,
                  uint64_t max_events);

} // namespace alert
