#pragma once

#include <cstdint>
#include <string>

#include "alert/alert_state.hpp"

namespace alert {

struct EquivalenceOptions {
    uint64_t ne = 8192;    // constant-count window size per trial
    uint32_t trials = 100; // random windows (strict) or replays (decay)
    uint64_t seed = 42;    // window placement
    double tolerance = 1e-6; // decay mode only
};

struct EquivalenceReport {
    bool pass = false;
    uint32_t trials = 0;
    uint32_t failures = 0;
    double max_abs_diff = 0.0;      // decay mode
    std::string first_divergence;   // first (window, patch, channel, step) mismatch
};

/// Batch/incremental oracle. With lambda == 0 this is the strict mode: the
/// incremental per-event replay must reproduce the batch embedding of every
/// window bit-exactly, and replays with batch sizes k in {1, 8, 64} must
/// produce identical snapshots. With lambda > 0 the lazily evaluated decay
/// is compared against an eagerly materialized per-step sweep within the
/// tolerance.
EquivalenceReport verify_equivalence(const EventStream& stream, const TokenEmbedder& embedder,
                                     const AlertConfig& alert_cfg,
                                     const EquivalenceOptions& options);

} // namespace alert
