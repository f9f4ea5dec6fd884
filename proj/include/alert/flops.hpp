#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alert/embedder.hpp"
#include "alert/head.hpp"

namespace alert {

/// Per-sample statistics the analytic cost model scales with. The embedder
/// cost is linear in active events; the encoder cost depends only on the
/// active patch count.
struct SampleStats {
    uint64_t events = 0;
    uint64_t active_events = 0;
    uint64_t active_patches = 0;
};

struct FlopLine {
    std::string label;
    double flops = 0.0;
};

struct FlopReport {
    double per_event = 0.0;  // embedder path, identical for every event
    double per_sample = 0.0; // embedder over active events + head over one readout
    std::vector<FlopLine> event_breakdown;
    std::vector<FlopLine> sample_breakdown;
};

/// Analytic FLOP count, pure function of the configs and sample stats.
/// Convention: one multiply-accumulate is 2 FLOPs; bias adds, folded-norm
/// affines and rectifiers count 1 per element; exp (and erf) count 1;
/// softmax costs 4 per element. Layer norm is costed at 5 per element.
FlopReport count_flops(const MlpConfig& mlp, const TimeEncodingConfig& te, const HeadConfig& head,
                       const SampleStats& stats);

} // namespace alert
