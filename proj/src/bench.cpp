#include "alert/bench.hpp"

#include <algorithm>
#include <chrono>

namespace alert {

namespace {

using Clock = std::chrono::steady_clock;

double us_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::micro>(b - a).count();
}

} // namespace

BenchReport bench(const EventStream& stream, const TokenEmbedder& embedder,
                  const AlertConfig& alert_cfg, const HeadConfig& head_cfg,
                  const HeadWeights& head_weights, const ReadoutSchedule& schedule,
                  uint64_t max_events) {
    if (stream.events.empty())
        throw ValidationError("cannot benchmark an empty stream");

    const AlertEngine engine(embedder, alert_cfg);
    BenchReport report;

    const size_t n = std::min<size_t>(stream.events.size(), size_t(max_events));
    report.events = n;

    // Warm-up pass over a prefix so caches and branch predictors settle.
    {
        TokenState warm = engine.make_state();
        UpdateScratch scratch;
        std::vector<NormalizedEvent> one(1);
        const size_t warm_n = std::min<size_t>(n, 10000);
        for (size_t i = 0; i < warm_n; ++i) {
            one[0] = normalize(embedder.grid, stream.events[i]);
            engine.update(warm, one, scratch);
        }
    }

    TokenState state = engine.make_state();
    UpdateScratch scratch;
    std::vector<NormalizedEvent> one(1);
    std::vector<double> latencies;
    latencies.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        one[0] = normalize(embedder.grid, stream.events[i]);
        const auto t0 = Clock::now();
        engine.update(state, one, scratch);
        const auto t1 = Clock::now();
        latencies.push_back(us_between(t0, t1));
    }

    double total = 0.0;
    for (double v : latencies)
        total += v;
    report.event_mean_us = total / double(latencies.size());
    std::vector<double> sorted = latencies;
    const size_t p50 = sorted.size() / 2;
    const size_t p99 = std::min(sorted.size() - 1, (sorted.size() * 99) / 100);
    std::nth_element(sorted.begin(), sorted.begin() + p50, sorted.end());
    report.event_p50_us = sorted[p50];
    std::nth_element(sorted.begin(), sorted.begin() + p99, sorted.end());
    report.event_p99_us = sorted[p99];

    // Readout cost: snapshot plus one classification, averaged.
    constexpr int kReadoutReps = 10;
    const auto r0 = Clock::now();
    for (int rep = 0; rep < kReadoutReps; ++rep) {
        const Snapshot snap = engine.snapshot(state);
        (void)classify(head_cfg, head_weights, snap);
    }
    const auto r1 = Clock::now();
    report.readout_ms = us_between(r0, r1) / 1000.0 / kReadoutReps;

    // Input accumulation time implied by the schedule.
    const double duration_ms = double(stream.events[n - 1].t - stream.events[0].t) / 1000.0;
    switch (schedule.mode) {
    case ReadoutSchedule::Mode::kEveryDeltaT:
        report.mean_t_in_ms = double(schedule.delta_t_us) / 1000.0;
        break;
    case ReadoutSchedule::Mode::kEveryNEvents:
        report.mean_t_in_ms =
            duration_ms / std::max(1.0, double(n) / double(schedule.every_n));
        break;
    case ReadoutSchedule::Mode::kFinalOnly:
        report.mean_t_in_ms = duration_ms;
        break;
    }
    return report;
}

} // namespace alert
