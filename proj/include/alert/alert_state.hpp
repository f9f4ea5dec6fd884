#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alert/embedder.hpp"

namespace alert {

/// Staleness bookkeeping mode. The global-step clock ages every token on
/// every event, so patches that receive no events still decay; the
/// per-update mode replays the literal per-patch counter semantics where
/// decay fires only on a patch's own losing update attempts.
enum class CounterMode { kGlobalStep, kPerUpdate };

struct AlertConfig {
    double lambda = 0.1;               // decay rate per stale step
    uint32_t n_threshold = 64;         // staleness threshold N before decay starts
    uint32_t k = 1;                    // events per update batch
    uint32_t activation_threshold = 1; // activity counter gate for readout
    CounterMode counter_mode = CounterMode::kGlobalStep;

    void validate() const;
};

/// The entire asynchronous memory: one token per patch plus per-channel
/// win bookkeeping. No raw event is ever buffered, so the footprint is
/// O(patches x channels) regardless of stream length.
struct TokenState {
    uint32_t patch_count = 0;
    uint32_t channels = 0;
    std::vector<float> values;        // patch_count x channels, last winning feature
    std::vector<uint64_t> last_win;   // global step of the last win per channel
    std::vector<uint8_t> won;         // set once a channel holds a real feature
    std::vector<uint32_t> update_age; // per-update counters (CounterMode::kPerUpdate)
    std::vector<uint32_t> counts;     // per-patch activity counter
    uint64_t global_step = 0;         // total events processed
    bool zero_init = true;            // zero is the max identity iff features are >= 0

    size_t memory_bytes() const;
};

/// Fresh state: all values zero, counters zero, step zero. zero_init should
/// be true exactly when the feature generator's output is rectified; a
/// linear final layer can go negative, in which case channels stay unset
/// until their first win so the running max matches a batch max exactly.
TokenState init_state(const GridConfig& grid, uint32_t channels, bool zero_init);

/// On-demand materialization of the active tokens, row-major by patch id,
/// positional embeddings applied. All channels reflect the same step.
struct Snapshot {
    uint64_t step = 0;
    std::vector<PatchToken> tokens;

    bool operator==(const Snapshot&) const = default;
};

struct ReadoutSchedule {
    enum class Mode { kFinalOnly, kEveryDeltaT, kEveryNEvents };
    Mode mode = Mode::kFinalOnly;
    uint64_t delta_t_us = 0;
    uint64_t every_n = 0;
};

/// Reusable buffers for the per-event update path.
struct UpdateScratch {
    FgScratch fg;
    std::vector<float> input;
    std::vector<float> feature;
};

/// Per-event token updates with Old Maximum Value Decay. Decay is evaluated
/// lazily: the state stores the last winning feature and its step, and reads
/// apply exp(-lambda * max(0, staleness - N)) on access, which matches an
/// eager per-step sweep to rounding.
class AlertEngine {
public:
    AlertEngine(const TokenEmbedder& embedder, const AlertConfig& cfg);

    TokenState make_state() const;

    /// Folds one arrival batch of 1..k events into the state; the global
    /// step advances by one per event regardless of batching, so batch
    /// granularity never changes the math.
    void update(TokenState& state, std::span<const NormalizedEvent> batch) const;
    void update(TokenState& state, std::span<const NormalizedEvent> batch,
                UpdateScratch& scratch) const;

    /// The lazily decayed value of one channel at the current step.
    float effective_value(const TokenState& state, uint32_t patch_flat, uint32_t channel) const;

    /// Pure readout; never mutates the state, so repeated snapshots are
    /// bit-identical.
    Snapshot snapshot(const TokenState& state) const;

    /// Activity-counter decay: -1 for every patch whose token decayed on a
    /// majority of channels since its last win window, floored at zero.
    /// Called once per readout interval by run_stream.
    void note_readout(TokenState& state) const;

    /// Replays a sorted stream with on-demand readout. Batches never cross
    /// a readout boundary, so snapshots land at identical global steps for
    /// any k. Always ends with a snapshot covering the stream tail.
    std::vector<Snapshot> run_stream(TokenState& state, std::span<const Event> events,
                                     const ReadoutSchedule& schedule) const;

    const AlertConfig& config() const { return cfg_; }
    const TokenEmbedder& embedder() const { return *embedder_; }

private:
    const TokenEmbedder* embedder_;
    AlertConfig cfg_;
};

} // namespace alert
