#include "alert/verify.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

namespace alert {

namespace {

bool bit_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

std::string describe_patch(PatchId id) {
    return "(" + std::to_string(id.gx) + "," + std::to_string(id.gy) + ")";
}

// Replays one window event by event and reports the final snapshot.
Snapshot replay_window(const AlertEngine& engine, std::span<const Event> events) {
    TokenState state = engine.make_state();
    UpdateScratch scratch;
    std::vector<NormalizedEvent> chunk;
    const uint32_t k = engine.config().k;
    for (size_t i = 0; i < events.size(); i += k) {
        chunk.clear();
        for (size_t j = i; j < std::min(events.size(), i + k); ++j)
            chunk.push_back(normalize(engine.embedder().grid, events[j]));
        engine.update(state, chunk, scratch);
    }
    return engine.snapshot(state);
}

// Eagerly materialized decay, double precision: every step multiplies every
// stale channel by exp(-lambda) once. Win outcomes are taken from the lazy
// engine so the two value trajectories stay comparable channel for channel.
struct EagerShadow {
    uint32_t channels = 0;
    uint32_t n_threshold = 0;
    double decay = 1.0;
    std::vector<double> values;
    std::vector<uint64_t> last_win;
    std::vector<uint8_t> won;
    uint64_t step = 0;

    EagerShadow(uint32_t patches, uint32_t c, const AlertConfig& cfg)
        : channels(c), n_threshold(cfg.n_threshold), decay(std::exp(-cfg.lambda)),
          values(size_t(patches) * c, 0.0), last_win(size_t(patches) * c, 0),
          won(size_t(patches) * c, 0) {}

    void advance(const TokenState& lazy) {
        ++step;
        for (size_t i = 0; i < values.size(); ++i)
            if (won[i] && step - last_win[i] > n_threshold)
                values[i] *= decay;
        // Channels the lazy engine re-won this step adopt the stored feature.
        for (size_t i = 0; i < values.size(); ++i) {
            if (lazy.last_win[i] == step && (lazy.zero_init || lazy.won[i])) {
                values[i] = double(lazy.values[i]);
                last_win[i] = step;
                won[i] = 1;
            }
        }
    }
};

EquivalenceReport verify_strict(const EventStream& stream, const TokenEmbedder& embedder,
                                const AlertConfig& alert_cfg,
                                const EquivalenceOptions& options) {
    EquivalenceReport report;
    report.trials = options.trials;

    std::mt19937_64 rng(options.seed);
    const AlertEngine engine(embedder, alert_cfg);

    for (uint32_t trial = 0; trial < options.trials; ++trial) {
        const size_t max_start = stream.events.size() - size_t(options.ne);
        const size_t start = size_t(rng() % (max_start + 1));
        const auto sample = sample_ccim(stream, options.ne, start);
        if (!sample)
            throw ValidationError("stream too short for the requested window size");

        const auto batch = embedder.embed_sample(sample->events);
        const Snapshot snap = replay_window(engine, sample->events);

        bool match = snap.tokens.size() == batch.size();
        std::string divergence;
        if (!match) {
            divergence = "active set size " + std::to_string(snap.tokens.size()) + " vs " +
                         std::to_string(batch.size());
        } else {
            for (size_t i = 0; i < batch.size() && match; ++i) {
                if (!(snap.tokens[i].patch == batch[i].patch)) {
                    match = false;
                    divergence = "patch order " + describe_patch(snap.tokens[i].patch) + " vs " +
                                 describe_patch(batch[i].patch);
                } else if (!bit_equal(snap.tokens[i].values, batch[i].values)) {
                    match = false;
                    for (size_t j = 0; j < batch[i].values.size(); ++j) {
                        if (snap.tokens[i].values[j] != batch[i].values[j] ||
                            std::signbit(snap.tokens[i].values[j]) !=
                                std::signbit(batch[i].values[j])) {
                            divergence = "patch " + describe_patch(batch[i].patch) + " channel " +
                                         std::to_string(j) + " step " +
                                         std::to_string(snap.step);
                            break;
                        }
                    }
                }
            }
        }

        // Batch-size invariance: the same window under coarser batching.
        if (match) {
            for (uint32_t k : {8u, 64u}) {
                AlertConfig coarse = alert_cfg;
                coarse.k = k;
                const AlertEngine coarse_engine(embedder, coarse);
                const Snapshot again = replay_window(coarse_engine, sample->events);
                if (again.step != snap.step || again.tokens.size() != snap.tokens.size()) {
                    match = false;
                    divergence = "k=" + std::to_string(k) + " changed the snapshot shape";
                    break;
                }
                for (size_t i = 0; i < again.tokens.size(); ++i) {
                    if (!bit_equal(again.tokens[i].values, snap.tokens[i].values)) {
                        match = false;
                        divergence = "k=" + std::to_string(k) + " diverged at patch " +
                                     describe_patch(snap.tokens[i].patch);
                        break;
                    }
                }
                if (!match)
                    break;
            }
        }

        if (!match) {
            ++report.failures;
            if (report.first_divergence.empty())
                report.first_divergence = "window=" + std::to_string(trial) + " " + divergence;
        }
    }
    report.pass = report.failures == 0;
    return report;
}

EquivalenceReport verify_decay(const EventStream& stream, const TokenEmbedder& embedder,
                               const AlertConfig& alert_cfg, const EquivalenceOptions& options) {
    if (alert_cfg.counter_mode != CounterMode::kGlobalStep)
        throw ConfigError("decay-mode verification covers the global_step counter mode");
    EquivalenceReport report;
    report.trials = 1;

    const AlertEngine engine(embedder, alert_cfg);
    TokenState state = engine.make_state();
    EagerShadow shadow(state.patch_count, state.channels, alert_cfg);
    UpdateScratch scratch;

    const size_t limit = std::min<size_t>(stream.events.size(), size_t(options.ne));
    std::vector<NormalizedEvent> one(1);
    for (size_t i = 0; i < limit; ++i) {
        one[0] = normalize(embedder.grid, stream.events[i]);
        engine.update(state, one, scratch);
        shadow.advance(state);

        for (uint32_t patch = 0; patch < state.patch_count; ++patch) {
            for (uint32_t ch = 0; ch < state.channels; ++ch) {
                const size_t idx = size_t(patch) * state.channels + ch;
                const double lazy = double(engine.effective_value(state, patch, ch));
                const double eager = shadow.won[idx] || state.zero_init ? shadow.values[idx] : 0.0;
                const double diff = std::abs(lazy - eager);
                if (diff > report.max_abs_diff)
                    report.max_abs_diff = diff;
                if (diff > options.tolerance && report.first_divergence.empty()) {
                    ++report.failures;
                    report.first_divergence =
                        "patch " + describe_patch(patch_from_flat(embedder.grid, patch)) +
                        " channel " + std::to_string(ch) + " step " +
                        std::to_string(state.global_step) + " lazy=" + std::to_string(lazy) +
                        " eager=" + std::to_string(eager);
                }
            }
        }
    }
    report.pass = report.failures == 0;
    return report;
}

} // namespace

EquivalenceReport verify_equivalence(const EventStream& stream, const TokenEmbedder& embedder,
                                     const AlertConfig& alert_cfg,
                                     const EquivalenceOptions& options) {
    if (stream.events.size() < options.ne)
        throw ValidationError("stream holds " + std::to_string(stream.events.size()) +
                              " events, need at least " + std::to_string(options.ne));
    if (alert_cfg.lambda == 0.0)
        return verify_strict(stream, embedder, alert_cfg, options);
    return verify_decay(stream, embedder, alert_cfg, options);
}

} // namespace alert
