#include "alert/alert_state.hpp"

#include <algorithm>
#include <cmath>

namespace alert {

void AlertConfig::validate() const {
    if (lambda < 0.0)
        throw ConfigError("decay rate lambda must be >= 0");
    if (k == 0)
        throw ConfigError("update batch size k must be >= 1");
}

size_t TokenState::memory_bytes() const {
    return sizeof(TokenState) + values.capacity() * sizeof(float) +
           last_win.capacity() * sizeof(uint64_t) + won.capacity() * sizeof(uint8_t) +
           update_age.capacity() * sizeof(uint32_t) + counts.capacity() * sizeof(uint32_t);
}

TokenState init_state(const GridConfig& grid, uint32_t channels, bool zero_init) {
    grid.validate();
    if (channels == 0)
        throw ConfigError("token width must be >= 1");
    TokenState state;
    state.patch_count = grid.patch_count();
    state.channels = channels;
    const size_t cells = size_t(state.patch_count) * channels;
    state.values.assign(cells, 0.0f);
    state.last_win.assign(cells, 0);
    state.won.assign(cells, 0);
    state.update_age.assign(cells, 0);
    state.counts.assign(state.patch_count, 0);
    state.global_step = 0;
    state.zero_init = zero_init;
    return state;
}

AlertEngine::AlertEngine(const TokenEmbedder& embedder, const AlertConfig& cfg)
    : embedder_(&embedder), cfg_(cfg) {
    cfg_.validate();
    embedder.validate();
    // Asynchronous updates need the bounded time representation; a shifted
    // time origin cannot be maintained incrementally.
    if (!embedder.te.enabled)
        throw ConfigError("asynchronous updates require time encoding to be enabled");
}

TokenState AlertEngine::make_state() const {
    return init_state(embedder_->grid, embedder_->mlp.out_channels, embedder_->mlp.rectify_last);
}

float AlertEngine::effective_value(const TokenState& state, uint32_t patch_flat,
                                   uint32_t channel) const {
    const size_t idx = size_t(patch_flat) * state.channels + channel;
    if (!state.zero_init && !state.won[idx])
        return 0.0f; // unset channel reads as empty
    if (cfg_.counter_mode == CounterMode::kPerUpdate)
        return state.values[idx]; // decay is materialized eagerly in this mode
    const uint64_t staleness = state.global_step - state.last_win[idx];
    if (cfg_.lambda == 0.0 || staleness <= cfg_.n_threshold)
        return state.values[idx];
    const double exponent = cfg_.lambda * double(staleness - cfg_.n_threshold);
    return float(double(state.values[idx]) * std::exp(-exponent));
}

void AlertEngine::update(TokenState& state, std::span<const NormalizedEvent> batch) const {
    UpdateScratch scratch;
    update(state, batch, scratch);
}

void AlertEngine::update(TokenState& state, std::span<const NormalizedEvent> batch,
                         UpdateScratch& scratch) const {
    if (batch.empty() || batch.size() > cfg_.k)
        throw ValidationError("update batch must hold 1..k events, got " +
                              std::to_string(batch.size()));
    const uint32_t c = state.channels;
    scratch.input.resize(embedder_->mlp.input_dim);

    for (const NormalizedEvent& ev : batch) {
        const uint32_t flat = flat_index(embedder_->grid, ev.patch);
        if (flat >= state.patch_count)
            throw ValidationError("event patch id outside the grid");

        ++state.global_step;
        ++state.counts[flat];

        build_fg_input(ev, embedder_->te, 0, scratch.input);
        event_feature(embedder_->mlp, embedder_->fg, scratch.input, scratch.fg, scratch.feature);

        float* values = state.values.data() + size_t(flat) * c;
        uint64_t* last_win = state.last_win.data() + size_t(flat) * c;
        uint8_t* won = state.won.data() + size_t(flat) * c;

        if (cfg_.counter_mode == CounterMode::kGlobalStep) {
            for (uint32_t j = 0; j < c; ++j) {
                const float f = scratch.feature[j];
                const bool unset = !state.zero_init && !won[j];
                // A stale stored maximum competes after decay, so a moderate
                // fresh feature can displace it; ties count as wins.
                if (unset || f >= effective_value(state, flat, j)) {
                    values[j] = f;
                    last_win[j] = state.global_step;
                    won[j] = 1;
                }
                // Losing features leave the state untouched: the decayed
                // value stays represented by (stored, last_win).
            }
        } else {
            uint32_t* age = state.update_age.data() + size_t(flat) * c;
            uint32_t decayed = 0;
            for (uint32_t j = 0; j < c; ++j) {
                const float f = scratch.feature[j];
                const bool unset = !state.zero_init && !won[j];
                if (unset || f >= values[j]) {
                    values[j] = f;
                    age[j] = 0;
                    won[j] = 1;
                    last_win[j] = state.global_step;
                } else {
                    ++age[j];
                    if (age[j] > cfg_.n_threshold) {
                        values[j] = float(double(values[j]) * std::exp(-cfg_.lambda));
                        ++decayed;
                    }
                }
            }
            if (decayed * 2 > c && state.counts[flat] > 0)
                --state.counts[flat];
        }
    }
}

Snapshot AlertEngine::snapshot(const TokenState& state) const {
    Snapshot snap;
    snap.step = state.global_step;
    // Activity needs at least one absorbed event even when the threshold is
    // zero, mirroring the batch path where only present patches exist.
    const uint32_t gate = std::max(cfg_.activation_threshold, 1u);
    for (uint32_t flat = 0; flat < state.patch_count; ++flat) {
        if (state.counts[flat] < gate)
            continue;
        PatchToken token;
        token.patch = patch_from_flat(embedder_->grid, flat);
        token.values.resize(state.channels);
        for (uint32_t j = 0; j < state.channels; ++j)
            token.values[j] = effective_value(state, flat, j);
        add_positional(token, embedder_->pos, embedder_->grid);
        snap.tokens.push_back(std::move(token));
    }
    return snap;
}

void AlertEngine::note_readout(TokenState& state) const {
    const uint32_t c = state.channels;
    for (uint32_t flat = 0; flat < state.patch_count; ++flat) {
        if (state.counts[flat] == 0)
            continue;
        uint32_t stale = 0;
        for (uint32_t j = 0; j < c; ++j) {
            const size_t idx = size_t(flat) * c + j;
            if (!state.zero_init && !state.won[idx])
                continue;
            const uint64_t age = cfg_.counter_mode == CounterMode::kGlobalStep
                                     ? state.global_step - state.last_win[idx]
                                     : state.update_age[idx];
            if (age > cfg_.n_threshold)
                ++stale;
        }
        if (stale * 2 > c)
            --state.counts[flat];
    }
}

std::vector<Snapshot> AlertEngine::run_stream(TokenState& state, std::span<const Event> events,
                                              const ReadoutSchedule& schedule) const {
    std::vector<Snapshot> out;
    if (events.empty())
        return out;

    UpdateScratch scratch;
    std::vector<NormalizedEvent> chunk;
    chunk.reserve(cfg_.k);

    const bool by_time = schedule.mode == ReadoutSchedule::Mode::kEveryDeltaT;
    const bool by_count = schedule.mode == ReadoutSchedule::Mode::kEveryNEvents;
    if (by_time && schedule.delta_t_us == 0)
        throw ConfigError("time-based readout needs delta_t >= 1us");
    if (by_count && schedule.every_n == 0)
        throw ConfigError("count-based readout needs every_n >= 1");

    uint64_t next_time = by_time ? events.front().t + schedule.delta_t_us : 0;
    uint64_t since_readout = 0;
    size_t i = 0;

    auto emit = [&] {
        out.push_back(snapshot(state));
        note_readout(state);
        since_readout = 0;
    };

    while (i < events.size()) {
        if (by_time && events[i].t >= next_time) {
            // One readout per elapsed interval, including empty ones.
            emit();
            next_time += schedule.delta_t_us;
            continue;
        }

        size_t limit = std::min(events.size(), i + cfg_.k);
        if (by_count)
            limit = std::min(limit, i + size_t(schedule.every_n - since_readout));
        if (by_time) {
            while (limit > i && events[limit - 1].t >= next_time)
                --limit; // batches never cross a readout boundary
        }

        chunk.clear();
        for (size_t j = i; j < limit; ++j)
            chunk.push_back(normalize(embedder_->grid, events[j]));
        update(state, chunk, scratch);
        since_readout += limit - i;
        i = limit;

        if (by_count && since_readout == schedule.every_n)
            emit();
    }

    if (since_readout > 0 || out.empty())
        emit(); // trailing tail (or the single final-only readout)
    return out;
}

} // namespace alert
