#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "alert/alert_state.hpp"
#include "alert/model_io.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace alert;

namespace {

TokenEmbedder small_embedder(uint64_t seed, bool rectify_last = false, uint32_t channels = 16) {
    TokenEmbedder emb;
    emb.grid.sensor_width = 32;
    emb.grid.sensor_height = 32;
    emb.grid.patch_w = 8;
    emb.grid.patch_h = 8;
    emb.grid.activation_threshold = 1;
    emb.te.enabled = true;
    emb.mlp.depth = 2;
    emb.mlp.base_channels = 8;
    emb.mlp.out_channels = channels;
    emb.mlp.input_dim = 5;
    emb.mlp.rectify_last = rectify_last;
    emb.fg = make_random_mlp_weights(emb.mlp, seed);
    emb.pos = make_random_positional(emb.grid, channels, seed + 1);
    return emb;
}

// Feature generator that outputs the same constant on every channel, which
// makes decay trajectories predictable.
TokenEmbedder constant_embedder(float value, uint32_t channels) {
    TokenEmbedder emb;
    emb.grid.sensor_width = 32;
    emb.grid.sensor_height = 32;
    emb.grid.patch_w = 8;
    emb.grid.patch_h = 8;
    emb.grid.activation_threshold = 1;
    emb.te.enabled = true;
    emb.mlp.depth = 1;
    emb.mlp.out_channels = channels;
    emb.mlp.input_dim = 5;
    emb.mlp.rectify_last = false;
    MlpWeights::Layer layer;
    layer.in = 5;
    layer.out = channels;
    layer.weight.assign(size_t(5) * channels, 0.0f);
    layer.bias.assign(channels, value);
    layer.scale.assign(channels, 1.0f);
    layer.shift.assign(channels, 0.0f);
    emb.fg.layers.push_back(layer);
    emb.pos.rows = emb.grid.patch_count();
    emb.pos.cols = channels;
    emb.pos.data.assign(size_t(emb.pos.rows) * channels, 0.0f);
    return emb;
}

std::vector<NormalizedEvent> normalize_all(const GridConfig& grid,
                                           std::span<const Event> events) {
    std::vector<NormalizedEvent> out;
    out.reserve(events.size());
    for (const Event& e : events)
        out.push_back(normalize(grid, e));
    return out;
}

void replay(const AlertEngine& engine, TokenState& state, std::span<const Event> events) {
    UpdateScratch scratch;
    std::vector<NormalizedEvent> one(1);
    for (const Event& e : events) {
        one[0] = normalize(engine.embedder().grid, e);
        engine.update(state, one, scratch);
    }
}

bool snapshots_bit_equal(const Snapshot& a, const Snapshot& b) {
    if (a.step != b.step || a.tokens.size() != b.tokens.size())
        return false;
    for (size_t i = 0; i < a.tokens.size(); ++i) {
        if (!(a.tokens[i].patch == b.tokens[i].patch))
            return false;
        const auto& va = a.tokens[i].values;
        const auto& vb = b.tokens[i].values;
        if (va.size() != vb.size() ||
            std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)) != 0)
            return false;
    }
    return true;
}

} // namespace

TEST_CASE("fresh state starts cold") {
    const TokenEmbedder emb = small_embedder(1);
    AlertConfig cfg;
    cfg.lambda = 0.0;
    const AlertEngine engine(emb, cfg);

    TokenState state = engine.make_state();
    CHECK(state.patch_count == 16);
    CHECK(state.channels == 16);
    CHECK(state.global_step == 0);
    CHECK(engine.snapshot(state).tokens.empty());

    TokenState again = engine.make_state();
    CHECK(state.values == again.values);
    CHECK(state.counts == again.counts);

    const TokenEmbedder big = small_embedder(1, false, 64);
    const AlertEngine big_engine(big, cfg);
    CHECK(big_engine.make_state().values.size() == 16 * 64);

    GridConfig full; // 128x128 with 8x8 patches
    CHECK(init_state(full, 512, true).values.size() == 256 * 512);
}

TEST_CASE("a never re-won channel shrinks monotonically toward zero") {
    const TokenEmbedder emb = constant_embedder(3.0f, 2);
    AlertConfig cfg;
    cfg.lambda = 0.05;
    cfg.n_threshold = 5;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();
    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}});

    UpdateScratch scratch;
    std::vector<NormalizedEvent> one(1);
    float prev = engine.effective_value(state, 0, 0);
    for (uint64_t m = 0; m < 2000; ++m) {
        one[0] = normalize(emb.grid, Event{m + 1, 30, 30, 1});
        engine.update(state, one, scratch);
        const float now = engine.effective_value(state, 0, 0);
        CHECK(std::abs(now) <= std::abs(prev));
        prev = now;
    }
    CHECK(prev < 1e-6f); // 3.0 * e^(-0.05 * 1995) underflows to nothing
}

TEST_CASE("first event writes its feature onto its patch only") {
    const TokenEmbedder emb = small_embedder(2);
    AlertConfig cfg;
    cfg.lambda = 0.0;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();

    const Event e{500, 11, 21, 1};
    replay(engine, state, std::vector<Event>{e});

    const auto batch = emb.embed_sample(std::vector<Event>{e});
    const Snapshot snap = engine.snapshot(state);
    REQUIRE(batch.size() == 1);
    REQUIRE(snap.tokens.size() == 1);
    CHECK(snap.tokens[0] == batch[0]);
    CHECK(state.counts[flat_index(emb.grid, batch[0].patch)] == 1);
}

TEST_CASE("incremental replay with zero decay reproduces batch embedding bit-exactly") {
    std::mt19937_64 rng(42);
    for (bool rectify : {false, true}) {
        const TokenEmbedder emb = small_embedder(7, rectify);
        AlertConfig cfg;
        cfg.lambda = 0.0;
        const AlertEngine engine(emb, cfg);

        for (int trial = 0; trial < 25; ++trial) {
            const auto events = testutil::random_events(rng, 300 + rng() % 700, 32, 32);
            TokenState state = engine.make_state();
            replay(engine, state, events);
            const Snapshot snap = engine.snapshot(state);

            const auto batch = emb.embed_sample(events);
            REQUIRE(snap.tokens.size() == batch.size());
            for (size_t i = 0; i < batch.size(); ++i) {
                CHECK(snap.tokens[i].patch == batch[i].patch);
                CHECK(std::memcmp(snap.tokens[i].values.data(), batch[i].values.data(),
                                  batch[i].values.size() * sizeof(float)) == 0);
            }
        }
    }
}

TEST_CASE("effective value follows the closed-form decay law") {
    const TokenEmbedder emb = constant_embedder(2.0f, 4);
    AlertConfig cfg;
    cfg.lambda = 0.1;
    cfg.n_threshold = 10;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();

    // One event wins patch (0,0); events in patch (3,3) then age it.
    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}});
    const uint64_t win_step = state.global_step;

    std::vector<Event> agers;
    for (uint64_t i = 0; i < 15; ++i)
        agers.push_back(Event{10 + i, 30, 30, 1});
    replay(engine, state, agers);

    SUBCASE("within the threshold the stored value is untouched") {
        // staleness is 16 > 10 here, so roll a fresh state for the bound.
        TokenState fresh = engine.make_state();
        replay(engine, fresh, std::vector<Event>{Event{0, 0, 0, 1}});
        std::vector<Event> few(agers.begin(), agers.begin() + 9);
        replay(engine, fresh, few);
        CHECK(engine.effective_value(fresh, 0, 0) == 2.0f);
    }
    SUBCASE("past the threshold the value decays exponentially") {
        const uint64_t staleness = state.global_step - win_step; // 15
        const double expected = 2.0 * std::exp(-0.1 * double(staleness - 10));
        CHECK(std::abs(double(engine.effective_value(state, 0, 0)) - expected) < 1e-7);
    }
    SUBCASE("lambda zero never decays") {
        AlertConfig frozen = cfg;
        frozen.lambda = 0.0;
        const AlertEngine frozen_engine(emb, frozen);
        TokenState fresh = frozen_engine.make_state();
        replay(frozen_engine, fresh, std::vector<Event>{Event{0, 0, 0, 1}});
        replay(frozen_engine, fresh, agers);
        CHECK(frozen_engine.effective_value(fresh, 0, 0) == 2.0f);
    }
}

TEST_CASE("hand-computed decay point") {
    // stored = 2.0, lambda = 0.1, staleness - N = 5 -> 2.0 * e^-0.5.
    const TokenEmbedder emb = constant_embedder(2.0f, 2);
    AlertConfig cfg;
    cfg.lambda = 0.1;
    cfg.n_threshold = 3;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();
    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}});
    std::vector<Event> agers;
    for (uint64_t i = 0; i < 8; ++i) // staleness 8, exponent 5 steps
        agers.push_back(Event{1 + i, 30, 30, 1});
    replay(engine, state, agers);
    CHECK(double(engine.effective_value(state, 0, 0)) ==
          doctest::Approx(1.2130613).epsilon(1e-6));
}

TEST_CASE("lazy decay matches an eager per-step sweep within 1e-6") {
    const TokenEmbedder emb = constant_embedder(2.0f, 2);
    for (double lambda : {0.01, 0.1, 1.0}) {
        AlertConfig cfg;
        cfg.lambda = lambda;
        cfg.n_threshold = 10;
        const AlertEngine engine(emb, cfg);
        TokenState state = engine.make_state();
        replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}});

        const auto eager = oracle::eager_decay_trajectory(2.0, lambda, 10000, cfg.n_threshold);
        UpdateScratch scratch;
        std::vector<NormalizedEvent> one(1);
        double worst = 0.0;
        for (uint64_t m = 0; m < 10000; ++m) {
            one[0] = normalize(emb.grid, Event{m + 1, 30, 30, 1});
            engine.update(state, one, scratch);
            const double lazy = double(engine.effective_value(state, 0, 0));
            worst = std::max(worst, std::abs(lazy - eager[size_t(m)]));
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("a decayed stored maximum can lose to a moderate fresh feature") {
    // Stored 2.0 decays below 1.9 after enough staleness; a fresh feature of
    // 1.9 must then win even though the raw stored value is larger.
    TokenEmbedder emb = constant_embedder(2.0f, 2);
    AlertConfig cfg;
    cfg.lambda = 0.5;
    cfg.n_threshold = 2;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();
    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}});

    // Age past the threshold so the effective value drops under 1.9.
    std::vector<Event> agers;
    for (uint64_t i = 0; i < 4; ++i)
        agers.push_back(Event{1 + i, 30, 30, 1});
    replay(engine, state, agers);
    REQUIRE(engine.effective_value(state, 0, 0) < 1.9f);

    // Swap the generator output to 1.9 by editing the bias, then hit patch 0.
    TokenEmbedder weaker = constant_embedder(1.9f, 2);
    const AlertEngine weaker_engine(weaker, cfg);
    // Continue on the same state: both engines share grid shape and width.
    UpdateScratch scratch;
    std::vector<NormalizedEvent> one = {normalize(weaker.grid, Event{10, 0, 0, 1})};
    weaker_engine.update(state, one, scratch);
    CHECK(engine.effective_value(state, 0, 0) == 1.9f);
}

TEST_CASE("ties count as wins and reset the staleness clock") {
    const TokenEmbedder emb = constant_embedder(1.5f, 2);
    AlertConfig cfg;
    cfg.lambda = 0.2;
    cfg.n_threshold = 0;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();
    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}});
    const uint64_t first_win = state.last_win[0];
    // Same constant feature arrives again: a tie, so the clock resets.
    replay(engine, state, std::vector<Event>{Event{5, 1, 0, 1}});
    CHECK(state.last_win[0] > first_win);
    CHECK(state.values[0] == 1.5f);
}

TEST_CASE("snapshot is pure and repeatable") {
    const TokenEmbedder emb = small_embedder(3);
    AlertConfig cfg;
    cfg.lambda = 0.3;
    cfg.n_threshold = 4;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();
    std::mt19937_64 rng(12);
    replay(engine, state, testutil::random_events(rng, 400, 32, 32));

    const TokenState before = state;
    const Snapshot a = engine.snapshot(state);
    const Snapshot b = engine.snapshot(state);
    CHECK(snapshots_bit_equal(a, b));
    CHECK(state.values == before.values);
    CHECK(state.last_win == before.last_win);
    CHECK(state.counts == before.counts);
    CHECK(state.global_step == before.global_step);
}

TEST_CASE("run_stream readout schedules") {
    const TokenEmbedder emb = small_embedder(4);
    AlertConfig cfg;
    cfg.lambda = 0.05;
    cfg.n_threshold = 32;
    cfg.k = 16;
    const AlertEngine engine(emb, cfg);

    SyntheticConfig gen;
    gen.sensor_width = 32;
    gen.sensor_height = 32;
    gen.rate_hz = 100000;
    gen.duration_us = 40000; // 4000 events
    const EventStream stream = generate_synthetic(gen, 21);

    SUBCASE("final-only yields one snapshot equal to folding all events") {
        TokenState state = engine.make_state();
        const auto snaps = engine.run_stream(state, stream.events, ReadoutSchedule{});
        REQUIRE(snaps.size() == 1);
        CHECK(snaps[0].step == stream.events.size());

        TokenState manual = engine.make_state();
        replay(engine, manual, stream.events);
        CHECK(snapshots_bit_equal(snaps[0], engine.snapshot(manual)));
    }
    SUBCASE("count schedule emits one snapshot per interval plus the tail") {
        ReadoutSchedule sched;
        sched.mode = ReadoutSchedule::Mode::kEveryNEvents;
        sched.every_n = 1000;
        TokenState state = engine.make_state();
        const auto snaps = engine.run_stream(state, stream.events, sched);
        REQUIRE(snaps.size() == 4);
        for (size_t i = 0; i < snaps.size(); ++i)
            CHECK(snaps[i].step == (i + 1) * 1000);
    }
    SUBCASE("time schedule covers empty intervals") {
        ReadoutSchedule sched;
        sched.mode = ReadoutSchedule::Mode::kEveryDeltaT;
        sched.delta_t_us = 10000;
        TokenState state = engine.make_state();
        const auto snaps = engine.run_stream(state, stream.events, sched);
        CHECK(snaps.size() >= 4);
    }
    SUBCASE("empty stream produces no snapshots") {
        TokenState state = engine.make_state();
        CHECK(engine.run_stream(state, {}, ReadoutSchedule{}).empty());
    }
    SUBCASE("batch granularity never changes the snapshots") {
        ReadoutSchedule sched;
        sched.mode = ReadoutSchedule::Mode::kEveryNEvents;
        sched.every_n = 1000;

        std::vector<std::vector<Snapshot>> runs;
        for (uint32_t k : {1u, 8u, 64u, 1024u}) {
            AlertConfig batched = cfg;
            batched.k = k;
            const AlertEngine batched_engine(emb, batched);
            TokenState state = batched_engine.make_state();
            runs.push_back(batched_engine.run_stream(state, stream.events, sched));
        }
        for (size_t r = 1; r < runs.size(); ++r) {
            REQUIRE(runs[r].size() == runs[0].size());
            for (size_t s = 0; s < runs[0].size(); ++s)
                CHECK(snapshots_bit_equal(runs[r][s], runs[0][s]));
        }
    }
}

TEST_CASE("activity counter gates the readout") {
    const TokenEmbedder emb = constant_embedder(1.0f, 4);
    AlertConfig cfg;
    cfg.lambda = 0.0;
    cfg.activation_threshold = 3;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();

    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}, Event{1, 1, 0, 1}});
    CHECK(engine.snapshot(state).tokens.empty()); // 2 < 3
    replay(engine, state, std::vector<Event>{Event{2, 2, 0, 1}});
    CHECK(engine.snapshot(state).tokens.size() == 1);
}

TEST_CASE("readout decrements the activity of fully stale patches") {
    const TokenEmbedder emb = constant_embedder(1.0f, 4);
    AlertConfig cfg;
    cfg.lambda = 0.5;
    cfg.n_threshold = 2;
    cfg.activation_threshold = 1;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();

    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}}); // patch 0
    std::vector<Event> agers;
    for (uint64_t i = 0; i < 10; ++i)
        agers.push_back(Event{1 + i, 30, 30, 1}); // patch 15 stays fresh
    replay(engine, state, agers);

    CHECK(state.counts[0] == 1);
    engine.note_readout(state);
    CHECK(state.counts[0] == 0); // all channels stale -> decrement
    engine.note_readout(state);
    CHECK(state.counts[0] == 0); // floored at zero
    CHECK(state.counts[15] == 10); // recently re-won patch is untouched
}

TEST_CASE("per-update counter mode replays the literal per-patch semantics") {
    const TokenEmbedder emb = constant_embedder(2.0f, 2);
    AlertConfig cfg;
    cfg.lambda = 0.1;
    cfg.n_threshold = 3;
    cfg.counter_mode = CounterMode::kPerUpdate;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();

    // Events in another patch do not age patch 0 in this mode.
    replay(engine, state, std::vector<Event>{Event{0, 0, 0, 1}});
    std::vector<Event> agers;
    for (uint64_t i = 0; i < 50; ++i)
        agers.push_back(Event{1 + i, 30, 30, 1});
    replay(engine, state, agers);
    CHECK(engine.effective_value(state, 0, 0) == 2.0f);

    // Constant features always tie, so even direct hits never decay.
    replay(engine, state, std::vector<Event>{Event{100, 1, 0, 1}});
    CHECK(engine.effective_value(state, 0, 0) == 2.0f);
    CHECK(state.update_age[0] == 0);

    // Weaker features lose and age the channel; decay fires on the patch's
    // own attempts once the counter passes N, one factor per losing attempt.
    const TokenEmbedder weaker = constant_embedder(0.5f, 2);
    const AlertEngine weaker_engine(weaker, cfg);
    UpdateScratch scratch;
    std::vector<NormalizedEvent> one(1);
    for (uint64_t i = 0; i < 3; ++i) { // ages to 3, still within N
        one[0] = normalize(weaker.grid, Event{200 + i, 0, 0, 1});
        weaker_engine.update(state, one, scratch);
    }
    CHECK(engine.effective_value(state, 0, 0) == 2.0f);
    for (uint64_t i = 0; i < 5; ++i) { // five attempts past N
        one[0] = normalize(weaker.grid, Event{300 + i, 0, 0, 1});
        weaker_engine.update(state, one, scratch);
    }
    CHECK(double(engine.effective_value(state, 0, 0)) ==
          doctest::Approx(2.0 * std::exp(-0.1 * 5)).epsilon(1e-6));
}

TEST_CASE("state size is independent of the number of processed events") {
    const TokenEmbedder emb = small_embedder(5, true, 8);
    AlertConfig cfg;
    cfg.lambda = 0.01;
    cfg.n_threshold = 100;
    cfg.k = 256;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();

    std::mt19937_64 rng(9);
    const auto events = testutil::random_events(rng, 4096, 32, 32);
    const auto normalized = normalize_all(emb.grid, events);

    UpdateScratch scratch;
    engine.update(state, std::span(normalized).subspan(0, 256), scratch);
    const size_t bytes_after_warmup = state.memory_bytes();

    for (int pass = 0; pass < 20; ++pass)
        for (size_t i = 0; i < normalized.size(); i += 256)
            engine.update(state, std::span(normalized).subspan(i, 256), scratch);

    CHECK(state.memory_bytes() == bytes_after_warmup);
    CHECK(state.global_step == 256 + 20 * 4096);
}

TEST_CASE("update rejects malformed batches") {
    const TokenEmbedder emb = small_embedder(6);
    AlertConfig cfg;
    cfg.k = 4;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();

    std::vector<NormalizedEvent> empty;
    CHECK_THROWS_AS(engine.update(state, empty), ValidationError);

    std::vector<NormalizedEvent> five(5, normalize(emb.grid, Event{0, 0, 0, 1}));
    CHECK_THROWS_AS(engine.update(state, five), ValidationError);
}

TEST_CASE("state dump exposes the archive tensors") {
    const TokenEmbedder emb = small_embedder(8);
    AlertConfig cfg;
    cfg.lambda = 0.0;
    const AlertEngine engine(emb, cfg);
    TokenState state = engine.make_state();
    replay(engine, state, std::vector<Event>{Event{3, 4, 5, -1}});

    const WeightArchive dump = dump_state(state);
    CHECK(require_tensor(dump, "state.values").dims == std::vector<uint32_t>{16, 16});
    CHECK(require_tensor(dump, "state.last_win").dims == std::vector<uint32_t>{16, 16});
    CHECK(require_tensor(dump, "state.counts").dims == std::vector<uint32_t>{16});
}
