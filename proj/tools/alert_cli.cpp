// Command-line front end: synthetic data, weight initialization, batch
// embedding, asynchronous stream replay, classification, the equivalence
// suite, FLOP accounting, benchmarking and accuracy evaluation.

#include <CLI11.hpp>

#include <cinttypes>
#include <cstdio>
#include <string>
#include <vector>

#include "alert/bench.hpp"
#include "alert/config.hpp"
#include "alert/eval.hpp"
#include "alert/flops.hpp"
#include "alert/model_io.hpp"
#include "alert/verify.hpp"

namespace {

using namespace alert;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

Config load_config(const CommonArgs& args) {
    Config cfg;
    if (!args.config_path.empty())
        cfg = Config::from_file(args.config_path);
    for (const std::string& pair : args.overrides)
        cfg.set_pair(pair);
    return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
}

TokenEmbedder build_embedder(const Config& cfg, const WeightArchive& archive, uint16_t sensor_w,
                             uint16_t sensor_h) {
    TokenEmbedder emb;
    emb.grid = grid_config(cfg, sensor_w, sensor_h);
    emb.te = te_config(cfg);
    emb.mlp = mlp_config(cfg);
    emb.fg = load_mlp_weights(archive, emb.mlp);
    emb.pos = load_positional(archive, emb.grid, emb.mlp.out_channels);
    emb.validate();
    return emb;
}

int cmd_gen(const CommonArgs& common, const std::string& out_path) {
    const Config cfg = load_config(common);
    const SyntheticConfig gen = synthetic_config(cfg);
    const uint64_t seed = cfg.get_u64("gen.seed", 1);
    const EventStream stream = generate_synthetic(gen, seed);
    write_stream(stream, out_path, format_from_path(out_path));
    std::printf("events=%zu duration_us=%" PRIu64 " sensor=%ux%u out=%s\n", stream.events.size(),
                stream.header.duration_us, gen.sensor_width, gen.sensor_height, out_path.c_str());
    return 0;
}

int cmd_init(const CommonArgs& common, const std::string& out_path) {
    const Config cfg = load_config(common);
    const uint64_t seed = cfg.get_u64("weights.seed", 1);
    const GridConfig grid = grid_config(cfg, uint16_t(cfg.get_u64("sensor.width", 128)),
                                        uint16_t(cfg.get_u64("sensor.height", 128)));
    const MlpConfig mlp = mlp_config(cfg);
    const HeadConfig head = head_config(cfg);

    WeightArchive archive;
    store_mlp_weights(archive, make_random_mlp_weights(mlp, seed));
    store_positional(archive, make_random_positional(grid, mlp.out_channels, seed + 1));
    store_head_weights(archive, head, make_random_head_weights(head, seed + 2));
    write_archive(archive, out_path);
    std::printf("tensors=%zu out=%s\n", archive.size(), out_path.c_str());
    return 0;
}

int cmd_embed(const CommonArgs& common, const std::string& weights_path,
              const std::string& in_path, const std::string& out_path) {
    const Config cfg = load_config(common);
    const EventStream stream = read_stream(in_path, format_from_path(in_path));
    const WeightArchive weights = read_archive(weights_path);
    const TokenEmbedder emb = build_embedder(cfg, weights, stream.header.sensor_width,
                                             stream.header.sensor_height);

    const std::string mode = cfg.get_str("sample.mode", "ccim");
    WeightArchive dump;
    size_t index = 0;
    auto dump_tokens = [&](const std::vector<PatchToken>& tokens) {
        Tensor ids{{uint32_t(tokens.size())}, {}};
        Tensor values{{uint32_t(tokens.size()), emb.mlp.out_channels}, {}};
        for (const PatchToken& t : tokens) {
            ids.data.push_back(float(flat_index(emb.grid, t.patch)));
            values.data.insert(values.data.end(), t.values.begin(), t.values.end());
        }
        const std::string base = "sample" + std::to_string(index);
        dump[base + ".patches"] = std::move(ids);
        dump[base + ".tokens"] = std::move(values);
        ++index;
    };

    if (mode == "ccim") {
        const uint64_t ne = cfg.get_u64("sample.ne", 8192);
        size_t start = 0;
        while (const auto sample = sample_ccim(stream, ne, start)) {
            dump_tokens(emb.embed_sample(sample->events));
            start += size_t(ne);
        }
    } else if (mode == "ctim") {
        const uint64_t delta = cfg.get_u64("sample.delta_t_us", 100000);
        if (!stream.events.empty()) {
            uint64_t start = stream.events.front().t;
            const uint64_t end = stream.events.back().t;
            while (start <= end) {
                const Sample sample = sample_ctim(stream, delta, start);
                dump_tokens(emb.embed_sample(sample.events));
                start += delta;
            }
        }
    } else {
        throw ConfigError("sample.mode must be ccim or ctim");
    }

    write_archive(dump, out_path);
    std::printf("samples=%zu out=%s\n", index, out_path.c_str());
    return 0;
}

int cmd_stream(const CommonArgs& common, const std::string& weights_path,
               const std::string& in_path, const std::string& pred_out,
               const std::string& state_out, int file_id, int truth) {
    const Config cfg = load_config(common);
    const EventStream stream = read_stream(in_path, format_from_path(in_path));
    const WeightArchive weights = read_archive(weights_path);
    const TokenEmbedder emb = build_embedder(cfg, weights, stream.header.sensor_width,
                                             stream.header.sensor_height);
    const HeadConfig head_cfg = head_config(cfg);
    const HeadWeights head = load_head_weights(weights, head_cfg);
    const AlertEngine engine(emb, alert_config(cfg));

    TokenState state = engine.make_state();
    const auto snapshots = engine.run_stream(state, stream.events, readout_schedule(cfg));

    std::vector<PredictionRecord> records;
    for (size_t i = 0; i < snapshots.size(); ++i) {
        const Prediction pred = classify(head_cfg, head, snapshots[i]);
        std::printf("readout=%zu step=%" PRIu64 " tokens=%zu pred=%u p_max=%.4f degenerate=%d\n",
                    i, snapshots[i].step, snapshots[i].tokens.size(), pred.argmax,
                    double(pred.probs[pred.argmax]), pred.degenerate ? 1 : 0);
        records.push_back(PredictionRecord{file_id, int32_t(i), truth, int32_t(pred.argmax)});
    }
    if (!pred_out.empty())
        write_predictions_csv(records, pred_out);
    if (!state_out.empty())
        write_archive(dump_state(state), state_out);
    return 0;
}

int cmd_classify(const CommonArgs& common, const std::string& weights_path,
                 const std::string& in_path) {
    const Config cfg = load_config(common);
    const WeightArchive weights = read_archive(weights_path);
    const WeightArchive tokens = read_archive(in_path);
    const HeadConfig head_cfg = head_config(cfg);
    const HeadWeights head = load_head_weights(weights, head_cfg);
    const GridConfig grid = grid_config(cfg, uint16_t(cfg.get_u64("sensor.width", 128)),
                                        uint16_t(cfg.get_u64("sensor.height", 128)));

    for (size_t index = 0;; ++index) {
        const std::string base = "sample" + std::to_string(index);
        const auto it = tokens.find(base + ".tokens");
        if (it == tokens.end()) {
            if (index == 0)
                throw ConfigError("token archive holds no sample tensors");
            break;
        }
        const Tensor& values = it->second;
        const Tensor& ids = require_tensor(tokens, base + ".patches");
        Snapshot snap;
        snap.step = index;
        const uint32_t width = values.dims.size() == 2 ? values.dims[1] : 0;
        if (width != head_cfg.token_width)
            throw ConfigError("token archive width does not match the head config");
        for (uint32_t r = 0; r < ids.data.size(); ++r) {
            PatchToken token;
            token.patch = patch_from_flat(grid, uint32_t(ids.data[r]));
            token.values.assign(values.data.begin() + size_t(r) * width,
                                values.data.begin() + size_t(r + 1) * width);
            snap.tokens.push_back(std::move(token));
        }
        const Prediction pred = classify(head_cfg, head, snap);
        std::printf("sample=%zu tokens=%zu pred=%u p_max=%.4f degenerate=%d\n", index,
                    snap.tokens.size(), pred.argmax, double(pred.probs[pred.argmax]),
                    pred.degenerate ? 1 : 0);
    }
    return 0;
}

int cmd_verify(const CommonArgs& common, uint32_t trials_override) {
    const Config cfg = load_config(common);
    const uint64_t seed = cfg.get_u64("verify.seed", 9);
    const uint32_t trials =
        trials_override ? trials_override : uint32_t(cfg.get_u64("verify.trials", 100));
    const uint64_t ne = cfg.get_u64("sample.ne", 8192);

    // Synthesize a stream that comfortably covers the window sweep.
    SyntheticConfig gen = synthetic_config(cfg);
    const uint64_t needed = 4 * ne;
    const uint64_t have = gen.rate_hz * gen.duration_us / 1000000u;
    if (have < needed)
        gen.duration_us = (needed * 1000000u) / gen.rate_hz + 1;
    const EventStream stream = generate_synthetic(gen, seed);

    WeightArchive archive;
    const GridConfig grid = grid_config(cfg, gen.sensor_width, gen.sensor_height);
    const MlpConfig mlp = mlp_config(cfg);
    store_mlp_weights(archive, make_random_mlp_weights(mlp, seed + 1));
    store_positional(archive, make_random_positional(grid, mlp.out_channels, seed + 2));
    const TokenEmbedder emb = build_embedder(cfg, archive, gen.sensor_width, gen.sensor_height);

    bool all_pass = true;

    AlertConfig strict_cfg = alert_config(cfg);
    strict_cfg.lambda = 0.0;
    strict_cfg.k = 1;
    EquivalenceOptions strict_opts;
    strict_opts.ne = ne;
    strict_opts.trials = trials;
    strict_opts.seed = seed + 3;
    const EquivalenceReport strict = verify_equivalence(stream, emb, strict_cfg, strict_opts);
    std::printf("strict.trials=%u strict.failures=%u strict=%s\n", strict.trials, strict.failures,
                strict.pass ? "PASS" : "FAIL");
    if (!strict.pass) {
        std::printf("strict.first_divergence=%s\n", strict.first_divergence.c_str());
        all_pass = false;
    }

    AlertConfig decay_cfg = alert_config(cfg);
    if (decay_cfg.lambda == 0.0)
        decay_cfg.lambda = 0.05;
    decay_cfg.k = 1;
    decay_cfg.counter_mode = CounterMode::kGlobalStep;
    // The probe window is short; keep the staleness threshold small enough
    // that decay actually fires inside it.
    decay_cfg.n_threshold = std::min(decay_cfg.n_threshold, 64u);
    EquivalenceOptions decay_opts;
    decay_opts.ne = std::min<uint64_t>(ne, 2048); // the eager sweep is O(events x cells)
    decay_opts.seed = seed + 4;
    const EquivalenceReport decay = verify_equivalence(stream, emb, decay_cfg, decay_opts);
    std::printf("decay.max_abs_diff=%.3g decay=%s\n", decay.max_abs_diff,
                decay.pass ? "PASS" : "FAIL");
    if (!decay.pass) {
        std::printf("decay.first_divergence=%s\n", decay.first_divergence.c_str());
        all_pass = false;
    }

    std::printf("%s\n", all_pass ? "PASS" : "FAIL");
    return all_pass ? 0 : 1;
}

int cmd_flops(const CommonArgs& common, uint64_t events, uint64_t active_events,
              uint64_t active_patches) {
    const Config cfg = load_config(common);
    const SampleStats stats{events, active_events ? active_events : events,
                            active_patches ? active_patches : 32};
    const FlopReport report =
        count_flops(mlp_config(cfg), te_config(cfg), head_config(cfg), stats);
    std::printf("flops_per_event=%.0f\n", report.per_event);
    for (const FlopLine& line : report.event_breakdown)
        std::printf("event.%s=%.0f\n", line.label.c_str(), line.flops);
    std::printf("flops_per_sample=%.0f\n", report.per_sample);
    for (const FlopLine& line : report.sample_breakdown)
        std::printf("sample.%s=%.0f\n", line.label.c_str(), line.flops);
    return 0;
}

int cmd_bench(const CommonArgs& common, const std::string& weights_path,
              const std::string& in_path) {
    const Config cfg = load_config(common);
    const EventStream stream = read_stream(in_path, format_from_path(in_path));
    const WeightArchive weights = read_archive(weights_path);
    const TokenEmbedder emb = build_embedder(cfg, weights, stream.header.sensor_width,
                                             stream.header.sensor_height);
    const HeadConfig head_cfg = head_config(cfg);
    const HeadWeights head = load_head_weights(weights, head_cfg);

    const BenchReport report = bench(stream, emb, alert_config(cfg), head_cfg, head,
                                     readout_schedule(cfg), cfg.get_u64("bench.events", 100000));
    std::printf("events=%" PRIu64 "\n", report.events);
    std::printf("event_mean_us=%.3f\n", report.event_mean_us);
    std::printf("event_p50_us=%.3f\n", report.event_p50_us);
    std::printf("event_p99_us=%.3f\n", report.event_p99_us);
    std::printf("t_p_ms=%.3f\n", report.readout_ms);
    std::printf("t_in_ms=%.3f\n", report.mean_t_in_ms);
    std::printf("t_lat_ms=%.3f\n", report.readout_ms + report.mean_t_in_ms);
    return 0;
}

int cmd_eval(const CommonArgs& common, const std::string& in_path) {
    const Config cfg = load_config(common);
    const auto records = read_predictions_csv(in_path);
    const EvalReport report = evaluate(records, uint32_t(cfg.get_u64("eval.nva_window", 5)));
    std::printf("samples=%zu files=%zu\n", report.samples, report.files);
    std::printf("sa=%.4f\n", report.sa);
    std::printf("fva=%.4f\n", report.fva);
    std::printf("nva=%.4f nva_window=%u\n", report.nva, report.nva_window);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-stream token embedding and classification toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string out_path, in_path, weights_path, pred_out, state_out;
    int file_id = 0, truth = 0;
    uint32_t trials = 0;
    uint64_t events = 8192, active_events = 0, active_patches = 0;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic event stream");
    add_common(gen, common);
    gen->add_option("--out", out_path, "output stream path (.csv selects CSV)")->required();

    CLI::App* init = app.add_subcommand("init", "write a randomly initialized weight archive");
    add_common(init, common);
    init->add_option("--out", out_path, "output archive path")->required();

    CLI::App* embed = app.add_subcommand("embed", "batch-embed sample windows into tokens");
    add_common(embed, common);
    embed->add_option("--weights", weights_path, "weight archive")->required();
    embed->add_option("--in", in_path, "input event stream")->required();
    embed->add_option("--out", out_path, "output token archive")->required();

    CLI::App* stream = app.add_subcommand("stream", "asynchronous replay with on-demand readout");
    add_common(stream, common);
    stream->add_option("--weights", weights_path, "weight archive")->required();
    stream->add_option("--in", in_path, "input event stream")->required();
    stream->add_option("--pred-out", pred_out, "write predictions CSV here");
    stream->add_option("--state-out", state_out, "dump the final token state as an archive");
    stream->add_option("--file-id", file_id, "file id tag for the predictions CSV");
    stream->add_option("--truth", truth, "ground-truth class for the predictions CSV");

    CLI::App* classify = app.add_subcommand("classify", "classify dumped token snapshots");
    add_common(classify, common);
    classify->add_option("--weights", weights_path, "weight archive")->required();
    classify->add_option("--in", in_path, "token archive from embed")->required();

    CLI::App* verify = app.add_subcommand("verify", "batch/incremental equivalence suite");
    add_common(verify, common);
    verify->add_option("--trials", trials, "number of strict-mode windows");

    CLI::App* flops = app.add_subcommand("flops", "analytic FLOP report");
    add_common(flops, common);
    flops->add_option("--events", events, "events per sample");
    flops->add_option("--active-events", active_events, "active events per sample");
    flops->add_option("--active-patches", active_patches, "active patches per readout");

    CLI::App* bench_cmd = app.add_subcommand("bench", "wall-clock latency measurements");
    add_common(bench_cmd, common);
    bench_cmd->add_option("--weights", weights_path, "weight archive")->required();
    bench_cmd->add_option("--in", in_path, "input event stream")->required();

    CLI::App* eval_cmd = app.add_subcommand("eval", "accuracy evaluation over predictions");
    add_common(eval_cmd, common);
    eval_cmd->add_option("--in", in_path, "predictions CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_gen(common, out_path);
        if (init->parsed())
            return cmd_init(common, out_path);
        if (embed->parsed())
            return cmd_embed(common, weights_path, in_path, out_path);
        if (stream->parsed())
            return cmd_stream(common, weights_path, in_path, pred_out, state_out, file_id, truth);
        if (classify->parsed())
            return cmd_classify(common, weights_path, in_path);
        if (verify->parsed())
            return cmd_verify(common, trials);
        if (flops->parsed())
            return cmd_flops(common, events, active_events, active_patches);
        if (bench_cmd->parsed())
            return cmd_bench(common, weights_path, in_path);
        if (eval_cmd->parsed())
            return cmd_eval(common, in_path);
    } catch (const alert::Error& e) {
        std::fprintf(stderr, "error: %s: %s\n", alert::error_kind_name(e.kind()), e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: internal: %s\n", e.what());
        return 3;
    }
    return 0;
}
