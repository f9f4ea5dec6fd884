#include "alert/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

namespace alert {

namespace {

const std::vector<std::string> kKnownKeys = {
    "sensor.width", "sensor.height",
    "grid.patch_w", "grid.patch_h", "grid.activation_threshold", "grid.activation_rate",
    "te.alpha", "te.f_hz", "te.phi", "te.enabled",
    "mlp.depth", "mlp.base_channels", "mlp.expansion", "mlp.out_channels", "mlp.rectify_last",
    "alert.lambda", "alert.n_threshold", "alert.k", "alert.counter_mode",
    "head.layers", "head.heads", "head.mlp_ratio", "head.num_classes", "head.use_class_token",
    "head.final_norm",
    "sample.mode", "sample.ne", "sample.delta_t_us",
    "readout.mode", "readout.delta_t_us", "readout.every_n",
    "gen.rate_hz", "gen.duration_us", "gen.blobs", "gen.class_id", "gen.num_classes",
    "gen.blob_sigma", "gen.speed_px_s", "gen.seed",
    "weights.seed",
    "eval.nva_window",
    "verify.trials", "verify.seed",
    "bench.events",
};

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    return s.substr(b, e - b + 1);
}

} // namespace

const std::vector<std::string>& Config::known_keys() {
    return kKnownKeys;
}

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open config file: " + path);
    Config cfg;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#')
            continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
        throw ConfigError("unknown config key \"" + key + "\"");
    values_[key] = value;
}

void Config::set_pair(const std::string& key_equals_value) {
    const size_t eq = key_equals_value.find('=');
    if (eq == std::string::npos)
        throw ConfigError("--set expects key=value, got \"" + key_equals_value + "\"");
    set(trim(key_equals_value.substr(0, eq)), trim(key_equals_value.substr(eq + 1)));
}

bool Config::has(const std::string& key) const {
    return values_.count(key) != 0;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

uint64_t Config::get_u64(const std::string& key, uint64_t fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    uint64_t v = 0;
    const auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc{} || p != it->second.data() + it->second.size())
        throw ConfigError("config key " + key + " is not an unsigned integer: " + it->second);
    return v;
}

double Config::get_f64(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size())
            throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + " is not a number: " + it->second);
    }
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end())
        return fallback;
    if (it->second == "true" || it->second == "1")
        return true;
    if (it->second == "false" || it->second == "0")
        return false;
    throw ConfigError("config key " + key + " is not a boolean: " + it->second);
}

GridConfig grid_config(const Config& cfg, uint16_t sensor_width, uint16_t sensor_height) {
    GridConfig grid;
    grid.sensor_width = sensor_width;
    grid.sensor_height = sensor_height;
    grid.patch_w = uint16_t(cfg.get_u64("grid.patch_w", 8));
    grid.patch_h = uint16_t(cfg.get_u64("grid.patch_h", 8));
    if (cfg.has("grid.activation_rate") && cfg.has("grid.activation_threshold"))
        throw ConfigError("set either grid.activation_threshold or grid.activation_rate");
    if (cfg.has("grid.activation_rate"))
        grid.activation_threshold = threshold_from_rate(grid, cfg.get_f64("grid.activation_rate", 0));
    else
        grid.activation_threshold = uint32_t(cfg.get_u64("grid.activation_threshold", 1));
    grid.validate();
    return grid;
}

TimeEncodingConfig te_config(const Config& cfg) {
    TimeEncodingConfig te;
    te.alpha = cfg.get_f64("te.alpha", 1.0);
    te.f_hz = cfg.get_f64("te.f_hz", 4.0);
    te.phi = cfg.get_f64("te.phi", 0.0);
    te.enabled = cfg.get_bool("te.enabled", true);
    te.validate();
    return te;
}

MlpConfig mlp_config(const Config& cfg) {
    MlpConfig mlp;
    mlp.depth = uint32_t(cfg.get_u64("mlp.depth", 2));
    mlp.base_channels = uint32_t(cfg.get_u64("mlp.base_channels", 12));
    mlp.expansion = cfg.get_f64("mlp.expansion", 2.0);
    mlp.out_channels = uint32_t(cfg.get_u64("mlp.out_channels", 128));
    mlp.rectify_last = cfg.get_bool("mlp.rectify_last", false);
    mlp.input_dim = fg_input_dim(te_config(cfg));
    mlp.validate();
    return mlp;
}

AlertConfig alert_config(const Config& cfg) {
    AlertConfig a;
    a.lambda = cfg.get_f64("alert.lambda", 0.1);
    a.n_threshold = uint32_t(cfg.get_u64("alert.n_threshold", 64));
    a.k = uint32_t(cfg.get_u64("alert.k", 1));
    // The readout gate mirrors the batch path's activation threshold.
    GridConfig grid = grid_config(cfg, 128, 128);
    a.activation_threshold = grid.activation_threshold;
    const std::string mode = cfg.get_str("alert.counter_mode", "global_step");
    if (mode == "global_step")
        a.counter_mode = CounterMode::kGlobalStep;
    else if (mode == "per_update")
        a.counter_mode = CounterMode::kPerUpdate;
    else
        throw ConfigError("alert.counter_mode must be global_step or per_update");
    a.validate();
    return a;
}

HeadConfig head_config(const Config& cfg) {
    HeadConfig head;
    head.layers = uint32_t(cfg.get_u64("head.layers", 2));
    head.heads = uint32_t(cfg.get_u64("head.heads", 4));
    head.token_width = uint32_t(cfg.get_u64("mlp.out_channels", 128));
    head.mlp_ratio = uint32_t(cfg.get_u64("head.mlp_ratio", 4));
    head.num_classes = uint32_t(cfg.get_u64("head.num_classes", 11));
    head.use_class_token = cfg.get_bool("head.use_class_token", true);
    head.final_norm = cfg.get_bool("head.final_norm", true);
    head.validate();
    return head;
}

SyntheticConfig synthetic_config(const Config& cfg) {
    SyntheticConfig gen;
    gen.sensor_width = uint16_t(cfg.get_u64("sensor.width", 128));
    gen.sensor_height = uint16_t(cfg.get_u64("sensor.height", 128));
    gen.rate_hz = cfg.get_u64("gen.rate_hz", 100000);
    gen.duration_us = cfg.get_u64("gen.duration_us", 100000);
    gen.blobs = uint32_t(cfg.get_u64("gen.blobs", 3));
    gen.class_id = uint32_t(cfg.get_u64("gen.class_id", 0));
    gen.num_classes = uint32_t(cfg.get_u64("gen.num_classes", 11));
    gen.blob_sigma_px = cfg.get_f64("gen.blob_sigma", 3.0);
    gen.speed_px_s = cfg.get_f64("gen.speed_px_s", 40.0);
    return gen;
}

ReadoutSchedule readout_schedule(const Config& cfg) {
    ReadoutSchedule sched;
    const std::string mode = cfg.get_str("readout.mode", "final");
    if (mode == "final") {
        sched.mode = ReadoutSchedule::Mode::kFinalOnly;
    } else if (mode == "time") {
        sched.mode = ReadoutSchedule::Mode::kEveryDeltaT;
        sched.delta_t_us = cfg.get_u64("readout.delta_t_us", 132000);
    } else if (mode == "count") {
        sched.mode = ReadoutSchedule::Mode::kEveryNEvents;
        sched.every_n = cfg.get_u64("readout.every_n", 8192);
    } else {
        throw ConfigError("readout.mode must be final, time or count");
    }
    return sched;
}

} // namespace alert
