#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "alert/alert_state.hpp"
#include "alert/head.hpp"

namespace alert {

/// Flat key=value configuration with a fixed schema; unknown keys are usage
/// errors so sweeps cannot silently misspell a knob.
class Config {
public:
    static Config from_file(const std::string& path);

    /// Known-key check plus assignment; `key=value` syntax for --set.
    void set(const std::string& key, const std::string& value);
    void set_pair(const std::string& key_equals_value);

    bool has(const std::string& key) const;
    std::string get_str(const std::string& key, const std::string& fallback) const;
    uint64_t get_u64(const std::string& key, uint64_t fallback) const;
    double get_f64(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    static const std::vector<std::string>& known_keys();

private:
    std::map<std::string, std::string> values_;
};

// Typed views over the flat store.
GridConfig grid_config(const Config& cfg, uint16_t sensor_width, uint16_t sensor_height);
TimeEncodingConfig te_config(const Config& cfg);
MlpConfig mlp_config(const Config& cfg);
AlertConfig alert_config(const Config& cfg);
HeadConfig head_config(const Config& cfg);
SyntheticConfig synthetic_config(const Config& cfg);
ReadoutSchedule readout_schedule(const Config& cfg);

} // namespace alert
