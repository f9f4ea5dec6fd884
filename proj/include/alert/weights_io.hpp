#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "alert/error.hpp"

namespace alert {

struct Tensor {
    std::vector<uint32_t> dims;
    std::vector<float> data; // row-major f32

    size_t numel() const {
        size_t n = 1;
        for (uint32_t d : dims)
            n *= d;
        return dims.empty() ? 0 : n;
    }
};

/// Named tensor store holding feature-generator, positional-embedding and
/// transformer weights (and debug state dumps).
using WeightArchive = std::map<std::string, Tensor>;

WeightArchive read_archive(const std::string& path);
void write_archive(const WeightArchive& archive, const std::string& path);

/// Lookup that names the missing tensor instead of silently defaulting.
const Tensor& require_tensor(const WeightArchive& archive, const std::string& name);

} // namespace alert
