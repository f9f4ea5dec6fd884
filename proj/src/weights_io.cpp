#include "alert/weights_io.hpp"

#include <cstring>

#include "binary_io.hpp"

namespace alert {

namespace {

constexpr char kMagic[4] = {'A', 'L', 'R', 'T'};
constexpr uint32_t kVersion = 1;

} // namespace

WeightArchive read_archive(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    size_t off = 0;
    auto need = [&](size_t n) {
        if (off + n > bytes.size())
            throw FormatError(path + ": truncated archive at byte " + std::to_string(off));
    };

    need(12);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(path + ": bad magic");
    const uint32_t version = detail::get_u32(bytes.data() + 4);
    if (version != kVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));
    const uint32_t tensor_count = detail::get_u32(bytes.data() + 8);
    off = 12;

    WeightArchive archive;
    for (uint32_t t = 0; t < tensor_count; ++t) {
        need(2);
        const uint16_t name_len = detail::get_u16(bytes.data() + off);
        off += 2;
        need(name_len);
        std::string name(reinterpret_cast<const char*>(bytes.data() + off), name_len);
        off += name_len;
        need(1);
        const uint8_t ndim = bytes[off];
        off += 1;

        Tensor tensor;
        tensor.dims.resize(ndim);
        size_t numel = 1;
        for (uint8_t d = 0; d < ndim; ++d) {
            need(4);
            tensor.dims[d] = detail::get_u32(bytes.data() + off);
            off += 4;
            numel *= tensor.dims[d];
        }
        if (ndim == 0)
            numel = 0;
        need(numel * 4);
        tensor.data.resize(numel);
        for (size_t i = 0; i < numel; ++i)
            tensor.data[i] = detail::get_f32(bytes.data() + off + i * 4);
        off += numel * 4;

        if (!archive.emplace(std::move(name), std::move(tensor)).second)
            throw FormatError(path + ": duplicate tensor name");
    }
    if (off != bytes.size())
        throw FormatError(path + ": " + std::to_string(bytes.size() - off) +
                          " trailing bytes after last tensor");
    return archive;
}

void write_archive(const WeightArchive& archive, const std::string& path) {
    std::vector<uint8_t> bytes;
    bytes.insert(bytes.end(), kMagic, kMagic + 4);
    detail::put_u32(bytes, kVersion);
    detail::put_u32(bytes, uint32_t(archive.size()));
    for (const auto& [name, tensor] : archive) {
        if (name.size() > 0xffff)
            throw ConfigError("tensor name too long: " + name);
        if (tensor.numel() != tensor.data.size())
            throw ConfigError("tensor " + name + " dims do not match payload size");
        detail::put_u16(bytes, uint16_t(name.size()));
        bytes.insert(bytes.end(), name.begin(), name.end());
        bytes.push_back(uint8_t(tensor.dims.size()));
        for (uint32_t d : tensor.dims)
            detail::put_u32(bytes, d);
        for (float v : tensor.data)
            detail::put_f32(bytes, v);
    }
    detail::write_file_bytes(path, bytes);
}

const Tensor& require_tensor(const WeightArchive& archive, const std::string& name) {
    const auto it = archive.find(name);
    if (it == archive.end())
        throw ConfigError("weight archive is missing tensor \"" + name + "\"");
    return it->second;
}

} // namespace alert
