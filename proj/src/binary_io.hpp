#pragma once

// Little-endian packing helpers shared by the event container and the weight
// archive. Explicit byte shuffling keeps the on-disk formats host-independent.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace alert::detail {

inline void put_u16(std::vector<uint8_t>& buf, uint16_t v) {
    buf.push_back(uint8_t(v & 0xff));
    buf.push_back(uint8_t(v >> 8));
}

inline void put_u32(std::vector<uint8_t>& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i)
        buf.push_back(uint8_t((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::vector<uint8_t>& buf, uint64_t v) {
    for (int i = 0; i < 8; ++i)
        buf.push_back(uint8_t((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::vector<uint8_t>& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

inline uint16_t get_u16(const uint8_t* p) {
    return uint16_t(p[0] | (uint16_t(p[1]) << 8));
}

inline uint32_t get_u32(const uint8_t* p) {
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= uint32_t(p[i]) << (8 * i);
    return v;
}

inline uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= uint64_t(p[i]) << (8 * i);
    return v;
}

inline float get_f32(const uint8_t* p) {
    uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

} // namespace alert::detail
