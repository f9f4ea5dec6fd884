#include "alert/events.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "binary_io.hpp"

namespace alert {

namespace detail {

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open file: " + path);
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<uint8_t> bytes;
    bytes.resize(size_t(size));
    if (size > 0)
        in.read(reinterpret_cast<char*>(bytes.data()), size);
    if (!in)
        throw IoError("short read: " + path);
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out)
        throw IoError("short write: " + path);
}

} // namespace detail

namespace {

constexpr char kMagic[4] = {'E', 'V', 'T', '1'};
constexpr uint32_t kVersion = 1;
constexpr size_t kHeaderBytes = 20;
constexpr size_t kRecordBytes = 16;

void check_event(const Event& e, uint16_t width, uint16_t height, size_t index) {
    if (e.x >= width || e.y >= height)
        throw ValidationError("event " + std::to_string(index) + " out of sensor bounds: (" +
                              std::to_string(e.x) + "," + std::to_string(e.y) + ") vs " +
                              std::to_string(width) + "x" + std::to_string(height));
    if (e.p != 1 && e.p != -1)
        throw ValidationError("event " + std::to_string(index) +
                              " has invalid polarity " + std::to_string(int(e.p)));
}

EventStream read_binary(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() < kHeaderBytes)
        throw FormatError(path + ": truncated header (" + std::to_string(bytes.size()) +
                          " bytes, need " + std::to_string(kHeaderBytes) + ")");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(path + ": bad magic at byte 0");
    const uint32_t version = detail::get_u32(bytes.data() + 4);
    if (version != kVersion)
        throw FormatError(path + ": unsupported version " + std::to_string(version));

    EventStream stream;
    stream.header.sensor_width = detail::get_u16(bytes.data() + 8);
    stream.header.sensor_height = detail::get_u16(bytes.data() + 10);
    const uint64_t count = detail::get_u64(bytes.data() + 12);
    if (bytes.size() != kHeaderBytes + count * kRecordBytes)
        throw FormatError(path + ": payload size " + std::to_string(bytes.size() - kHeaderBytes) +
                          " does not match event_count " + std::to_string(count));

    stream.events.reserve(count);
    uint64_t prev_t = 0;
    for (uint64_t i = 0; i < count; ++i) {
        const uint8_t* rec = bytes.data() + kHeaderBytes + i * kRecordBytes;
        Event e;
        e.t = detail::get_u64(rec);
        e.x = detail::get_u16(rec + 8);
        e.y = detail::get_u16(rec + 10);
        e.p = int8_t(rec[12]);
        if (rec[13] != 0 || rec[14] != 0 || rec[15] != 0)
            throw FormatError(path + ": nonzero padding in record at byte offset " +
                              std::to_string(kHeaderBytes + i * kRecordBytes + 13));
        check_event(e, stream.header.sensor_width, stream.header.sensor_height, size_t(i));
        if (i > 0 && e.t < prev_t)
            throw OrderingError(path + ": timestamp regression at record " + std::to_string(i));
        prev_t = e.t;
        stream.events.push_back(e);
    }
    stream.header.event_count = count;
    stream.header.duration_us =
        stream.events.empty() ? 0 : stream.events.back().t - stream.events.front().t;
    return stream;
}

bool parse_sensor_comment(const std::string& line, uint16_t& w, uint16_t& h) {
    // "# sensor <w>x<h>"
    std::istringstream is(line);
    std::string hash, word;
    unsigned int pw = 0, ph = 0;
    char x = 0;
    is >> hash >> word >> pw >> x >> ph;
    if (hash != "#" || word != "sensor" || x != 'x' || !is)
        return false;
    w = uint16_t(pw);
    h = uint16_t(ph);
    return true;
}

EventStream read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open file: " + path);

    EventStream stream;
    bool sensor_declared = false;
    bool header_seen = false;
    std::string line;
    size_t line_no = 0;
    uint64_t prev_t = 0;
    uint16_t max_x = 0, max_y = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            uint16_t w = 0, h = 0;
            if (parse_sensor_comment(line, w, h)) {
                stream.header.sensor_width = w;
                stream.header.sensor_height = h;
                sensor_declared = true;
            }
            continue;
        }
        if (!header_seen) {
            if (line != "t,x,y,p")
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": expected header line \"t,x,y,p\"");
            header_seen = true;
            continue;
        }

        const char* ptr = line.data();
        const char* end = line.data() + line.size();
        auto field = [&](auto& value) {
            auto [next, ec] = std::from_chars(ptr, end, value);
            if (ec != std::errc{})
                throw FormatError(path + ":" + std::to_string(line_no) + ": malformed record");
            ptr = next;
        };
        auto comma = [&] {
            if (ptr == end || *ptr != ',')
                throw FormatError(path + ":" + std::to_string(line_no) + ": malformed record");
            ++ptr;
        };

        Event e;
        int p = 0;
        field(e.t);
        comma();
        field(e.x);
        comma();
        field(e.y);
        comma();
        field(p);
        if (ptr != end)
            throw FormatError(path + ":" + std::to_string(line_no) + ": trailing characters");
        if (p != 1 && p != -1)
            throw ValidationError(path + ":" + std::to_string(line_no) + ": invalid polarity " +
                                  std::to_string(p));
        e.p = int8_t(p);
        if (!stream.events.empty() && e.t < prev_t)
            throw OrderingError(path + ":" + std::to_string(line_no) + ": timestamp regression");
        prev_t = e.t;
        max_x = std::max(max_x, e.x);
        max_y = std::max(max_y, e.y);
        stream.events.push_back(e);
    }
    if (!sensor_declared && !stream.events.empty()) {
        // Legacy CSVs without the sensor comment: infer tight bounds.
        const uint32_t w = uint32_t(max_x) + 1;
        const uint32_t h = uint32_t(max_y) + 1;
        if (w > 0xffff || h > 0xffff)
            throw FormatError(path + ": coordinates exceed the representable sensor size");
        stream.header.sensor_width = uint16_t(w);
        stream.header.sensor_height = uint16_t(h);
    }
    for (size_t i = 0; i < stream.events.size(); ++i)
        check_event(stream.events[i], stream.header.sensor_width, stream.header.sensor_height, i);

    stream.header.event_count = stream.events.size();
    stream.header.duration_us =
        stream.events.empty() ? 0 : stream.events.back().t - stream.events.front().t;
    return stream;
}

void write_binary(const EventStream& stream, const std::string& path) {
    std::vector<uint8_t> bytes;
    bytes.reserve(kHeaderBytes + stream.events.size() * kRecordBytes);
    bytes.insert(bytes.end(), kMagic, kMagic + 4);
    detail::put_u32(bytes, kVersion);
    detail::put_u16(bytes, stream.header.sensor_width);
    detail::put_u16(bytes, stream.header.sensor_height);
    detail::put_u64(bytes, uint64_t(stream.events.size()));
    for (const Event& e : stream.events) {
        detail::put_u64(bytes, e.t);
        detail::put_u16(bytes, e.x);
        detail::put_u16(bytes, e.y);
        bytes.push_back(uint8_t(e.p));
        bytes.push_back(0);
        bytes.push_back(0);
        bytes.push_back(0);
    }
    detail::write_file_bytes(path, bytes);
}

void write_csv(const EventStream& stream, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw IoError("cannot open file for writing: " + path);
    out << "# sensor " << stream.header.sensor_width << "x" << stream.header.sensor_height
        << "\n";
    out << "t,x,y,p\n";
    for (const Event& e : stream.events)
        out << e.t << ',' << e.x << ',' << e.y << ',' << int(e.p) << '\n';
    if (!out)
        throw IoError("short write: " + path);
}

// Uniform in [0,1) and a Box-Muller gaussian, hand-rolled so streams are
// reproducible across standard library implementations.
double uniform01(std::mt19937_64& rng) {
    return double(rng() >> 11) * 0x1.0p-53;
}

double gaussian(std::mt19937_64& rng) {
    const double u1 = std::max(uniform01(rng), 1e-300);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double wrap_into(double v, double extent) {
    v = std::fmod(v, extent);
    if (v < 0)
        v += extent;
    return v;
}

} // namespace

StreamFormat format_from_path(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        return StreamFormat::kCsv;
    return StreamFormat::kBinary;
}

EventStream read_stream(const std::string& path, StreamFormat format) {
    return format == StreamFormat::kBinary ? read_binary(path) : read_csv(path);
}

void validate_stream(const EventStream& stream) {
    uint64_t prev_t = 0;
    for (size_t i = 0; i < stream.events.size(); ++i) {
        const Event& e = stream.events[i];
        check_event(e, stream.header.sensor_width, stream.header.sensor_height, i);
        if (i > 0 && e.t < prev_t)
            throw OrderingError("events not sorted by timestamp at index " + std::to_string(i));
        prev_t = e.t;
    }
}

void write_stream(const EventStream& stream, const std::string& path, StreamFormat format) {
    validate_stream(stream);
    if (format == StreamFormat::kBinary)
        write_binary(stream, path);
    else
        write_csv(stream, path);
}

EventStream generate_synthetic(const SyntheticConfig& cfg, uint64_t seed) {
    if (cfg.sensor_width == 0 || cfg.sensor_height == 0)
        throw ConfigError("sensor dimensions must be nonzero");
    if (cfg.rate_hz == 0)
        throw ConfigError("event rate must be nonzero");
    if (cfg.duration_us == 0)
        throw ConfigError("duration must be nonzero");
    if (cfg.blobs == 0)
        throw ConfigError("at least one blob required");
    if (cfg.num_classes == 0 || cfg.class_id >= cfg.num_classes)
        throw ConfigError("class_id must be < num_classes");

    const uint64_t count =
        uint64_t((__uint128_t(cfg.rate_hz) * cfg.duration_us) / 1000000u);
    if (count == 0)
        throw ConfigError("rate and duration yield zero events");

    std::mt19937_64 rng(seed);

    // Blob state draws do not depend on class_id, so two classes under the
    // same seed differ only in trajectory direction.
    struct Blob {
        double cx, cy, angle, speed;
    };
    std::vector<Blob> blobs(cfg.blobs);
    const double base_angle = 2.0 * M_PI * double(cfg.class_id) / double(cfg.num_classes);
    const double jitter_span = M_PI / (4.0 * double(cfg.num_classes));
    for (Blob& b : blobs) {
        b.cx = uniform01(rng) * cfg.sensor_width;
        b.cy = uniform01(rng) * cfg.sensor_height;
        b.angle = base_angle + (uniform01(rng) - 0.5) * jitter_span;
        b.speed = cfg.speed_px_s * (0.75 + 0.5 * uniform01(rng));
    }

    EventStream stream;
    stream.header.sensor_width = cfg.sensor_width;
    stream.header.sensor_height = cfg.sensor_height;
    stream.events.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        Event e;
        e.t = i * cfg.duration_us / count; // monotone by construction
        const Blob& b = blobs[rng() % cfg.blobs];
        const double t_s = double(e.t) * 1e-6;
        const double cx = wrap_into(b.cx + std::cos(b.angle) * b.speed * t_s, cfg.sensor_width);
        const double cy = wrap_into(b.cy + std::sin(b.angle) * b.speed * t_s, cfg.sensor_height);
        const double px = cx + gaussian(rng) * cfg.blob_sigma_px;
        const double py = cy + gaussian(rng) * cfg.blob_sigma_px;
        e.x = uint16_t(std::clamp<long>(std::lround(px), 0, long(cfg.sensor_width) - 1));
        e.y = uint16_t(std::clamp<long>(std::lround(py), 0, long(cfg.sensor_height) - 1));
        e.p = (rng() & 1) ? int8_t(1) : int8_t(-1);
        stream.events.push_back(e);
    }
    stream.header.event_count = count;
    stream.header.duration_us = stream.events.back().t - stream.events.front().t;
    return stream;
}

std::optional<Sample> sample_ccim(const EventStream& stream, uint64_t ne, size_t start_index) {
    if (ne == 0)
        throw ConfigError("constant-count window needs ne >= 1");
    if (start_index > stream.events.size() || stream.events.size() - start_index < ne)
        return std::nullopt; // exhausted: caller decides to pad or stop
    std::span<const Event> slice(stream.events.data() + start_index, size_t(ne));
    Sample s;
    s.window.mode = SampleMode::kConstantCount;
    s.window.ne = ne;
    s.window.start_index = start_index;
    s.window.start_time = slice.front().t;
    s.window.duration_us = slice.back().t - slice.front().t;
    s.events = slice;
    return s;
}

Sample sample_ctim(const EventStream& stream, uint64_t delta_t_us, uint64_t start_time) {
    if (delta_t_us == 0)
        throw ConfigError("constant-time window needs delta_t >= 1us");
    const auto by_time = [](const Event& e, uint64_t t) { return e.t < t; };
    const auto first =
        std::lower_bound(stream.events.begin(), stream.events.end(), start_time, by_time);
    const auto last =
        std::lower_bound(first, stream.events.end(), start_time + delta_t_us, by_time);
    Sample s;
    s.window.mode = SampleMode::kConstantTime;
    s.window.delta_t_us = delta_t_us;
    s.window.start_index = size_t(first - stream.events.begin());
    s.window.start_time = start_time;
    s.window.duration_us = delta_t_us;
    s.window.ne = uint64_t(last - first);
    s.events = std::span<const Event>(stream.events.data() + s.window.start_index,
                                      size_t(last - first));
    return s;
}

} // namespace alert
