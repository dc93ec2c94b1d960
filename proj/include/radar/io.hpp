#pragma once

// Portable file I/O: the RTD tensor container, 16-bit PGM rendering, and
// JSON/JSONL (de)serialization of configs, scenes, and detection sets.
//
// RTD container layout (little-endian):
//   bytes 0..3   magic "RTD1"
//   byte  4      dtype: 0 = f32, 1 = complex f32 interleaved (re, im)
//   byte  5      ndim
//   bytes 6..7   padding (zero)
//   then ndim u64 dims, then the row-major payload.

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "radar/core.hpp"

static_assert(std::endian::native == std::endian::little,
              "RTD I/O assumes a little-endian host");

namespace radar::io {

using json = nlohmann::ordered_json;

enum class RtdDtype : uint8_t { f32 = 0, c64 = 1 };

struct RtdTensor {
    RtdDtype dtype = RtdDtype::f32;
    std::vector<uint64_t> dims;
    std::vector<float> f32;                       // valid when dtype == f32
    std::vector<std::complex<float>> c64;         // valid when dtype == c64

    uint64_t element_count() const {
        uint64_t n = 1;
        for (uint64_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }
};

inline void write_tensor(const std::string& path, const RtdTensor& t) {
    for (uint64_t d : t.dims)
        if (d > (uint64_t(1) << 31))
            throw std::invalid_argument("write_tensor: dimension exceeds 2^31");
    const uint64_t n = t.element_count();
    if (t.dtype == RtdDtype::f32 && t.f32.size() != n)
        throw std::invalid_argument("write_tensor: f32 payload size mismatch");
    if (t.dtype == RtdDtype::c64 && t.c64.size() != n)
        throw std::invalid_argument("write_tensor: complex payload size mismatch");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_tensor: cannot open " + path);
    char header[8] = {'R', 'T', 'D', '1', 0, 0, 0, 0};
    header[4] = static_cast<char>(t.dtype);
    header[5] = static_cast<char>(t.dims.size());
    out.write(header, 8);
    out.write(reinterpret_cast<const char*>(t.dims.data()),
              static_cast<std::streamsize>(t.dims.size() * sizeof(uint64_t)));
    if (t.dtype == RtdDtype::f32)
        out.write(reinterpret_cast<const char*>(t.f32.data()),
                  static_cast<std::streamsize>(n * sizeof(float)));
    else
        out.write(reinterpret_cast<const char*>(t.c64.data()),
                  static_cast<std::streamsize>(n * 2 * sizeof(float)));
    if (!out) throw std::runtime_error("write_tensor: I/O failure on " + path);
}

inline RtdTensor read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_tensor: cannot open " + path);
    char header[8];
    in.read(header, 8);
    if (!in || std::memcmp(header, "RTD1", 4) != 0)
        throw std::runtime_error("read_tensor: bad magic in " + path);
    RtdTensor t;
    const uint8_t dtype = static_cast<uint8_t>(header[4]);
    if (dtype > 1) throw std::runtime_error("read_tensor: unknown dtype");
    t.dtype = static_cast<RtdDtype>(dtype);
    const int ndim = static_cast<uint8_t>(header[5]);
    t.dims.resize(ndim);
    in.read(reinterpret_cast<char*>(t.dims.data()),
            static_cast<std::streamsize>(ndim * sizeof(uint64_t)));
    for (uint64_t d : t.dims)
        if (d > (uint64_t(1) << 31))
            throw std::runtime_error("read_tensor: dimension exceeds 2^31");
    const uint64_t n = t.element_count();
    if (t.dtype == RtdDtype::f32) {
        t.f32.resize(n);
        in.read(reinterpret_cast<char*>(t.f32.data()),
                static_cast<std::streamsize>(n * sizeof(float)));
    } else {
        t.c64.resize(n);
        in.read(reinterpret_cast<char*>(t.c64.data()),
                static_cast<std::streamsize>(n * 2 * sizeof(float)));
    }
    if (!in) throw std::runtime_error("read_tensor: truncated file " + path);
    return t;
}

inline RtdTensor to_tensor(const RadarCube& cube) {
    RtdTensor t;
    t.dtype = RtdDtype::c64;
    t.dims = {static_cast<uint64_t>(cube.config.num_chirps),
              static_cast<uint64_t>(cube.config.num_antennas),
              static_cast<uint64_t>(cube.config.num_samples)};
    t.c64 = cube.data;
    return t;
}

inline RtdTensor to_tensor(const PolarMap& map) {
    RtdTensor t;
    t.dims = {static_cast<uint64_t>(map.num_range_bins),
              static_cast<uint64_t>(map.num_azimuth_bins)};
    t.f32 = map.values;
    return t;
}

inline RtdTensor to_tensor(const BevImage& bev) {
    RtdTensor t;
    t.dims = {static_cast<uint64_t>(bev.rows), static_cast<uint64_t>(bev.cols)};
    t.f32 = bev.values;
    return t;
}

// --- 16-bit PGM rendering -------------------------------------------------

/// Min-max normalize, apply out = 65535 * norm^gamma, write binary P5.
/// A constant image maps to all zeros.
inline void write_pgm(const std::string& path, const std::vector<float>& values,
                      int rows, int cols, double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("write_pgm: gamma must be > 0");
    if (rows <= 0 || cols <= 0 || values.empty())
        throw std::invalid_argument("write_pgm: empty image");
    float lo = values[0], hi = values[0];
    for (float v : values) { lo = std::min(lo, v); hi = std::max(hi, v); }
    const double span = (hi > lo) ? double(hi) - double(lo) : 1.0;

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("write_pgm: cannot open " + path);
    out << "P5\n" << cols << " " << rows << "\n65535\n";
    std::vector<unsigned char> buf(values.size() * 2);
    for (size_t i = 0; i < values.size(); ++i) {
        const double norm = (double(values[i]) - lo) / span;
        const auto pix = static_cast<uint16_t>(std::lround(65535.0 * std::pow(norm, gamma)));
        buf[2 * i] = static_cast<unsigned char>(pix >> 8);      // PGM is big-endian
        buf[2 * i + 1] = static_cast<unsigned char>(pix & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write_pgm: I/O failure on " + path);
}

inline void write_pgm(const std::string& path, const PolarMap& m, double gamma) {
    write_pgm(path, m.values, m.num_range_bins, m.num_azimuth_bins, gamma);
}
inline void write_pgm(const std::string& path, const BevImage& b, double gamma) {
    write_pgm(path, b.values, b.rows, b.cols, gamma);
}

// --- JSON -----------------------------------------------------------------

inline json box_to_json(const OrientedBox& b, std::int64_t frame_id) {
    json j{{"frame_id", frame_id}, {"cx", b.cx}, {"cy", b.cy},
           {"w", b.w}, {"h", b.h}, {"theta", b.theta}};
    if (b.score) j["score"] = *b.score;
    if (b.variances) j["variances"] = *b.variances;
    return j;
}

inline double require_number(const json& j, const std::string& key, const std::string& ctx) {
    if (!j.contains(key) || !j[key].is_number())
        throw std::runtime_error(ctx + "." + key + ": expected number");
    return j[key].get<double>();
}

inline OrientedBox box_from_json(const json& j, const std::string& ctx) {
    OrientedBox b;
    b.cx = require_number(j, "cx", ctx);
    b.cy = require_number(j, "cy", ctx);
    b.w = require_number(j, "w", ctx);
    b.h = require_number(j, "h", ctx);
    b.theta = wrap_angle(require_number(j, "theta", ctx));
    if (j.contains("score")) b.score = j["score"].get<double>();
    if (j.contains("variances")) {
        auto v = j["variances"].get<std::vector<double>>();
        if (v.size() != 6) throw std::runtime_error(ctx + ".variances: expected 6 values");
        std::array<double, 6> a{};
        std::copy(v.begin(), v.end(), a.begin());
        b.variances = a;
    }
    b.validate();
    return b;
}

/// One detection record per line: {frame_id, cx, cy, w, h, theta, score?, variances?}.
inline void write_detections_jsonl(const std::string& path,
                                   const std::vector<DetectionSet>& sets) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path);
    for (const auto& s : sets)
        for (const auto& b : s.boxes) out << box_to_json(b, s.frame_id).dump() << "\n";
    if (!out) throw std::runtime_error("I/O failure on " + path);
}

/// Reads a JSONL detection file, grouping records by frame id (order of
/// first appearance preserved). Frames with no boxes do not appear.
inline std::vector<DetectionSet> read_detections_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<DetectionSet> sets;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        const std::string ctx = path + ":" + std::to_string(lineno);
        if (!j.contains("frame_id") || !j["frame_id"].is_number_integer())
            throw std::runtime_error(ctx + ".frame_id: expected integer");
        const std::int64_t fid = j["frame_id"].get<std::int64_t>();
        auto it = std::find_if(sets.begin(), sets.end(),
                               [fid](const DetectionSet& s) { return s.frame_id == fid; });
        if (it == sets.end()) {
            sets.push_back({fid, {}});
            it = sets.end() - 1;
        }
        it->boxes.push_back(box_from_json(j, ctx));
    }
    return sets;
}

inline json config_to_json(const RadarConfig& c) {
    return json{{"max_range", c.max_range},
                {"range_resolution", c.range_resolution},
                {"max_azimuth_deg", rad2deg(c.max_azimuth)},
                {"azimuth_resolution_deg", rad2deg(c.azimuth_resolution)},
                {"frame_rate", c.frame_rate},
                {"num_antennas", c.num_antennas},
                {"num_samples", c.num_samples},
                {"num_chirps", c.num_chirps},
                {"antenna_spacing", c.antenna_spacing},
                {"carrier_wavelength", c.carrier_wavelength},
                {"noise_floor_db", c.noise_floor_db}};
}

inline RadarConfig config_from_json(const json& j) {
    RadarConfig c;  // defaults, overridden field by field
    auto num = [&](const char* key, double& dst) {
        if (j.contains(key)) {
            if (!j[key].is_number()) throw std::runtime_error(std::string("config.") + key + ": expected number");
            dst = j[key].get<double>();
        }
    };
    auto cnt = [&](const char* key, int& dst) {
        if (j.contains(key)) {
            if (!j[key].is_number_integer()) throw std::runtime_error(std::string("config.") + key + ": expected integer");
            dst = j[key].get<int>();
        }
    };
    num("max_range", c.max_range);
    num("range_resolution", c.range_resolution);
    if (j.contains("max_azimuth_deg")) c.max_azimuth = deg2rad(j["max_azimuth_deg"].get<double>());
    if (j.contains("azimuth_resolution_deg"))
        c.azimuth_resolution = deg2rad(j["azimuth_resolution_deg"].get<double>());
    num("frame_rate", c.frame_rate);
    cnt("num_antennas", c.num_antennas);
    cnt("num_samples", c.num_samples);
    cnt("num_chirps", c.num_chirps);
    num("antenna_spacing", c.antenna_spacing);
    num("carrier_wavelength", c.carrier_wavelength);
    num("noise_floor_db", c.noise_floor_db);
    c.validate();
    return c;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

/// Write-to-temp-then-rename so partially written artifacts never appear
/// under the final name.
inline void atomic_write_text(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp);
        out << text;
        if (!out) throw std::runtime_error("I/O failure on " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace radar::io
