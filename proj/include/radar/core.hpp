#pragma once

// Shared domain types for the radar BEV detection pipeline: radar
// configuration, raw cubes, polar/Cartesian intensity maps, and oriented
// bounding boxes. All geometry lives in metric BEV sensor coordinates
// (x forward, y left), angles in radians measured CCW from +x.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace radar {

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle to [-pi, pi).
inline double wrap_angle(double theta) {
    double x = std::fmod(theta + kPi, 2.0 * kPi);
    if (x < 0.0) x += 2.0 * kPi;
    return x - kPi;
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct RadarConfig {
    double max_range = 153.60;             // m
    double range_resolution = 0.15;        // m
    double max_azimuth = kPi / 2.0;        // rad, half-width
    double azimuth_resolution = deg2rad(3.7);
    double frame_rate = 50.0;              // Hz
    int num_antennas = 32;
    int num_samples = 2048;                // fast-time A/D samples per chirp
    int num_chirps = 16;                   // slow-time snapshots
    double antenna_spacing = 0.5;          // wavelengths
    double carrier_wavelength = 0.0039;    // m (77 GHz band)
    double noise_floor_db = -300.0;        // additive per-sample noise floor

    int num_range_bins() const {
        return static_cast<int>(std::lround(max_range / range_resolution));
    }

    void validate() const {
        const double bins = max_range / range_resolution;
        const double rounded = std::lround(bins);
        if (!(bins >= 1.0) || std::abs(bins - rounded) > 1e-6)
            throw std::invalid_argument("RadarConfig: max_range/range_resolution must be an integer >= 1");
        if (num_antennas < 2)
            throw std::invalid_argument("RadarConfig: num_antennas must be >= 2");
        if (!(antenna_spacing > 0.0) || antenna_spacing > 0.5)
            throw std::invalid_argument("RadarConfig: antenna_spacing must be in (0, 0.5] wavelengths");
        if (num_samples < 2 || num_chirps < 1)
            throw std::invalid_argument("RadarConfig: need num_samples >= 2 and num_chirps >= 1");
        if (!(max_azimuth > 0.0) || max_azimuth > kPi / 2.0 + 1e-12)
            throw std::invalid_argument("RadarConfig: max_azimuth must be in (0, pi/2]");
    }
};

/// Raw complex samples indexed (chirp, antenna, sample), row-major.
struct RadarCube {
    RadarConfig config;
    std::vector<std::complex<float>> data;

    RadarCube() = default;
    explicit RadarCube(const RadarConfig& cfg)
        : config(cfg),
          data(static_cast<size_t>(cfg.num_chirps) * cfg.num_antennas * cfg.num_samples) {}

    size_t index(int chirp, int antenna, int sample) const {
        return (static_cast<size_t>(chirp) * config.num_antennas + antenna) *
                   config.num_samples + sample;
    }
    std::complex<float>& at(int c, int a, int s) { return data[index(c, a, s)]; }
    const std::complex<float>& at(int c, int a, int s) const { return data[index(c, a, s)]; }
};

enum class MapFormat { fft, music };

/// Real range x azimuth intensity map. Azimuth bins are uniform in
/// sin(theta): bin a covers sin(theta) = -1 + 2*(a+0.5)/num_azimuth_bins,
/// the native output grid of uniform-linear-array beamforming.
struct PolarMap {
    int num_range_bins = 0;
    int num_azimuth_bins = 0;
    std::vector<float> values;             // (range_bin, azimuth_bin) row-major
    double range_extent = 0.0;             // m
    double azimuth_extent = kPi / 2.0;     // rad, half-width
    MapFormat format = MapFormat::fft;

    PolarMap() = default;
    PolarMap(int ranges, int azimuths, double rext, MapFormat fmt)
        : num_range_bins(ranges), num_azimuth_bins(azimuths),
          values(static_cast<size_t>(ranges) * azimuths, 0.0f),
          range_extent(rext), format(fmt) {}

    float& at(int r, int a) { return values[static_cast<size_t>(r) * num_azimuth_bins + a]; }
    const float& at(int r, int a) const {
        return values[static_cast<size_t>(r) * num_azimuth_bins + a];
    }

    double sin_azimuth_at(int a) const {
        return -1.0 + 2.0 * (a + 0.5) / num_azimuth_bins;
    }
    double azimuth_at(int a) const { return std::asin(sin_azimuth_at(a)); }
    double range_at(int r) const {
        return r * range_extent / num_range_bins;
    }
    // Fractional bin coordinates for interpolation.
    double range_to_bin(double range) const {
        return range / (range_extent / num_range_bins);
    }
    double azimuth_to_bin(double azimuth) const {
        return (std::sin(azimuth) + 1.0) * 0.5 * num_azimuth_bins - 0.5;
    }
};

/// Cartesian bird's-eye-view intensity grid. Row 0 is the far forward edge,
/// column 0 the leftmost (largest +y); the sensor sits at grid coordinates
/// (origin_row, origin_col) just outside the bottom edge.
struct BevImage {
    int rows = 0;
    int cols = 0;
    std::vector<float> values;
    double meters_per_pixel = 0.2;
    double extent_forward = 40.0;
    double extent_left = 40.0;
    double extent_right = 40.0;

    BevImage() = default;
    BevImage(double fwd, double left, double right, double mpp)
        : rows(static_cast<int>(std::ceil(fwd / mpp))),
          cols(static_cast<int>(std::ceil((left + right) / mpp))),
          values(static_cast<size_t>(rows) * cols, 0.0f),
          meters_per_pixel(mpp),
          extent_forward(fwd), extent_left(left), extent_right(right) {}

    float& at(int r, int c) { return values[static_cast<size_t>(r) * cols + c]; }
    const float& at(int r, int c) const { return values[static_cast<size_t>(r) * cols + c]; }

    double origin_row() const { return extent_forward / meters_per_pixel; }
    double origin_col() const { return extent_left / meters_per_pixel; }

    // Metric center of pixel (r, c) in the sensor frame.
    double pixel_x(int r) const { return extent_forward - (r + 0.5) * meters_per_pixel; }
    double pixel_y(int c) const { return extent_left - (c + 0.5) * meters_per_pixel; }
};

/// Oriented bounding box in the BEV sensor frame. h extends along the
/// heading theta, w across it. Variances, when present, follow the
/// regression parameter order (x_o, y_o, w_o, h_o, cos_o, sin_o).
struct OrientedBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 1.0;
    double h = 1.0;
    double theta = 0.0;
    std::optional<double> score;
    std::optional<std::array<double, 6>> variances;

    OrientedBox() = default;
    OrientedBox(double x, double y, double w_, double h_, double t,
                std::optional<double> s = std::nullopt)
        : cx(x), cy(y), w(w_), h(h_), theta(wrap_angle(t)), score(s) {}

    void validate() const {
        if (!(w > 0.0) || !(h > 0.0))
            throw std::invalid_argument("OrientedBox: w and h must be positive");
        if (score && (*score < 0.0 || *score > 1.0))
            throw std::invalid_argument("OrientedBox: score must lie in [0,1]");
    }
    double area() const { return w * h; }
};

/// Per-frame box collection; ground truth carries no scores.
struct DetectionSet {
    std::int64_t frame_id = 0;
    std::vector<OrientedBox> boxes;
};

using GroundTruthSet = DetectionSet;
using Frame = DetectionSet;

}  // namespace radar
