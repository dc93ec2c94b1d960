#pragma once

// Synthetic FMCW radar cube generation from point-scatterer scenes.
// Far-field, narrowband, no multipath. Range enters as a beat-frequency
// tone over fast time, azimuth as a uniform-linear-array steering phase;
// chirps are identical up to independent noise (no Doppler).

#include <random>

#include "radar/geometry.hpp"

namespace radar::sim {

struct Scatterer {
    double range = 0.0;      // m
    double azimuth = 0.0;    // rad
    double amplitude = 1.0;  // linear RCS amplitude
};

struct Scene {
    std::vector<OrientedBox> boxes;      // vehicles
    std::vector<Scatterer> clutter;
    uint64_t seed = 0;
    int scatterers_per_box_edge = 4;
};

inline void check_in_fov(double range, double azimuth, const RadarConfig& cfg,
                         const std::string& what) {
    if (!(range > 0.0) || range > cfg.max_range || std::abs(azimuth) > cfg.max_azimuth)
        throw std::invalid_argument(what + " outside field of view (range " +
                                    std::to_string(range) + " m, azimuth " +
                                    std::to_string(rad2deg(azimuth)) + " deg)");
}

/// Deterministic boundary scatterers: scatterers_per_box_edge per edge at
/// seeded jittered positions. Radar response concentrates on the
/// sensor-facing boundary, so amplitude is weighted by the cosine between
/// each edge's outward normal and the direction back to the sensor
/// (floored so occluded edges still return a weak response).
inline std::vector<Scatterer> scene_to_scatterers(const Scene& scene, const RadarConfig& cfg) {
    std::mt19937_64 rng(scene.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Scatterer> out;

    for (size_t bi = 0; bi < scene.boxes.size(); ++bi) {
        const auto& box = scene.boxes[bi];
        box.validate();
        const geom::ConvexPolygon poly = geom::box_to_polygon(box);
        for (const auto& v : poly.vertices)
            check_in_fov(std::hypot(v.x, v.y), std::atan2(v.y, v.x), cfg,
                         "scene box " + std::to_string(bi));
        const int per_edge = scene.scatterers_per_box_edge;
        for (size_t e = 0; e < 4; ++e) {
            const geom::Vec2 a = poly.vertices[e];
            const geom::Vec2 b = poly.vertices[(e + 1) % 4];
            const geom::Vec2 mid = 0.5 * (a + b);
            // Outward normal of a CCW polygon edge.
            geom::Vec2 nrm{b.y - a.y, -(b.x - a.x)};
            const double nlen = std::hypot(nrm.x, nrm.y);
            const double tolen = std::hypot(mid.x, mid.y);
            const double facing =
                (-mid.x * nrm.x - mid.y * nrm.y) / (nlen * tolen);  // cos(normal, to-sensor)
            const double weight = 0.4 + 0.6 * std::max(0.0, facing);
            for (int k = 0; k < per_edge; ++k) {
                const double t = (k + 0.25 + 0.5 * unit(rng)) / per_edge;
                const geom::Vec2 p = a + t * (b - a);
                Scatterer s;
                s.range = std::hypot(p.x, p.y);
                s.azimuth = std::atan2(p.y, p.x);
                s.amplitude = weight * (0.7 + 0.6 * unit(rng));
                out.push_back(s);
            }
        }
    }
    for (const auto& c : scene.clutter) {
        check_in_fov(c.range, c.azimuth, cfg, "clutter scatterer");
        out.push_back(c);
    }
    return out;
}

/// Raw cube for a scatterer list. Each scatterer contributes
///   amp * exp(i 2 pi k_r n / N_s) * exp(i 2 pi d k sin(azimuth))
/// per (chirp, antenna k, sample n), with k_r = range / range_resolution
/// cycles over the fast-time window so the range FFT peaks at bin
/// round(range / range_resolution). snr_db is the post-range-FFT per-bin
/// SNR of a unit-amplitude scatterer; nullopt disables noise entirely.
/// When noise is on, noise_floor_db in the config bounds it from below.
inline RadarCube simulate_cube(const std::vector<Scatterer>& scatterers,
                               const RadarConfig& cfg,
                               std::optional<double> snr_db,
                               uint64_t seed = 0) {
    cfg.validate();
    RadarCube cube(cfg);
    const int ns = cfg.num_samples, na = cfg.num_antennas, nc = cfg.num_chirps;

    // Signal is chirp-invariant: synthesize one chirp, replicate.
    std::vector<std::complex<float>> chirp(static_cast<size_t>(na) * ns, {0.0f, 0.0f});
    std::vector<std::complex<double>> tone(ns), steer(na);
    for (const auto& s : scatterers) {
        check_in_fov(s.range, s.azimuth, cfg, "scatterer");
        const double cycles = s.range / cfg.range_resolution;
        const std::complex<double> wt = std::polar(1.0, 2.0 * kPi * cycles / ns);
        const std::complex<double> wa =
            std::polar(1.0, 2.0 * kPi * cfg.antenna_spacing * std::sin(s.azimuth));
        tone[0] = s.amplitude;
        for (int n = 1; n < ns; ++n) tone[n] = tone[n - 1] * wt;
        steer[0] = 1.0;
        for (int k = 1; k < na; ++k) steer[k] = steer[k - 1] * wa;
        for (int k = 0; k < na; ++k) {
            const std::complex<double> g = steer[k];
            auto* row = &chirp[static_cast<size_t>(k) * ns];
            for (int n = 0; n < ns; ++n) row[n] += std::complex<float>(g * tone[n]);
        }
    }
    for (int c = 0; c < nc; ++c)
        std::copy(chirp.begin(), chirp.end(),
                  cube.data.begin() + static_cast<size_t>(c) * na * ns);

    if (snr_db) {
        const double noise_power = std::max(std::pow(10.0, cfg.noise_floor_db / 10.0),
                                            ns * std::pow(10.0, -*snr_db / 10.0));
        std::mt19937_64 rng(seed);
        std::normal_distribution<float> gauss(0.0f, std::sqrt(float(noise_power) / 2.0f));
        for (auto& v : cube.data) v += std::complex<float>(gauss(rng), gauss(rng));
    }
    return cube;
}

}  // namespace radar::sim
