#pragma once

// Pipeline plumbing shared by the CLI and the end-to-end tests: scene JSON,
// map-geometry sidecar metadata, the synthetic benchmark generator, and the
// four-format (data-fft / img-fft / data-music / img-music) runner.

#include <chrono>

#include "radar/autolabel.hpp"
#include "radar/dsp.hpp"
#include "radar/eval.hpp"
#include "radar/io.hpp"
#include "radar/parallel.hpp"
#include "radar/sim.hpp"

namespace radar::pipeline {

using io::json;

// --- scene JSON -------------------------------------------------------------

inline sim::Scene scene_from_json(const json& j) {
    sim::Scene scene;
    if (j.contains("seed")) {
        if (!j["seed"].is_number_integer()) throw std::runtime_error("scene.seed: expected integer");
        scene.seed = j["seed"].get<uint64_t>();
    }
    if (j.contains("scatterers_per_box_edge")) {
        if (!j["scatterers_per_box_edge"].is_number_integer() ||
            j["scatterers_per_box_edge"].get<int>() < 1)
            throw std::runtime_error("scene.scatterers_per_box_edge: expected positive integer");
        scene.scatterers_per_box_edge = j["scatterers_per_box_edge"].get<int>();
    }
    if (j.contains("boxes")) {
        if (!j["boxes"].is_array()) throw std::runtime_error("scene.boxes: expected array");
        int i = 0;
        for (const auto& b : j["boxes"])
            scene.boxes.push_back(io::box_from_json(b, "scene.boxes[" + std::to_string(i++) + "]"));
    }
    if (j.contains("clutter")) {
        if (!j["clutter"].is_array()) throw std::runtime_error("scene.clutter: expected array");
        int i = 0;
        for (const auto& c : j["clutter"]) {
            const std::string ctx = "scene.clutter[" + std::to_string(i++) + "]";
            sim::Scatterer s;
            s.range = io::require_number(c, "range", ctx);
            s.azimuth = io::require_number(c, "azimuth", ctx);
            if (c.contains("amplitude")) s.amplitude = io::require_number(c, "amplitude", ctx);
            scene.clutter.push_back(s);
        }
    }
    return scene;
}

inline json scene_to_json(const sim::Scene& scene) {
    json j;
    j["seed"] = scene.seed;
    j["scatterers_per_box_edge"] = scene.scatterers_per_box_edge;
    j["boxes"] = json::array();
    for (const auto& b : scene.boxes) {
        json jb{{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}, {"theta", b.theta}};
        j["boxes"].push_back(jb);
    }
    j["clutter"] = json::array();
    for (const auto& c : scene.clutter)
        j["clutter"].push_back(json{{"range", c.range}, {"azimuth", c.azimuth},
                                    {"amplitude", c.amplitude}});
    return j;
}

// --- map geometry sidecars ---------------------------------------------------
//
// RTD tensors carry shape only; the spatial interpretation travels in a
// small sidecar JSON next to the tensor (<path>.meta.json).

inline std::string meta_path(const std::string& tensor_path) {
    return tensor_path + ".meta.json";
}

inline void write_polar_meta(const std::string& tensor_path, const PolarMap& map) {
    json j{{"kind", "polar"},
           {"format", map.format == MapFormat::music ? "music" : "fft"},
           {"range_extent", map.range_extent},
           {"azimuth_extent", map.azimuth_extent}};
    io::atomic_write_text(meta_path(tensor_path), j.dump(2) + "\n");
}

inline void write_bev_meta(const std::string& tensor_path, const BevImage& bev,
                           MapFormat format) {
    json j{{"kind", "bev"},
           {"format", format == MapFormat::music ? "music" : "fft"},
           {"meters_per_pixel", bev.meters_per_pixel},
           {"extent_forward", bev.extent_forward},
           {"extent_left", bev.extent_left},
           {"extent_right", bev.extent_right}};
    io::atomic_write_text(meta_path(tensor_path), j.dump(2) + "\n");
}

inline PolarMap read_polar_tensor(const std::string& tensor_path) {
    const auto t = io::read_tensor(tensor_path);
    if (t.dtype != io::RtdDtype::f32 || t.dims.size() != 2)
        throw std::runtime_error(tensor_path + ": expected a 2D f32 map tensor");
    const auto meta = io::load_json_file(meta_path(tensor_path));
    if (meta.value("kind", "") != "polar")
        throw std::runtime_error(meta_path(tensor_path) + ": kind: expected \"polar\"");
    PolarMap map(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                 io::require_number(meta, "range_extent", "meta"),
                 meta.value("format", "fft") == "music" ? MapFormat::music : MapFormat::fft);
    map.azimuth_extent = io::require_number(meta, "azimuth_extent", "meta");
    map.values = t.f32;
    return map;
}

inline BevImage read_bev_tensor(const std::string& tensor_path) {
    const auto t = io::read_tensor(tensor_path);
    if (t.dtype != io::RtdDtype::f32 || t.dims.size() != 2)
        throw std::runtime_error(tensor_path + ": expected a 2D f32 image tensor");
    const auto meta = io::load_json_file(meta_path(tensor_path));
    const std::string kind = meta.value("kind", "");
    if (kind != "bev")
        throw std::runtime_error(meta_path(tensor_path) + ": kind: expected \"bev\", got \"" +
                                 kind + "\" (polar maps are not valid detector input)");
    BevImage bev;
    bev.rows = static_cast<int>(t.dims[0]);
    bev.cols = static_cast<int>(t.dims[1]);
    bev.meters_per_pixel = io::require_number(meta, "meters_per_pixel", "meta");
    bev.extent_forward = io::require_number(meta, "extent_forward", "meta");
    bev.extent_left = io::require_number(meta, "extent_left", "meta");
    bev.extent_right = io::require_number(meta, "extent_right", "meta");
    bev.values = t.f32;
    return bev;
}

inline RadarCube read_cube_tensor(const std::string& tensor_path, const RadarConfig& cfg) {
    const auto t = io::read_tensor(tensor_path);
    if (t.dtype != io::RtdDtype::c64 || t.dims.size() != 3)
        throw std::runtime_error(tensor_path + ": expected a 3D complex cube tensor");
    RadarCube cube(cfg);
    if (t.dims[0] != uint64_t(cfg.num_chirps) || t.dims[1] != uint64_t(cfg.num_antennas) ||
        t.dims[2] != uint64_t(cfg.num_samples))
        throw std::runtime_error(tensor_path + ": cube shape does not match the config");
    cube.data = t.c64;
    return cube;
}

// --- synthetic benchmark -----------------------------------------------------

struct BenchmarkParams {
    int num_frames = 50;
    double snr_db = 20.0;
    double min_range = 8.0, max_range = 28.0;
    double max_azimuth = deg2rad(60.0);
    double min_separation = 8.0;  // m between vehicle centers
    int min_vehicles = 1, max_vehicles = 4;
    int scatterers_per_edge = 10;  // dense outlines keep CFAR blobs contiguous
};

inline uint64_t frame_seed(uint64_t seed, std::int64_t frame) {
    // splitmix64 over (seed, frame) so frames are independent streams.
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (uint64_t(frame) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// One benchmark frame: 1-4 vehicles at well-separated poses inside the
/// field of view. Fully determined by (seed, frame_id).
inline sim::Scene make_benchmark_scene(uint64_t seed, std::int64_t frame,
                                       const BenchmarkParams& p = {}) {
    std::mt19937_64 rng(frame_seed(seed, frame));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    sim::Scene scene;
    scene.seed = frame_seed(seed, frame) ^ 0x5851f42d4c957f2dull;
    scene.scatterers_per_box_edge = p.scatterers_per_edge;
    const int count = p.min_vehicles +
                      static_cast<int>(u(rng) * (p.max_vehicles - p.min_vehicles + 1));
    for (int placed = 0; placed < count;) {
        bool ok = false;
        for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
            const double range = p.min_range + u(rng) * (p.max_range - p.min_range);
            const double az = (2.0 * u(rng) - 1.0) * p.max_azimuth;
            const double cx = range * std::cos(az), cy = range * std::sin(az);
            ok = true;
            for (const auto& b : scene.boxes)
                if (std::hypot(b.cx - cx, b.cy - cy) < p.min_separation) { ok = false; break; }
            if (!ok) continue;
            const double w = 1.7 + 0.3 * u(rng);
            const double h = 4.2 + 0.8 * u(rng);
            scene.boxes.push_back(OrientedBox(cx, cy, w, h, u(rng) * kPi));
        }
        if (!ok) break;  // crowded draw; keep the frames we could place
        ++placed;
    }
    return scene;
}

// --- four-format detection ----------------------------------------------------

inline const std::array<std::string, 4>& format_names() {
    static const std::array<std::string, 4> names{"data-fft", "img-fft", "data-music",
                                                  "img-music"};
    return names;
}

struct DetectorParams {
    dsp::CfarParams bev_cfar{6, 6, 1e-3};
    dsp::CfarParams polar_cfar{10, 8, 1e-3};
    double confidence = 0.5;
    double nms_iou = 0.0001;
};

/// Confidence gate + near-duplicate NMS applied to every detector output.
inline DetectionSet postprocess(const DetectionSet& dets, const DetectorParams& p) {
    DetectionSet kept{dets.frame_id, {}};
    for (const auto& b : dets.boxes)
        if (b.score.value_or(0.0) >= p.confidence) kept.boxes.push_back(b);
    return geom::nms(kept, p.nms_iou);
}

struct FrameProducts {
    PolarMap polar_fft, polar_music;
    BevImage bev_fft, bev_music;
};

inline FrameProducts process_frame(const RadarCube& cube,
                                   const dsp::MusicParams& music = {},
                                   const dsp::BevParams& bev = {}) {
    FrameProducts out;
    out.polar_fft = dsp::range_azimuth_fft(cube);
    out.polar_music = dsp::music_map(cube, music, 1);
    out.bev_fft = dsp::polar_to_cartesian(out.polar_fft, bev);
    out.bev_music = dsp::polar_to_cartesian(out.polar_music, bev);
    return out;
}

/// Detections for all four formats of one frame, postprocessed.
inline std::array<DetectionSet, 4> detect_all_formats(const FrameProducts& prod,
                                                      std::int64_t frame_id,
                                                      const DetectorParams& p = {}) {
    std::array<DetectionSet, 4> out;
    out[0] = postprocess(dsp::detect_boxes_polar(prod.polar_fft, p.polar_cfar, frame_id), p);
    out[1] = postprocess(dsp::baseline_detect_boxes(prod.bev_fft, p.bev_cfar, frame_id), p);
    out[2] = postprocess(dsp::detect_boxes_polar(prod.polar_music, p.polar_cfar, frame_id), p);
    out[3] = postprocess(dsp::baseline_detect_boxes(prod.bev_music, p.bev_cfar, frame_id), p);
    return out;
}

// --- end-to-end benchmark run --------------------------------------------------

struct DemoResult {
    eval::ApTable table;
    std::vector<GroundTruthSet> gts;
    std::array<std::vector<DetectionSet>, 4> dets;
    double seconds = 0.0;
};

inline DemoResult run_demo(uint64_t seed, const RadarConfig& cfg,
                           const BenchmarkParams& bench = {},
                           const DetectorParams& det = {}, int workers = 0) {
    const auto t0 = std::chrono::steady_clock::now();
    const int nf = bench.num_frames;
    DemoResult result;
    result.gts.resize(nf);
    for (auto& d : result.dets) d.resize(nf);

    parallel_for(nf, workers, [&](int f) {
        const sim::Scene scene = make_benchmark_scene(seed, f, bench);
        const auto scatterers = sim::scene_to_scatterers(scene, cfg);
        const RadarCube cube =
            sim::simulate_cube(scatterers, cfg, bench.snr_db, frame_seed(seed, f) + 1);
        const FrameProducts prod = process_frame(cube);
        const auto dets = detect_all_formats(prod, f, det);
        result.gts[f] = {f, scene.boxes};
        for (int k = 0; k < 4; ++k) result.dets[k][f] = dets[k];
    });

    std::vector<std::pair<std::string, std::vector<DetectionSet>>> rows;
    for (int k = 0; k < 4; ++k) rows.emplace_back(format_names()[k], result.dets[k]);
    result.table = eval::evaluate_formats(rows, result.gts);
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace radar::pipeline
