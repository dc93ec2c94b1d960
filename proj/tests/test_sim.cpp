#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <unsupported/Eigen/FFT>

#include "radar/sim.hpp"

using namespace radar;

namespace {

RadarConfig small_config() {
    RadarConfig cfg;
    cfg.max_range = 38.4;
    cfg.range_resolution = 0.15;
    cfg.num_samples = 512;
    cfg.num_chirps = 4;
    cfg.num_antennas = 8;
    return cfg;
}

// Plain unwindowed range DFT of one (chirp, antenna) line, orthonormal scale.
std::vector<std::complex<double>> range_dft(const RadarCube& cube, int chirp, int antenna) {
    const int ns = cube.config.num_samples;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> in(ns), out(ns);
    for (int n = 0; n < ns; ++n) in[n] = cube.at(chirp, antenna, n);
    fft.fwd(out, in);
    for (auto& v : out) v /= std::sqrt(double(ns));
    return out;
}

}  // namespace

TEST_CASE("scene scatterer generation") {
    const RadarConfig cfg = small_config();
    sim::Scene scene;
    scene.boxes.push_back(OrientedBox(15, 2, 1.8, 4.6, 0.3));
    scene.seed = 5;

    SECTION("exactly per-edge scatterers per edge, all on the boundary") {
        const auto sc = sim::scene_to_scatterers(scene, cfg);
        REQUIRE(sc.size() == 16);
        const auto poly = geom::box_to_polygon(scene.boxes[0]);
        for (const auto& s : sc) {
            const double x = s.range * std::cos(s.azimuth);
            const double y = s.range * std::sin(s.azimuth);
            // Distance to the nearest box edge.
            double dmin = 1e9;
            for (int e = 0; e < 4; ++e) {
                const auto a = poly.vertices[e], b = poly.vertices[(e + 1) % 4];
                const auto ab = b - a;
                const double len2 = ab.x * ab.x + ab.y * ab.y;
                const double t = std::clamp(((x - a.x) * ab.x + (y - a.y) * ab.y) / len2, 0.0, 1.0);
                dmin = std::min(dmin, std::hypot(x - (a.x + t * ab.x), y - (a.y + t * ab.y)));
            }
            CHECK(dmin <= 1e-9);
            CHECK(s.amplitude > 0.0);
        }
    }
    SECTION("deterministic in the seed") {
        const auto a = sim::scene_to_scatterers(scene, cfg);
        const auto b = sim::scene_to_scatterers(scene, cfg);
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].range == b[i].range);
            CHECK(a[i].azimuth == b[i].azimuth);
            CHECK(a[i].amplitude == b[i].amplitude);
        }
        sim::Scene other = scene;
        other.seed = 6;
        const auto c = sim::scene_to_scatterers(other, cfg);
        bool any_diff = false;
        for (size_t i = 0; i < a.size(); ++i)
            if (a[i].range != c[i].range) any_diff = true;
        CHECK(any_diff);
    }
    SECTION("sensor-facing edges carry more amplitude") {
        // Broadside box straight ahead: near edge faces the sensor.
        sim::Scene s2;
        s2.boxes.push_back(OrientedBox(20, 0, 2, 4, kPi / 2));
        const auto sc = sim::scene_to_scatterers(s2, cfg);
        double near_amp = 0.0, far_amp = 0.0;
        for (const auto& s : sc) {
            const double x = s.range * std::cos(s.azimuth);
            if (std::abs(x - 19.0) < 0.1) near_amp += s.amplitude;
            if (std::abs(x - 21.0) < 0.1) far_amp += s.amplitude;
        }
        CHECK(near_amp > 2.0 * far_amp);
    }
    SECTION("clutter passes through unchanged") {
        sim::Scene s2;
        s2.clutter.push_back({12.0, 0.1, 0.5});
        const auto sc = sim::scene_to_scatterers(s2, cfg);
        REQUIRE(sc.size() == 1);
        CHECK(sc[0].range == 12.0);
        CHECK(sc[0].amplitude == 0.5);
    }
    SECTION("out-of-view boxes and clutter are rejected") {
        sim::Scene bad;
        bad.boxes.push_back(OrientedBox(cfg.max_range + 5, 0, 2, 4, 0));
        CHECK_THROWS_WITH(sim::scene_to_scatterers(bad, cfg),
                          Catch::Matchers::ContainsSubstring("outside field of view"));
        sim::Scene bad2;
        bad2.clutter.push_back({-1.0, 0.0, 1.0});
        CHECK_THROWS_AS(sim::scene_to_scatterers(bad2, cfg), std::invalid_argument);
    }
}

TEST_CASE("cube synthesis") {
    const RadarConfig cfg = small_config();

    SECTION("no scatterers, no noise: all zeros") {
        const auto cube = sim::simulate_cube({}, cfg, std::nullopt);
        for (const auto& v : cube.data) {
            CHECK(v.real() == 0.0f);
            CHECK(v.imag() == 0.0f);
        }
    }
    SECTION("noise-free cubes are bit-identical across calls") {
        const std::vector<sim::Scatterer> sc{{15.0, 0.2, 1.0}, {30.0, -0.5, 0.7}};
        const auto a = sim::simulate_cube(sc, cfg, std::nullopt);
        const auto b = sim::simulate_cube(sc, cfg, std::nullopt);
        CHECK(std::memcmp(a.data.data(), b.data.data(),
                          a.data.size() * sizeof(a.data[0])) == 0);
    }
    SECTION("range tone peaks at the expected bin") {
        // 15.0 m at 0.15 m resolution: bin 100.
        const auto cube = sim::simulate_cube({{15.0, 0.0, 1.0}}, cfg, std::nullopt);
        const auto spec = range_dft(cube, 0, 0);
        int arg = 0;
        for (int i = 1; i < cfg.num_samples / 2; ++i)
            if (std::abs(spec[i]) > std::abs(spec[arg])) arg = i;
        CHECK(arg == 100);
        // Exact integer bin with no window: all energy in one coefficient.
        CHECK(std::abs(spec[100]) == Catch::Approx(std::sqrt(double(cfg.num_samples))).epsilon(1e-4));
        CHECK(std::abs(spec[99]) <= 1e-3);
    }
    SECTION("zero azimuth drives all antennas identically") {
        const auto cube = sim::simulate_cube({{10.05, 0.0, 1.0}}, cfg, std::nullopt);
        for (int k = 1; k < cfg.num_antennas; ++k)
            for (int n = 0; n < 8; ++n)
                CHECK(cube.at(0, k, n) == cube.at(0, 0, n));
    }
    SECTION("steering phase matches the array model") {
        const double az = 0.4;
        const auto cube = sim::simulate_cube({{10.05, az, 1.0}}, cfg, std::nullopt);
        const std::complex<double> expect =
            std::polar(1.0, 2.0 * kPi * cfg.antenna_spacing * 3 * std::sin(az));
        const std::complex<double> got =
            std::complex<double>(cube.at(0, 3, 0)) / std::complex<double>(cube.at(0, 0, 0));
        CHECK(std::abs(got - expect) <= 1e-5);
        CHECK(std::abs(std::abs(got) - 1.0) <= 1e-5);
    }
    SECTION("chirps replicate the same signal when noise is off") {
        const auto cube = sim::simulate_cube({{20.0, 0.3, 1.0}}, cfg, std::nullopt);
        for (int c = 1; c < cfg.num_chirps; ++c)
            for (int n = 0; n < 16; ++n)
                CHECK(cube.at(c, 2, n) == cube.at(0, 2, n));
    }
    SECTION("superposition: cube of two scatterers is the sum of singles") {
        const sim::Scatterer s1{12.0, 0.2, 0.8}, s2{25.5, -0.4, 1.3};
        const auto both = sim::simulate_cube({s1, s2}, cfg, std::nullopt);
        const auto a = sim::simulate_cube({s1}, cfg, std::nullopt);
        const auto b = sim::simulate_cube({s2}, cfg, std::nullopt);
        for (size_t i = 0; i < both.data.size(); i += 37) {
            const auto sum = std::complex<double>(a.data[i]) + std::complex<double>(b.data[i]);
            CHECK(std::abs(std::complex<double>(both.data[i]) - sum) <= 1e-5);
        }
    }
    SECTION("noise seed determinism and independence") {
        const auto a = sim::simulate_cube({}, cfg, 20.0, 1);
        const auto b = sim::simulate_cube({}, cfg, 20.0, 1);
        const auto c = sim::simulate_cube({}, cfg, 20.0, 2);
        CHECK(std::memcmp(a.data.data(), b.data.data(),
                          a.data.size() * sizeof(a.data[0])) == 0);
        bool diff = false;
        for (size_t i = 0; i < a.data.size(); ++i)
            if (a.data[i] != c.data[i]) { diff = true; break; }
        CHECK(diff);
    }
    SECTION("snr calibration at the range-fft output") {
        // Unit scatterer on an exact bin center. Post-FFT peak power should
        // exceed the mean background by ~snr_db.
        const double snr_db = 20.0;
        double peak_db_sum = 0.0;
        const int trials = 20;
        for (int t = 0; t < trials; ++t) {
            const auto cube = sim::simulate_cube({{15.0, 0.0, 1.0}}, cfg, snr_db, 100 + t);
            const auto spec = range_dft(cube, 0, 0);
            double noise = 0.0;
            int cnt = 0;
            for (int i = 0; i < cfg.num_samples / 2; ++i) {
                if (std::abs(i - 100) < 8) continue;
                noise += std::norm(spec[i]);
                ++cnt;
            }
            noise /= cnt;
            const double sig = std::max(std::norm(spec[100]) - noise, 1e-12);
            peak_db_sum += 10.0 * std::log10(sig / noise);
        }
        CHECK(peak_db_sum / trials == Catch::Approx(snr_db).margin(1.0));
    }
    SECTION("out-of-view scatterer rejected at synthesis") {
        CHECK_THROWS_AS(sim::simulate_cube({{1000.0, 0.0, 1.0}}, cfg, std::nullopt),
                        std::invalid_argument);
    }
}
