#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "radar/autolabel.hpp"

using namespace radar;

TEST_CASE("symmetry transforms") {
    SECTION("quarter turn moves +x onto +y") {
        const label::SymmetryTransform t{1, false};
        const auto b = label::transform_box(OrientedBox(10, 0, 2, 4, 0), t);
        CHECK(b.cx == Catch::Approx(0.0).margin(1e-12));
        CHECK(b.cy == Catch::Approx(10.0));
        CHECK(b.theta == Catch::Approx(kPi / 2));
    }
    SECTION("mirror flips y and heading") {
        const label::SymmetryTransform t{0, true};
        const auto b = label::transform_box(OrientedBox(3, 4, 2, 4, 0.3), t);
        CHECK(b.cx == Catch::Approx(3.0));
        CHECK(b.cy == Catch::Approx(-4.0));
        CHECK(b.theta == Catch::Approx(-0.3));
    }
    SECTION("all eight elements are distinct actions") {
        const OrientedBox probe(2, 1, 1.5, 3.5, 0.4);
        const auto ts = label::all_transforms();
        for (size_t i = 0; i < ts.size(); ++i)
            for (size_t j = i + 1; j < ts.size(); ++j) {
                const auto a = label::transform_box(probe, ts[i]);
                const auto b = label::transform_box(probe, ts[j]);
                const bool same = std::abs(a.cx - b.cx) < 1e-9 &&
                                  std::abs(a.cy - b.cy) < 1e-9 &&
                                  std::abs(wrap_angle(a.theta - b.theta)) < 1e-9;
                CHECK_FALSE(same);
            }
    }
    SECTION("inverse undoes every element exactly") {
        std::mt19937_64 rng(13);
        std::uniform_real_distribution<double> pos(-15, 15), size(0.5, 6.0), ang(-kPi, kPi);
        for (int i = 0; i < 200; ++i) {
            const OrientedBox b(pos(rng), pos(rng), size(rng), size(rng), ang(rng));
            for (const auto& t : label::all_transforms()) {
                const auto back = label::inverse_transform_box(label::transform_box(b, t), t);
                CHECK(std::abs(back.cx - b.cx) <= 1e-12 * 20);
                CHECK(std::abs(back.cy - b.cy) <= 1e-12 * 20);
                CHECK(std::abs(back.w - b.w) <= 1e-12);
                CHECK(std::abs(back.h - b.h) <= 1e-12);
                CHECK(std::abs(wrap_angle(back.theta - b.theta)) <= 1e-12);
            }
        }
    }
    SECTION("transforms preserve the sensor-origin distance and box size") {
        const OrientedBox b(5, -2, 1.8, 4.6, 1.1);
        for (const auto& t : label::all_transforms()) {
            const auto m = label::transform_box(b, t);
            CHECK(std::hypot(m.cx, m.cy) == Catch::Approx(std::hypot(b.cx, b.cy)));
            CHECK(m.w == Catch::Approx(b.w));
            CHECK(m.h == Catch::Approx(b.h));
        }
    }
}

TEST_CASE("detection-set fusion") {
    auto make = [](double cx, double cy, double score) {
        return OrientedBox(cx, cy, 1.8, 4.6, 0.2, score);
    };

    SECTION("sixteen near-identical copies fuse to one box") {
        // Two detections per view, eight views, all on the same object.
        std::vector<DetectionSet> sets;
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> jitter(-0.02, 0.02), sc(0.6, 0.95);
        for (int v = 0; v < 8; ++v) {
            DetectionSet s{42, {}};
            for (int k = 0; k < 2; ++k)
                s.boxes.push_back(make(10 + jitter(rng), 5 + jitter(rng), sc(rng)));
            sets.push_back(s);
        }
        const auto fused = label::fuse_detection_sets(sets);
        REQUIRE(fused.boxes.size() == 1);
        CHECK(fused.frame_id == 42);
        CHECK(fused.boxes[0].cx == Catch::Approx(10.0).margin(0.05));
    }
    SECTION("distinct objects all survive") {
        std::vector<DetectionSet> sets{{7, {make(10, 0, 0.9)}},
                                       {7, {make(10, 0, 0.85), make(-10, 3, 0.8)}}};
        const auto fused = label::fuse_detection_sets(sets);
        REQUIRE(fused.boxes.size() == 2);
    }
    SECTION("high threshold keeps moderately overlapping pairs") {
        // IoU around 0.5 stays under the 0.9 linear-decay threshold, so both
        // boxes keep their scores.
        std::vector<DetectionSet> sets{{1, {make(10, 0, 0.9)}},
                                       {1, {make(10, 0.6, 0.8)}}};
        const auto fused = label::fuse_detection_sets(sets);
        REQUIRE(fused.boxes.size() == 2);
        CHECK(fused.boxes[1].score.value() == Catch::Approx(0.8));
    }
    SECTION("frame id mismatch throws") {
        std::vector<DetectionSet> sets{{1, {make(0, 0, 0.9)}}, {2, {}}};
        CHECK_THROWS_AS(label::fuse_detection_sets(sets), std::invalid_argument);
    }
    CHECK(label::fuse_detection_sets({}).boxes.empty());
}

TEST_CASE("response auc") {
    BevImage bev(10.0, 10.0, 10.0, 0.2);

    SECTION("constant region gives (n+1)/2n, zero region the same") {
        const OrientedBox box(5, 0, 2, 4, 0.0);
        for (auto& v : bev.values) v = 3.5f;
        const double auc_c = label::response_auc(bev, box);
        for (auto& v : bev.values) v = 0.0f;
        const double auc_z = label::response_auc(bev, box);
        CHECK(auc_c == Catch::Approx(auc_z).epsilon(1e-12));
        CHECK(auc_c > 0.5);
        CHECK(auc_c < 0.6);  // (n+1)/2n with n in the hundreds
    }
    SECTION("single hot pixel gives 1/n") {
        const OrientedBox box(5, 0, 2, 4, 0.0);
        for (auto& v : bev.values) v = 0.0f;
        // Pixel center nearest (5, 0).
        bev.at(24, 49) = 100.0f;
        const double auc = label::response_auc(bev, box);

        // Count region pixels to get the expected 1/n exactly.
        for (auto& v : bev.values) v = 1.0f;
        int n = 0;
        for (int r = 0; r < bev.rows; ++r)
            for (int c = 0; c < bev.cols; ++c) {
                const double dx = bev.pixel_x(r) - 5.0, dy = bev.pixel_y(c);
                if (std::abs(dx) <= 0.5 * 4 * 1.2 && std::abs(dy) <= 0.5 * 2 * 1.2) ++n;
            }
        CHECK(auc == Catch::Approx(1.0 / n).epsilon(1e-9));
    }
    SECTION("scale invariance of the response values") {
        std::mt19937_64 rng(29);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& v : bev.values) v = static_cast<float>(u(rng));
        const OrientedBox box(3, -2, 2.5, 5, 0.7);
        const double a1 = label::response_auc(bev, box);
        for (auto& v : bev.values) v *= 8.0f;
        const double a2 = label::response_auc(bev, box);
        CHECK(a1 == Catch::Approx(a2).epsilon(1e-6));
        // Uniform values: normalized cumulative sum of sorted samples
        // approaches t^2, so the AUC sits near 1/3 - far from concentrated.
        CHECK(a1 > 0.25);
        CHECK(a1 < 0.45);
    }
    SECTION("concentrated response scores lower than flat response") {
        const OrientedBox box(5, 0, 2, 4, 0.0);
        for (auto& v : bev.values) v = 0.1f;
        const double flat = label::response_auc(bev, box);
        bev.at(24, 49) = 50.0f;
        bev.at(24, 50) = 50.0f;
        const double peaked = label::response_auc(bev, box);
        CHECK(peaked < flat);
        CHECK(peaked < 0.2);
    }
    SECTION("region outside the image throws") {
        CHECK_THROWS_AS(label::response_auc(bev, OrientedBox(500, 500, 2, 4, 0)),
                        std::invalid_argument);
    }
}

TEST_CASE("low-response filter") {
    BevImage bev(10.0, 10.0, 10.0, 0.2);
    for (auto& v : bev.values) v = 0.05f;
    // Strong blob near (5, 0).
    for (int r = 20; r < 30; ++r)
        for (int c = 45; c < 55; ++c) bev.at(r, c) = 40.0f;

    DetectionSet dets{0,
                      {OrientedBox(5, 0, 2.5, 4.5, 0.0, 0.9),    // on the blob
                       OrientedBox(2, -5, 2.5, 4.5, 0.0, 0.8)}};  // flat noise
    const auto kept = label::filter_low_response(dets, bev);
    REQUIRE(kept.boxes.size() == 1);
    CHECK(kept.boxes[0].cx == Catch::Approx(5.0));
}
