#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "radar/eval.hpp"

using namespace radar;

namespace {

OrientedBox det_box(double cx, double cy, double score) {
    return OrientedBox(cx, cy, 1.8, 4.6, 0.0, score);
}

OrientedBox gt_box(double cx, double cy) { return OrientedBox(cx, cy, 1.8, 4.6, 0.0); }

double iou_fn(const OrientedBox& a, const OrientedBox& b) { return geom::oriented_iou(a, b); }

}  // namespace

TEST_CASE("frame matching") {
    SECTION("one detection on one gt") {
        DetectionSet d{0, {det_box(10, 0, 0.9)}};
        GroundTruthSet g{0, {gt_box(10, 0)}};
        const auto tp = eval::match_frame(d, g, 0.5);
        REQUIRE(tp.size() == 1);
        CHECK(tp[0] == 1);
    }
    SECTION("each gt matches at most once; higher score wins the overlap") {
        DetectionSet d{0, {det_box(10, 0, 0.7), det_box(10.1, 0, 0.9)}};
        GroundTruthSet g{0, {gt_box(10, 0)}};
        const auto tp = eval::match_frame(d, g, 0.3);
        CHECK(tp[0] == 0);
        CHECK(tp[1] == 1);
    }
    SECTION("below-threshold overlap does not match") {
        DetectionSet d{0, {det_box(10, 1.7, 0.9)}};  // IoU well under 0.5
        GroundTruthSet g{0, {gt_box(10, 0)}};
        CHECK(eval::match_frame(d, g, 0.5)[0] == 0);
        CHECK(eval::match_frame(d, g, 0.01)[0] == 1);
    }
    SECTION("detection picks the highest-iou free gt, not the first") {
        DetectionSet d{0, {det_box(10, 0.4, 0.9)}};
        GroundTruthSet g{0, {gt_box(10, 1.2), gt_box(10, 0.5)}};
        const auto tp = eval::match_frame(d, g, 0.1);
        CHECK(tp[0] == 1);
        // A second detection near the other gt still finds it free.
        d.boxes.push_back(det_box(10, 1.2, 0.8));
        const auto tp2 = eval::match_frame(d, g, 0.1);
        CHECK(tp2[0] == 1);
        CHECK(tp2[1] == 1);
    }
    SECTION("unscored detection throws") {
        DetectionSet d{0, {gt_box(0, 0)}};
        CHECK_THROWS_AS(eval::match_frame(d, {0, {}}, 0.5), std::invalid_argument);
    }
}

TEST_CASE("average precision: hand case") {
    // Frame 0: two gts. Three detections ordered by score:
    //   0.9 TP, 0.8 FP (far away), 0.7 TP.
    // PR points: (0.5, 1), (0.5, 0.5), (1.0, 2/3).
    // Envelope: 1, 2/3, 2/3 -> AP = 0.5*1 + 0.5*(2/3) = 5/6.
    std::vector<DetectionSet> dets{{0,
                                    {det_box(10, 0, 0.9), det_box(30, 10, 0.8),
                                     det_box(-10, 5, 0.7)}}};
    std::vector<GroundTruthSet> gts{{0, {gt_box(10, 0), gt_box(-10, 5)}}};
    const auto curve = eval::average_precision(dets, gts, 0.5);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points[0].recall == Catch::Approx(0.5));
    CHECK(curve.points[0].precision == Catch::Approx(1.0));
    CHECK(curve.points[1].precision == Catch::Approx(0.5));
    CHECK(curve.points[2].recall == Catch::Approx(1.0));
    CHECK(curve.points[2].precision == Catch::Approx(2.0 / 3.0));
    CHECK(curve.ap == Catch::Approx(5.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("average precision: properties") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> pos(-20, 20), off(-1.0, 1.0), sc(0.05, 1.0);

    auto random_dataset = [&](int frames) {
        std::vector<GroundTruthSet> gts;
        std::vector<DetectionSet> dets;
        for (int f = 0; f < frames; ++f) {
            GroundTruthSet g{f, {}};
            DetectionSet d{f, {}};
            const int ng = 1 + static_cast<int>(rng() % 3);
            for (int i = 0; i < ng; ++i) {
                const double x = pos(rng), y = pos(rng);
                g.boxes.push_back(gt_box(x, y));
                if (rng() % 4 != 0)  // most gts get a near-hit
                    d.boxes.push_back(det_box(x + 0.3 * off(rng), y + 0.3 * off(rng), sc(rng)));
            }
            const int nfp = static_cast<int>(rng() % 3);
            for (int i = 0; i < nfp; ++i)
                d.boxes.push_back(det_box(pos(rng), pos(rng), sc(rng)));
            gts.push_back(g);
            dets.push_back(d);
        }
        return std::pair{dets, gts};
    };

    SECTION("perfect detections give AP 1 at every threshold") {
        std::vector<GroundTruthSet> gts{{0, {gt_box(3, 4), gt_box(-6, 2)}},
                                        {1, {gt_box(8, -1)}}};
        std::vector<DetectionSet> dets;
        for (const auto& g : gts) {
            DetectionSet d{g.frame_id, {}};
            for (const auto& b : g.boxes) d.boxes.push_back(det_box(b.cx, b.cy, 0.9));
            dets.push_back(d);
        }
        for (double t : {0.3, 0.5, 0.7, 0.99})
            CHECK(eval::average_precision(dets, gts, t).ap == Catch::Approx(1.0));
    }
    SECTION("ap is invariant under monotone score transforms") {
        auto [dets, gts] = random_dataset(6);
        const double base = eval::average_precision(dets, gts, 0.5).ap;
        auto mapped = dets;
        for (auto& d : mapped)
            for (auto& b : d.boxes) b.score = 0.1 + 0.8 * std::pow(b.score.value(), 3.0);
        CHECK(eval::average_precision(mapped, gts, 0.5).ap == Catch::Approx(base).epsilon(1e-12));
    }
    SECTION("ap never increases with the iou threshold") {
        for (int trial = 0; trial < 20; ++trial) {
            auto [dets, gts] = random_dataset(5);
            double prev = 1.0 + 1e-12;
            for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
                const double ap = eval::average_precision(dets, gts, t).ap;
                CHECK(ap <= prev + 1e-12);
                prev = ap;
            }
        }
    }
    SECTION("matches the threshold-sweep oracle") {
        for (int trial = 0; trial < 30; ++trial) {
            auto [dets, gts] = random_dataset(4);
            for (double t : {0.3, 0.5, 0.7}) {
                const double got = eval::average_precision(dets, gts, t).ap;
                const double want = oracles::ap_sweep_oracle(dets, gts, t, iou_fn);
                CHECK(got == Catch::Approx(want).margin(1e-9));
            }
        }
    }
    SECTION("zero gts and duplicate frame ids throw") {
        CHECK_THROWS_AS(eval::average_precision({}, {{0, {}}}, 0.5), std::invalid_argument);
        std::vector<GroundTruthSet> dup{{0, {gt_box(0, 0)}}, {0, {gt_box(1, 1)}}};
        CHECK_THROWS_AS(eval::average_precision({}, dup, 0.5), std::invalid_argument);
    }
}

TEST_CASE("format table") {
    std::vector<GroundTruthSet> gts{{0, {gt_box(5, 0), gt_box(-5, 3)}}};
    std::vector<DetectionSet> good{{0, {det_box(5, 0, 0.9), det_box(-5, 3, 0.8)}}};
    std::vector<DetectionSet> poor{{0, {det_box(5, 1.2, 0.9), det_box(20, 20, 0.8)}}};

    const auto table = eval::evaluate_formats({{"good", good}, {"poor", poor}}, gts);
    REQUIRE(table.rows.size() == 2);
    REQUIRE(table.iou_thresholds.size() == 3);
    CHECK(table.rows[0].first == "good");
    for (double ap : table.rows[0].second) CHECK(ap == Catch::Approx(1.0));
    CHECK(table.rows[1].second[0] < 1.0);
    // Offset detection passes loose thresholds, fails tight ones.
    CHECK(table.rows[1].second[0] >= table.rows[1].second[2]);

    const std::string text = table.to_text();
    CHECK(text.find("AP@0.3") != std::string::npos);
    CHECK(text.find("good") != std::string::npos);
    CHECK_THROWS_AS(eval::evaluate_formats({}, gts), std::invalid_argument);
}
