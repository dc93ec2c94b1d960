#pragma once

// Oriented-IoU average-precision evaluation: greedy per-frame matching,
// global score sweep with all-points interpolation, and the four-format
// comparison table.

#include <map>

#include "radar/geometry.hpp"

namespace radar::eval {

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double score_threshold = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;
    double ap = 0.0;
};

/// TP/FP labels aligned with the input detections. Detections are
/// considered in descending score order; each matches the unmatched gt of
/// highest oriented IoU >= threshold. Ties break by index.
inline std::vector<char> match_frame(const DetectionSet& dets, const GroundTruthSet& gts,
                                     double iou_threshold) {
    for (const auto& d : dets.boxes)
        if (!d.score) throw std::invalid_argument("match_frame: detections must be scored");
    std::vector<char> tp(dets.boxes.size(), 0);
    std::vector<char> gt_used(gts.boxes.size(), 0);
    for (size_t i : geom::score_order(dets.boxes)) {
        int best = -1;
        double best_iou = iou_threshold;
        for (size_t g = 0; g < gts.boxes.size(); ++g) {
            if (gt_used[g]) continue;
            const double v = geom::oriented_iou(dets.boxes[i], gts.boxes[g]);
            if (v >= best_iou && (best < 0 || v > best_iou)) { best = static_cast<int>(g); best_iou = v; }
        }
        if (best >= 0) { tp[i] = 1; gt_used[best] = 1; }
    }
    return tp;
}

/// Dataset-wide AP at one IoU threshold, all-points interpolation (area
/// under the precision envelope). Frames are matched independently, then
/// all detections enter one global score-sorted sweep.
inline PrCurve average_precision(const std::vector<DetectionSet>& dets,
                                 const std::vector<GroundTruthSet>& gts,
                                 double iou_threshold) {
    std::map<std::int64_t, const GroundTruthSet*> gt_by_frame;
    size_t total_gt = 0;
    for (const auto& g : gts) {
        if (!gt_by_frame.emplace(g.frame_id, &g).second)
            throw std::invalid_argument("average_precision: duplicate gt frame id");
        total_gt += g.boxes.size();
    }
    if (total_gt == 0)
        throw std::invalid_argument("average_precision: zero ground-truth boxes");

    std::vector<std::pair<double, char>> scored;  // (score, tp)
    static const GroundTruthSet kEmpty;
    for (const auto& d : dets) {
        auto it = gt_by_frame.find(d.frame_id);
        const GroundTruthSet& g = it == gt_by_frame.end() ? kEmpty : *it->second;
        const auto tp = match_frame(d, g, iou_threshold);
        for (size_t i = 0; i < d.boxes.size(); ++i)
            scored.emplace_back(d.boxes[i].score.value(), tp[i]);
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    PrCurve curve;
    size_t tp_cum = 0, fp_cum = 0;
    for (const auto& [score, is_tp] : scored) {
        if (is_tp) ++tp_cum; else ++fp_cum;
        curve.points.push_back({double(tp_cum) / double(total_gt),
                                double(tp_cum) / double(tp_cum + fp_cum), score});
    }
    // Precision envelope, integrated over recall increments.
    double env = 0.0, ap = 0.0, prev_recall = 0.0;
    std::vector<double> envelope(curve.points.size());
    for (size_t i = curve.points.size(); i-- > 0;) {
        env = std::max(env, curve.points[i].precision);
        envelope[i] = env;
    }
    for (size_t i = 0; i < curve.points.size(); ++i) {
        ap += (curve.points[i].recall - prev_recall) * envelope[i];
        prev_recall = curve.points[i].recall;
    }
    curve.ap = ap;
    return curve;
}

struct ApTable {
    std::vector<double> iou_thresholds;
    // Row per input format, preserving insertion order.
    std::vector<std::pair<std::string, std::vector<double>>> rows;

    std::string to_text() const {
        std::string out = "format";
        for (double t : iou_thresholds) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "  AP@%.1f", t);
            out += buf;
        }
        out += "\n";
        for (const auto& [name, aps] : rows) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%-10s", name.c_str());
            out += buf;
            for (double ap : aps) {
                std::snprintf(buf, sizeof buf, "  %6.4f", ap);
                out += buf;
            }
            out += "\n";
        }
        return out;
    }
};

/// AP at each threshold for each format's detections against shared gts.
inline ApTable evaluate_formats(
    const std::vector<std::pair<std::string, std::vector<DetectionSet>>>& per_format_dets,
    const std::vector<GroundTruthSet>& gts,
    const std::vector<double>& iou_thresholds = {0.3, 0.5, 0.7}) {
    if (per_format_dets.empty())
        throw std::invalid_argument("evaluate_formats: no formats supplied");
    ApTable table;
    table.iou_thresholds = iou_thresholds;
    for (const auto& [name, dets] : per_format_dets) {
        std::vector<double> aps;
        for (double t : iou_thresholds) aps.push_back(average_precision(dets, gts, t).ap);
        table.rows.emplace_back(name, std::move(aps));
    }
    return table;
}

}  // namespace radar::eval
