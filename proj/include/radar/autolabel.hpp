#pragma once

// Scalable ground-truth generation filters: the 8-element rotation/mirror
// test-time-augmentation group, multi-set soft-NMS fusion, and the
// response-strength AUC false-positive filter over BEV images.

#include "radar/geometry.hpp"

namespace radar::label {

/// Element of the dihedral group D4 acting on the BEV plane about the
/// sensor origin. Mirror (y -> -y, heading negated) applies first, then
/// the quarter-turn rotation.
struct SymmetryTransform {
    int quarter_turns = 0;  // 0..3, CCW
    bool mirror = false;
};

inline std::array<SymmetryTransform, 8> all_transforms() {
    std::array<SymmetryTransform, 8> out;
    int i = 0;
    for (int m = 0; m < 2; ++m)
        for (int q = 0; q < 4; ++q) out[i++] = {q, m != 0};
    return out;
}

inline OrientedBox transform_box(const OrientedBox& b, const SymmetryTransform& t) {
    OrientedBox out = b;
    if (t.mirror) { out.cy = -out.cy; out.theta = -out.theta; }
    const double rot = t.quarter_turns * kPi / 2.0;
    const double c = std::cos(rot), s = std::sin(rot);
    const double x = out.cx, y = out.cy;
    out.cx = c * x - s * y;
    out.cy = s * x + c * y;
    out.theta = wrap_angle(out.theta + rot);
    return out;
}

inline OrientedBox inverse_transform_box(const OrientedBox& b, const SymmetryTransform& t) {
    OrientedBox out = b;
    const double rot = -t.quarter_turns * kPi / 2.0;
    const double c = std::cos(rot), s = std::sin(rot);
    const double x = out.cx, y = out.cy;
    out.cx = c * x - s * y;
    out.cy = s * x + c * y;
    out.theta = wrap_angle(out.theta + rot);
    if (t.mirror) { out.cy = -out.cy; out.theta = wrap_angle(-out.theta); }
    return out;
}

inline std::vector<OrientedBox> transform_boxes(const std::vector<OrientedBox>& boxes,
                                                const SymmetryTransform& t) {
    std::vector<OrientedBox> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes) out.push_back(transform_box(b, t));
    return out;
}

inline std::vector<OrientedBox> inverse_transform_boxes(const std::vector<OrientedBox>& boxes,
                                                        const SymmetryTransform& t) {
    std::vector<OrientedBox> out;
    out.reserve(boxes.size());
    for (const auto& b : boxes) out.push_back(inverse_transform_box(b, t));
    return out;
}

/// Concatenate detection sets for one frame and fuse with soft-NMS
/// (linear decay), dropping fused scores below `score_floor`.
inline DetectionSet fuse_detection_sets(const std::vector<DetectionSet>& sets,
                                        double soft_nms_threshold = 0.9,
                                        double score_floor = 0.1) {
    if (sets.empty()) return {};
    DetectionSet merged{sets.front().frame_id, {}};
    for (const auto& s : sets) {
        if (s.frame_id != merged.frame_id)
            throw std::invalid_argument("fuse_detection_sets: frame id mismatch");
        merged.boxes.insert(merged.boxes.end(), s.boxes.begin(), s.boxes.end());
    }
    return geom::soft_nms(merged, soft_nms_threshold, geom::SoftNmsMode::linear, score_floor);
}

/// Response-strength AUC of the pixels inside `box` enlarged by `enlarge`
/// in both width and height: sort pixel values ascending, form the
/// normalized cumulative sum, return its mean. Concentrated (object-like)
/// responses give low AUC; a constant region gives (n+1)/(2n). An all-zero
/// region follows the constant convention.
inline double response_auc(const BevImage& bev, const OrientedBox& box, double enlarge = 0.20) {
    OrientedBox big = box;
    big.w *= 1.0 + enlarge;
    big.h *= 1.0 + enlarge;
    const geom::ConvexPolygon poly = geom::box_to_polygon(big);

    double xmin = poly.vertices[0].x, xmax = xmin, ymin = poly.vertices[0].y, ymax = ymin;
    for (const auto& v : poly.vertices) {
        xmin = std::min(xmin, v.x); xmax = std::max(xmax, v.x);
        ymin = std::min(ymin, v.y); ymax = std::max(ymax, v.y);
    }
    const double c = std::cos(big.theta), s = std::sin(big.theta);
    std::vector<double> pix;
    for (int r = 0; r < bev.rows; ++r) {
        const double x = bev.pixel_x(r);
        if (x < xmin || x > xmax) continue;
        for (int col = 0; col < bev.cols; ++col) {
            const double y = bev.pixel_y(col);
            if (y < ymin || y > ymax) continue;
            const double dx = x - big.cx, dy = y - big.cy;
            const double u = dx * c + dy * s;     // along heading
            const double v = -dx * s + dy * c;    // lateral
            if (std::abs(u) <= 0.5 * big.h && std::abs(v) <= 0.5 * big.w)
                pix.push_back(bev.at(r, col));
        }
    }
    if (pix.empty()) throw std::invalid_argument("response_auc: region covers no pixels");
    std::sort(pix.begin(), pix.end());
    const double total = std::accumulate(pix.begin(), pix.end(), 0.0);
    const size_t n = pix.size();
    if (total <= 0.0) return (double(n) + 1.0) / (2.0 * double(n));
    double cum = 0.0, auc = 0.0;
    for (double v : pix) { cum += v; auc += cum / total; }
    return auc / double(n);
}

/// Keep detections whose concentration score 1 - AUC clears the threshold;
/// flat, noise-like regions are discarded.
inline DetectionSet filter_low_response(const DetectionSet& dets, const BevImage& bev,
                                        double concentration_threshold = 0.6,
                                        double enlarge = 0.20) {
    DetectionSet out{dets.frame_id, {}};
    for (const auto& b : dets.boxes)
        if (1.0 - response_auc(bev, b, enlarge) >= concentration_threshold)
            out.boxes.push_back(b);
    return out;
}

}  // namespace radar::label
