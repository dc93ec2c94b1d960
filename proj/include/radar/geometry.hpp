#pragma once

// Exact oriented-box geometry: convex polygon clipping, oriented IoU,
// greedy NMS, and soft-NMS.

#include <algorithm>
#include <numeric>

#include "radar/core.hpp"

namespace radar::geom {

struct Vec2 {
    double x = 0.0, y = 0.0;
};
inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

/// Ordered CCW vertex list; callers keep it convex.
struct ConvexPolygon {
    std::vector<Vec2> vertices;
};

/// Signed shoelace area (positive for CCW).
inline double polygon_area(const ConvexPolygon& p) {
    const auto& v = p.vertices;
    double a = 0.0;
    for (size_t i = 0, n = v.size(); i < n; ++i) a += cross(v[i], v[(i + 1) % n]);
    return 0.5 * a;
}

/// Four CCW corners from center/size/heading; h runs along the heading.
inline ConvexPolygon box_to_polygon(const OrientedBox& b) {
    const double c = std::cos(b.theta), s = std::sin(b.theta);
    const Vec2 eh{0.5 * b.h * c, 0.5 * b.h * s};     // along heading
    const Vec2 ew{-0.5 * b.w * s, 0.5 * b.w * c};    // lateral (left of heading)
    const Vec2 ctr{b.cx, b.cy};
    return {{ctr + eh + ew, ctr - eh + ew, ctr - eh - ew, ctr + eh - ew}};
}

/// Sutherland-Hodgman clip of `subject` against convex CCW `clip`.
inline ConvexPolygon clip_polygon(const ConvexPolygon& subject, const ConvexPolygon& clip) {
    std::vector<Vec2> poly = subject.vertices;
    const auto& cv = clip.vertices;
    for (size_t i = 0, n = cv.size(); i < n && !poly.empty(); ++i) {
        const Vec2 a = cv[i], b = cv[(i + 1) % n];
        const Vec2 edge = b - a;
        std::vector<Vec2> next;
        next.reserve(poly.size() + 4);
        for (size_t j = 0, m = poly.size(); j < m; ++j) {
            const Vec2 p = poly[j], q = poly[(j + 1) % m];
            const double dp = cross(edge, p - a);
            const double dq = cross(edge, q - a);
            if (dp >= 0.0) next.push_back(p);
            if ((dp > 0.0 && dq < 0.0) || (dp < 0.0 && dq > 0.0)) {
                const double t = dp / (dp - dq);
                next.push_back(p + t * (q - p));
            }
        }
        poly = std::move(next);
    }
    return {poly};
}

/// Oriented IoU via exact polygon clipping. Near-zero intersection areas
/// (< 1e-12 m^2, collinear clipping noise) count as 0.
inline double oriented_iou(const OrientedBox& a, const OrientedBox& b) {
    a.validate();
    b.validate();
    const ConvexPolygon pa = box_to_polygon(a), pb = box_to_polygon(b);
    const ConvexPolygon inter = clip_polygon(pa, pb);
    double ai = inter.vertices.size() >= 3 ? polygon_area(inter) : 0.0;
    if (ai < 1e-12) ai = 0.0;
    const double uni = a.area() + b.area() - ai;
    return std::clamp(ai / uni, 0.0, 1.0);
}

/// Indices sorted by descending score, ties by insertion order.
inline std::vector<size_t> score_order(const std::vector<OrientedBox>& boxes) {
    std::vector<size_t> order(boxes.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t j) {
        return boxes[i].score.value() > boxes[j].score.value();
    });
    return order;
}

/// Greedy NMS. Survivors are pairwise IoU <= threshold, kept in
/// descending-score order.
inline DetectionSet nms(const DetectionSet& dets, double iou_threshold) {
    for (const auto& b : dets.boxes)
        if (!b.score) throw std::invalid_argument("nms: all boxes need scores");
    DetectionSet out{dets.frame_id, {}};
    for (size_t i : score_order(dets.boxes)) {
        const auto& cand = dets.boxes[i];
        bool keep = true;
        for (const auto& kept : out.boxes)
            if (oriented_iou(cand, kept) > iou_threshold) { keep = false; break; }
        if (keep) out.boxes.push_back(cand);
    }
    return out;
}

enum class SoftNmsMode { linear, gaussian };

/// Soft-NMS: iteratively select the highest remaining score and decay the
/// rest by overlap. Linear mode: s *= (1 - iou) when iou > param; gaussian
/// mode: s *= exp(-iou^2 / param). Boxes falling below score_floor drop out.
inline DetectionSet soft_nms(const DetectionSet& dets, double param,
                             SoftNmsMode mode = SoftNmsMode::linear,
                             double score_floor = 1e-3) {
    for (const auto& b : dets.boxes)
        if (!b.score) throw std::invalid_argument("soft_nms: all boxes need scores");
    std::vector<OrientedBox> pool = dets.boxes;
    DetectionSet out{dets.frame_id, {}};
    while (!pool.empty()) {
        size_t best = 0;
        for (size_t i = 1; i < pool.size(); ++i)
            if (pool[i].score.value() > pool[best].score.value()) best = i;
        OrientedBox sel = pool[best];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(best));
        out.boxes.push_back(sel);
        std::vector<OrientedBox> next;
        next.reserve(pool.size());
        for (auto& b : pool) {
            const double iou = oriented_iou(sel, b);
            double s = b.score.value();
            if (mode == SoftNmsMode::linear) {
                if (iou > param) s *= (1.0 - iou);
            } else {
                s *= std::exp(-iou * iou / param);
            }
            if (s >= score_floor) {
                b.score = s;
                next.push_back(b);
            }
        }
        pool = std::move(next);
    }
    return out;
}

}  // namespace radar::geom
