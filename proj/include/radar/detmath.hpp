#pragma once

// Detection-head mathematics: anchor construction from ground-truth
// statistics, target assignment, R-CNN-style box encoding with sine/cosine
// orientation offsets, and the focal + variance-attenuated localization
// loss stack with analytic gradients.

#include <random>

#include <Eigen/Dense>

#include "radar/geometry.hpp"

namespace radar::det {

struct Anchor {
    double cx = 0.0, cy = 0.0;
    double w = 1.0, h = 1.0;
    double theta = 0.0;

    OrientedBox as_box() const { return OrientedBox(cx, cy, w, h, theta); }
};

struct AnchorConfig {
    int grid_rows = 1;
    int grid_cols = 1;
    double cell_size = 1.0;                 // m
    double anchor_w = 1.8, anchor_h = 4.6;  // m
    std::array<double, 3> orientations{0.0, kPi / 3.0, 2.0 * kPi / 3.0};
    // Metric position of grid cell (0, 0)'s corner.
    double origin_x = 0.0, origin_y = 0.0;
};

/// Circular distance between box orientations; boxes are symmetric under a
/// pi rotation, so the period is pi.
inline double orientation_distance(double a, double b) {
    double d = std::fmod(a - b, kPi);
    if (d < 0.0) d += kPi;
    return std::min(d, kPi - d);
}

/// k-means over box orientations with period-pi circular distance.
/// Works in doubled-angle space where the symmetry becomes an ordinary
/// 2*pi circle; centroids are circular means. Multi-restart, best inertia.
inline std::vector<double> kmeans_orientations(const std::vector<OrientedBox>& gt_boxes,
                                               int k, uint64_t seed,
                                               int restarts = 10) {
    const int n = static_cast<int>(gt_boxes.size());
    if (n < k) throw std::invalid_argument("kmeans_orientations: fewer boxes than k");
    std::vector<double> doubled(n);
    for (int i = 0; i < n; ++i) doubled[i] = wrap_angle(2.0 * gt_boxes[i].theta);

    auto circ_dist = [](double a, double b) { return std::abs(wrap_angle(a - b)); };

    std::mt19937_64 rng(seed);
    std::vector<double> best_centers;
    double best_inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::vector<double> centers(k);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int c = 0; c < k; ++c) centers[c] = doubled[pick(rng)];
        std::vector<int> label(n, -1);
        for (int iter = 0; iter < 200; ++iter) {
            bool changed = false;
            for (int i = 0; i < n; ++i) {
                int arg = 0;
                double dmin = circ_dist(doubled[i], centers[0]);
                for (int c = 1; c < k; ++c) {
                    const double d = circ_dist(doubled[i], centers[c]);
                    if (d < dmin) { dmin = d; arg = c; }
                }
                if (label[i] != arg) { label[i] = arg; changed = true; }
            }
            for (int c = 0; c < k; ++c) {
                double sx = 0.0, sy = 0.0;
                int cnt = 0;
                for (int i = 0; i < n; ++i)
                    if (label[i] == c) { sx += std::cos(doubled[i]); sy += std::sin(doubled[i]); ++cnt; }
                centers[c] = cnt > 0 ? std::atan2(sy, sx) : doubled[pick(rng)];
            }
            if (!changed && iter > 0) break;
        }
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = 0.5 * circ_dist(doubled[i], centers[label[i]]);
            inertia += d * d;
        }
        if (inertia < best_inertia) { best_inertia = inertia; best_centers = centers; }
    }
    std::vector<double> out(k);
    for (int c = 0; c < k; ++c) out[c] = 0.5 * best_centers[c];  // in [-pi/2, pi/2)
    std::sort(out.begin(), out.end());
    return out;
}

/// Arithmetic mean of (w, h) over all ground-truth boxes.
inline std::pair<double, double> mean_anchor_size(const std::vector<OrientedBox>& gt_boxes) {
    if (gt_boxes.empty()) throw std::invalid_argument("mean_anchor_size: empty box set");
    double sw = 0.0, sh = 0.0;
    for (const auto& b : gt_boxes) { sw += b.w; sh += b.h; }
    return {sw / gt_boxes.size(), sh / gt_boxes.size()};
}

/// rows x cols x 3 anchors at grid-cell centers.
inline std::vector<Anchor> build_anchor_grid(const AnchorConfig& cfg) {
    if (cfg.grid_rows < 1 || cfg.grid_cols < 1 || !(cfg.cell_size > 0.0) ||
        !(cfg.anchor_w > 0.0) || !(cfg.anchor_h > 0.0))
        throw std::invalid_argument("build_anchor_grid: invalid config");
    std::vector<Anchor> anchors;
    anchors.reserve(static_cast<size_t>(cfg.grid_rows) * cfg.grid_cols * 3);
    for (int r = 0; r < cfg.grid_rows; ++r)
        for (int c = 0; c < cfg.grid_cols; ++c)
            for (double theta : cfg.orientations)
                anchors.push_back({cfg.origin_x + (r + 0.5) * cfg.cell_size,
                                   cfg.origin_y + (c + 0.5) * cfg.cell_size,
                                   cfg.anchor_w, cfg.anchor_h, theta});
    return anchors;
}

/// One anchor per ground-truth box, each gt to its best-IoU anchor.
/// Anchors are exclusive: conflicts resolve by serving the gt with the
/// higher best IoU first, the loser taking its next-best anchor. Ties break
/// by smaller center distance, then lower anchor index, then lower gt
/// index. A gt with zero IoU against every free anchor falls back to the
/// nearest-center free anchor.
inline std::vector<int> assign_targets(const std::vector<Anchor>& anchors,
                                       const std::vector<OrientedBox>& gts) {
    if (anchors.empty()) throw std::invalid_argument("assign_targets: no anchors");
    const int na = static_cast<int>(anchors.size());
    const int ng = static_cast<int>(gts.size());
    Eigen::MatrixXd iou(ng, na), dist(ng, na);
    for (int g = 0; g < ng; ++g)
        for (int a = 0; a < na; ++a) {
            iou(g, a) = geom::oriented_iou(gts[g], anchors[a].as_box());
            dist(g, a) = std::hypot(gts[g].cx - anchors[a].cx, gts[g].cy - anchors[a].cy);
        }

    std::vector<int> assignment(ng, -1);
    std::vector<char> anchor_used(na, 0), gt_done(ng, 0);
    for (int round = 0; round < ng; ++round) {
        int best_g = -1, best_a = -1;
        for (int g = 0; g < ng; ++g) {
            if (gt_done[g]) continue;
            int cand = -1;
            for (int a = 0; a < na; ++a) {
                if (anchor_used[a]) continue;
                if (cand < 0 || iou(g, a) > iou(g, cand) ||
                    (iou(g, a) == iou(g, cand) && dist(g, a) < dist(g, cand)))
                    cand = a;
            }
            if (cand < 0) break;  // more gts than anchors
            if (best_g < 0 || iou(g, cand) > iou(best_g, best_a) ||
                (iou(g, cand) == iou(best_g, best_a) && dist(g, cand) < dist(best_g, best_a)))
                { best_g = g; best_a = cand; }
        }
        if (best_g < 0) break;
        if (iou(best_g, best_a) == 0.0) {
            // Zero overlap everywhere: nearest-center free anchor instead.
            best_a = -1;
            for (int a = 0; a < na; ++a) {
                if (anchor_used[a]) continue;
                if (best_a < 0 || dist(best_g, a) < dist(best_g, best_a)) best_a = a;
            }
        }
        assignment[best_g] = best_a;
        anchor_used[best_a] = 1;
        gt_done[best_g] = 1;
    }
    return assignment;
}

struct BoxEncoding {
    double x_o = 0.0, y_o = 0.0;
    double w_o = 0.0, h_o = 0.0;
    double cos_o = 1.0, sin_o = 0.0;

    std::array<double, 6> as_array() const { return {x_o, y_o, w_o, h_o, cos_o, sin_o}; }
};

inline BoxEncoding encode_box(const Anchor& a, const OrientedBox& gt) {
    gt.validate();
    if (!(a.w > 0.0) || !(a.h > 0.0))
        throw std::invalid_argument("encode_box: nonpositive anchor size");
    const double to = wrap_angle(gt.theta - a.theta);
    return {(gt.cx - a.cx) / a.w, (gt.cy - a.cy) / a.h,
            std::log(gt.w / a.w), std::log(gt.h / a.h),
            std::cos(to), std::sin(to)};
}

/// Inverse of encode_box. The angular offset is recovered with a
/// two-argument arctangent, so non-unit (cos, sin) pairs are fine.
inline OrientedBox decode_box(const Anchor& a, const BoxEncoding& e) {
    OrientedBox b;
    b.cx = a.cx + e.x_o * a.w;
    b.cy = a.cy + e.y_o * a.h;
    b.w = a.w * std::exp(e.w_o);
    b.h = a.h * std::exp(e.h_o);
    b.theta = wrap_angle(a.theta + std::atan2(e.sin_o, e.cos_o));
    return b;
}

// --- losses -----------------------------------------------------------------

/// Smoothed L1 with beta = 1: 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
inline std::pair<double, double> smooth_l1(double d) {
    if (std::abs(d) < 1.0) return {0.5 * d * d, d};
    return {std::abs(d) - 0.5, d > 0.0 ? 1.0 : -1.0};
}

struct FocalResult {
    double value = 0.0;
    double grad_logit = 0.0;
    double p = 0.0;
};

/// Focal loss on a logit-parameterized probability.
/// Positive: -alpha (1-p)^gamma log p; negative: -(1-alpha) p^gamma log(1-p).
inline FocalResult focal_loss(double logit, bool is_positive,
                              double alpha = 0.25, double gamma = 2.0) {
    // p = sigmoid(logit); log p and log(1-p) computed without overflow.
    const double p = 1.0 / (1.0 + std::exp(-logit));
    const double log_p = -std::log1p(std::exp(-logit));
    const double log_1mp = -logit - std::log1p(std::exp(-logit));
    const double u = 1.0 - p;
    FocalResult r;
    r.p = p;
    if (is_positive) {
        r.value = -alpha * std::pow(u, gamma) * log_p;
        r.grad_logit = alpha * std::pow(u, gamma) * (gamma * p * log_p - u);
    } else {
        r.value = -(1.0 - alpha) * std::pow(p, gamma) * log_1mp;
        r.grad_logit = (1.0 - alpha) * std::pow(p, gamma) * (p - gamma * u * log_1mp);
    }
    return r;
}

struct AleatoricResult {
    double value = 0.0;
    double grad_pred = 0.0;
    double grad_log_sigma = 0.0;
};

/// One parameter's variance-attenuated term: SL1(pred - gt)/sigma + log sigma,
/// with sigma = exp(log_sigma).
inline AleatoricResult aleatoric_term(double pred, double gt, double log_sigma) {
    const double sigma = std::exp(log_sigma);
    const auto [sl1, dsl1] = smooth_l1(pred - gt);
    AleatoricResult r;
    r.value = sl1 / sigma + log_sigma;
    r.grad_pred = dsl1 / sigma;
    r.grad_log_sigma = -sl1 / sigma + 1.0;
    return r;
}

/// Localization loss for one assigned anchor, summed over the 6 encoding
/// parameters; gradients fill preds/log_sigmas slots of the caller.
inline double aleatoric_loss(const std::array<double, 6>& pred,
                             const std::array<double, 6>& target,
                             const std::array<double, 6>& log_sigma,
                             std::array<double, 6>* grad_pred = nullptr,
                             std::array<double, 6>* grad_log_sigma = nullptr,
                             std::array<double, 6>* per_param = nullptr) {
    double total = 0.0;
    for (int i = 0; i < 6; ++i) {
        const auto r = aleatoric_term(pred[i], target[i], log_sigma[i]);
        total += r.value;
        if (grad_pred) (*grad_pred)[i] = r.grad_pred;
        if (grad_log_sigma) (*grad_log_sigma)[i] = r.grad_log_sigma;
        if (per_param) (*per_param)[i] += r.value;
    }
    return total;
}

struct LossReport {
    double total = 0.0;
    double objectiveness = 0.0;
    double localization = 0.0;
    std::array<double, 6> per_param{};
    Eigen::MatrixXd gradients;  // same shape as the prediction matrix
};

inline constexpr int kPredLogit = 0;
inline constexpr int kPredLoc = 1;        // 6 columns
inline constexpr int kPredLogSigma = 7;   // 6 columns
inline constexpr int kPredWidth = 13;

/// Full training objective for one frame. `predictions` is (anchors x 13):
/// objectiveness logit, 6 localization offsets, 6 log-variances. Positives
/// are the anchors chosen by assign_targets; every other anchor is a
/// negative for the objectiveness term.
inline LossReport total_loss(const Eigen::MatrixXd& predictions,
                             const std::vector<Anchor>& anchors,
                             const std::vector<OrientedBox>& gts,
                             double w0 = 100.0) {
    const int na = static_cast<int>(anchors.size());
    if (predictions.rows() != na || predictions.cols() != kPredWidth)
        throw std::invalid_argument("total_loss: prediction shape must be anchors x 13");

    const std::vector<int> assignment = assign_targets(anchors, gts);
    std::vector<int> gt_of_anchor(na, -1);
    for (size_t g = 0; g < assignment.size(); ++g)
        if (assignment[g] >= 0) gt_of_anchor[assignment[g]] = static_cast<int>(g);

    LossReport rep;
    rep.gradients = Eigen::MatrixXd::Zero(na, kPredWidth);
    for (int a = 0; a < na; ++a) {
        const bool positive = gt_of_anchor[a] >= 0;
        const auto f = focal_loss(predictions(a, kPredLogit), positive);
        rep.objectiveness += f.value;
        rep.gradients(a, kPredLogit) = f.grad_logit;
        if (!positive) continue;

        const BoxEncoding target = encode_box(anchors[a], gts[gt_of_anchor[a]]);
        std::array<double, 6> pred{}, lsig{};
        for (int i = 0; i < 6; ++i) {
            pred[i] = predictions(a, kPredLoc + i);
            lsig[i] = predictions(a, kPredLogSigma + i);
        }
        std::array<double, 6> gp{}, gs{};
        rep.localization += aleatoric_loss(pred, target.as_array(), lsig, &gp, &gs, &rep.per_param);
        for (int i = 0; i < 6; ++i) {
            rep.gradients(a, kPredLoc + i) = w0 * gp[i];
            rep.gradients(a, kPredLogSigma + i) = w0 * gs[i];
        }
    }
    rep.total = rep.objectiveness + w0 * rep.localization;
    return rep;
}

// --- toy trainable head ------------------------------------------------------

struct ToyFrame {
    Eigen::MatrixXd features;         // anchors x F
    std::vector<OrientedBox> gts;
};

struct TraceEntry {
    int step = 0;
    double total = 0.0, objectiveness = 0.0, localization = 0.0;
};

struct ToyHead {
    Eigen::MatrixXd weights;          // F x 13
    Eigen::RowVectorXd bias;          // 1 x 13
    std::vector<TraceEntry> trace;

    Eigen::MatrixXd predict(const Eigen::MatrixXd& features) const {
        return (features * weights).rowwise() + bias;
    }
};

/// Gradient descent on a linear map from per-anchor features to the 13
/// detection-head outputs, driven by total_loss gradients. Shows the loss
/// stack is trainable; the CNN it stands in for is elsewhere.
inline ToyHead fit_toy_head(const std::vector<ToyFrame>& frames,
                            const std::vector<Anchor>& anchors,
                            int steps, double lr, double w0 = 100.0) {
    if (frames.empty()) throw std::invalid_argument("fit_toy_head: no frames");
    const auto fdim = frames.front().features.cols();
    ToyHead head;
    head.weights = Eigen::MatrixXd::Zero(fdim, kPredWidth);
    head.bias = Eigen::RowVectorXd::Zero(kPredWidth);
    for (int step = 0; step < steps; ++step) {
        Eigen::MatrixXd gw = Eigen::MatrixXd::Zero(fdim, kPredWidth);
        Eigen::RowVectorXd gb = Eigen::RowVectorXd::Zero(kPredWidth);
        TraceEntry e{step, 0.0, 0.0, 0.0};
        for (const auto& fr : frames) {
            const LossReport rep = total_loss(head.predict(fr.features), anchors, fr.gts, w0);
            e.total += rep.total;
            e.objectiveness += rep.objectiveness;
            e.localization += rep.localization;
            gw += fr.features.transpose() * rep.gradients;
            gb += rep.gradients.colwise().sum();
        }
        if (!std::isfinite(e.total))
            throw std::runtime_error("fit_toy_head: diverged at step " + std::to_string(step));
        head.trace.push_back(e);
        head.weights -= lr * gw;
        head.bias -= lr * gb;
    }
    return head;
}

}  // namespace radar::det
