#pragma once

// Radar DSP chain: raw cube -> range-azimuth maps (FFT beamforming and
// MUSIC), polar -> Cartesian BEV resampling, 2D cell-averaging CFAR, and a
// classical end-to-end box detector built from CFAR clusters.

#include <functional>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "radar/core.hpp"
#include "radar/geometry.hpp"
#include "radar/parallel.hpp"

namespace radar::dsp {

struct MusicParams {
    std::optional<int> num_sources;          // empty = auto via eigenvalue ratio
    double eigenvalue_ratio_threshold = 0.05;
    int azimuth_grid_points = 512;
    bool forward_backward = true;
    double diagonal_loading = 1e-6;          // fraction of trace/N added to the diagonal

    void validate(const RadarConfig& cfg) const {
        if (num_sources && (*num_sources < 1 || *num_sources >= cfg.num_antennas))
            throw std::invalid_argument("MusicParams: num_sources must be < num_antennas");
        if (azimuth_grid_points < 2)
            throw std::invalid_argument("MusicParams: need at least 2 grid points");
        if (diagonal_loading < 0.0)
            throw std::invalid_argument("MusicParams: diagonal_loading must be >= 0");
    }
};

struct CfarParams {
    int train_cells = 8;   // per side
    int guard_cells = 2;   // per side
    double pfa = 1e-3;

    void validate() const {
        if (train_cells < 1 || guard_cells < 0)
            throw std::invalid_argument("CfarParams: train_cells >= 1, guard_cells >= 0");
        if (!(pfa > 0.0) || !(pfa < 1.0))
            throw std::invalid_argument("CfarParams: pfa must lie in (0,1)");
    }
};

inline std::vector<double> hann_window(int n) {
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (n - 1)));
    return w;
}

/// Hann-windowed orthonormal FFT over fast time, per chirp. Each matrix is
/// (range bins x antennas); full=true keeps the entire spectrum instead of
/// the first num_samples/2 range bins.
inline std::vector<Eigen::MatrixXcf> range_fft(const RadarCube& cube, bool full = false) {
    const auto& cfg = cube.config;
    const int ns = cfg.num_samples, na = cfg.num_antennas, nc = cfg.num_chirps;
    if (cube.data.size() != static_cast<size_t>(ns) * na * nc)
        throw std::invalid_argument("range_fft: cube size does not match its config");
    const int nbins = full ? ns : ns / 2;
    const std::vector<double> win = hann_window(ns);
    const float scale = 1.0f / std::sqrt(static_cast<float>(ns));

    std::vector<Eigen::MatrixXcf> out(nc, Eigen::MatrixXcf(nbins, na));
    Eigen::FFT<float> fft;
    std::vector<std::complex<float>> buf(ns), spec(ns);
    for (int c = 0; c < nc; ++c) {
        for (int a = 0; a < na; ++a) {
            const std::complex<float>* src = &cube.data[cube.index(c, a, 0)];
            for (int n = 0; n < ns; ++n) buf[n] = src[n] * static_cast<float>(win[n]);
            fft.fwd(spec, buf);
            for (int r = 0; r < nbins; ++r) out[c](r, a) = spec[r] * scale;
        }
    }
    return out;
}

/// Steering matrix over the sin-space azimuth grid: A(j, k) =
/// exp(i 2 pi d k s_j) with s_j = -1 + 2(j + 0.5)/grid.
inline Eigen::MatrixXcd steering_matrix(int grid, int num_antennas, double spacing) {
    Eigen::MatrixXcd a(grid, num_antennas);
    for (int j = 0; j < grid; ++j) {
        const double s = -1.0 + 2.0 * (j + 0.5) / grid;
        for (int k = 0; k < num_antennas; ++k)
            a(j, k) = std::polar(1.0, 2.0 * kPi * spacing * k * s);
    }
    return a;
}

/// The data-fft format: windowed FFT over fast time, Hann-windowed
/// beamforming over antennas onto the sin-space azimuth grid, magnitudes
/// averaged over chirps.
inline PolarMap range_azimuth_fft(const RadarCube& cube, int azimuth_grid = 512) {
    const auto& cfg = cube.config;
    const auto spectra = range_fft(cube);
    const int nbins = static_cast<int>(spectra.front().rows());
    const int na = cfg.num_antennas;

    const std::vector<double> wa = hann_window(na);
    Eigen::MatrixXcf beam = steering_matrix(azimuth_grid, na, cfg.antenna_spacing)
                                .conjugate()
                                .cast<std::complex<float>>()
                                .transpose();  // na x grid
    for (int k = 0; k < na; ++k)
        beam.row(k) *= static_cast<float>(wa[k] / std::sqrt(double(na)));

    PolarMap map(nbins, azimuth_grid, nbins * cfg.range_resolution, MapFormat::fft);
    map.azimuth_extent = cfg.max_azimuth;
    Eigen::MatrixXf acc = Eigen::MatrixXf::Zero(nbins, azimuth_grid);
    for (const auto& s : spectra) acc += (s * beam).cwiseAbs();
    acc /= static_cast<float>(spectra.size());
    for (int r = 0; r < nbins; ++r)
        for (int j = 0; j < azimuth_grid; ++j) map.at(r, j) = acc(r, j);
    return map;
}

namespace detail {

// Source count from the eigenvalue spectrum (ascending order). A bin with
// no dominant eigenvalue relative to the average counts as pure noise;
// otherwise every eigenvalue above ratio_threshold * lambda_max is signal.
inline int auto_source_count(const Eigen::VectorXd& eigs, double ratio_threshold) {
    constexpr double kNoiseGate = 8.0;  // lambda_max vs mean-of-the-rest gate
    const int n = static_cast<int>(eigs.size());
    const double lmax = eigs(n - 1);
    const double mean_rest = (eigs.sum() - lmax) / (n - 1);
    if (!(lmax > kNoiseGate * mean_rest)) return 0;
    int k = 0;
    for (int i = 0; i < n; ++i)
        if (eigs(i) > ratio_threshold * lmax) ++k;
    return std::min(k, n - 2);
}

}  // namespace detail

/// The data-music format. Per range bin: antenna covariance from chirp
/// snapshots (optionally forward-backward averaged, diagonally loaded),
/// eigendecomposition, noise-subspace selection, MUSIC pseudo-spectrum
/// 1/(a^H En En^H a) on the azimuth grid. Each bin's spectrum is scaled by
/// the bin's mean snapshot power so empty bins stay dark; the result is a
/// rendering quantity, not a power estimate.
inline PolarMap music_map(const RadarCube& cube, const MusicParams& params = {},
                          int workers = 0) {
    const auto& cfg = cube.config;
    params.validate(cfg);
    if (cfg.num_chirps < 2 && !params.forward_backward)
        throw std::invalid_argument("music_map: covariance not estimable "
                                    "(need num_chirps >= 2 or forward_backward)");
    const auto spectra = range_fft(cube);
    const int nbins = static_cast<int>(spectra.front().rows());
    const int na = cfg.num_antennas, nc = cfg.num_chirps;
    const int grid = params.azimuth_grid_points;

    const Eigen::MatrixXcd steer = steering_matrix(grid, na, cfg.antenna_spacing);
    Eigen::MatrixXcd exchange = Eigen::MatrixXcd::Zero(na, na);
    for (int i = 0; i < na; ++i) exchange(i, na - 1 - i) = 1.0;

    PolarMap map(nbins, grid, nbins * cfg.range_resolution, MapFormat::music);
    map.azimuth_extent = cfg.max_azimuth;

    parallel_for(nbins, workers, [&](int r) {
        Eigen::MatrixXcd snaps(na, nc);
        for (int c = 0; c < nc; ++c)
            snaps.col(c) = spectra[c].row(r).transpose().cast<std::complex<double>>();
        if (!snaps.allFinite())
            throw std::invalid_argument("music_map: non-finite input at range bin " +
                                        std::to_string(r));
        Eigen::MatrixXcd cov = snaps * snaps.adjoint() / double(nc);
        const double bin_power = cov.trace().real() / na;
        if (params.forward_backward)
            cov = 0.5 * (cov + exchange * cov.conjugate() * exchange);
        cov += params.diagonal_loading * (cov.trace().real() / na) *
               Eigen::MatrixXcd::Identity(na, na);

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(cov);
        if (eig.info() != Eigen::Success)
            throw std::runtime_error("music_map: eigendecomposition failed at range bin " +
                                     std::to_string(r));
        const int k = params.num_sources
                          ? std::min(*params.num_sources, na - 1)
                          : detail::auto_source_count(eig.eigenvalues(),
                                                      params.eigenvalue_ratio_threshold);
        if (k == 0) {
            // Full noise subspace: a^H I a = N exactly, flat spectrum.
            for (int j = 0; j < grid; ++j) map.at(r, j) = static_cast<float>(bin_power / na);
            return;
        }
        const Eigen::MatrixXcd signal_basis = eig.eigenvectors().rightCols(k);
        const Eigen::MatrixXd proj =
            (steer * signal_basis.conjugate()).cwiseAbs2().rowwise().sum();
        for (int j = 0; j < grid; ++j) {
            const double denom = std::max(na - proj(j), 1e-9 * na);
            map.at(r, j) = static_cast<float>(bin_power / denom);
        }
    });
    return map;
}

struct BevParams {
    double extent_forward = 40.0;
    double extent_left = 40.0;
    double extent_right = 40.0;
    double meters_per_pixel = 0.2;
};

/// The img-fft / img-music formats: per BEV pixel, bilinear interpolation
/// of the polar map at (range, azimuth); zero outside the field of view.
inline BevImage polar_to_cartesian(const PolarMap& map, const BevParams& params = {}) {
    if (!(params.meters_per_pixel > 0.0))
        throw std::invalid_argument("polar_to_cartesian: resolution must be positive");
    BevImage bev(params.extent_forward, params.extent_left, params.extent_right,
                 params.meters_per_pixel);
    const int nr = map.num_range_bins, na = map.num_azimuth_bins;
    for (int r = 0; r < bev.rows; ++r) {
        const double x = bev.pixel_x(r);
        for (int c = 0; c < bev.cols; ++c) {
            const double y = bev.pixel_y(c);
            const double range = std::hypot(x, y);
            const double azimuth = std::atan2(y, x);
            if (range >= map.range_extent || std::abs(azimuth) > map.azimuth_extent) continue;
            const double fr = map.range_to_bin(range);
            const double fa = std::clamp(map.azimuth_to_bin(azimuth), 0.0, double(na - 1));
            const int r0 = std::min(static_cast<int>(fr), nr - 2);
            const int a0 = std::min(static_cast<int>(fa), na - 2);
            const double tr = fr - r0, ta = fa - a0;
            bev.at(r, c) = static_cast<float>(
                (1 - tr) * ((1 - ta) * map.at(r0, a0) + ta * map.at(r0, a0 + 1)) +
                tr * ((1 - ta) * map.at(r0 + 1, a0) + ta * map.at(r0 + 1, a0 + 1)));
        }
    }
    return bev;
}

struct CfarDetection {
    int range_bin = 0;     // row
    int azimuth_bin = 0;   // column
    double snr = 0.0;      // cell value over training mean
};

/// 2D cell-averaging CFAR on a power-domain map. Cell fires when
/// value > alpha * mean(training ring), alpha = N (pfa^(-1/N) - 1) under
/// the exponential noise model. Cells whose window leaves the map are
/// skipped. Magnitude maps should be squared before calling.
inline std::vector<CfarDetection> ca_cfar_detect(const std::vector<float>& values,
                                                 int rows, int cols,
                                                 const CfarParams& params) {
    params.validate();
    const int t = params.train_cells, g = params.guard_cells;
    const int half = t + g;
    if (rows <= 2 * half || cols <= 2 * half)
        throw std::invalid_argument("ca_cfar_detect: window larger than map");

    const int num_train = (2 * half + 1) * (2 * half + 1) - (2 * g + 1) * (2 * g + 1);
    const double alpha = num_train * (std::pow(params.pfa, -1.0 / num_train) - 1.0);

    // Summed-area table, one guard row/col of zeros at the top/left.
    std::vector<double> sat(static_cast<size_t>(rows + 1) * (cols + 1), 0.0);
    const auto at_sat = [&](int r, int c) -> double& {
        return sat[static_cast<size_t>(r) * (cols + 1) + c];
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            at_sat(r + 1, c + 1) = values[static_cast<size_t>(r) * cols + c] +
                                   at_sat(r, c + 1) + at_sat(r + 1, c) - at_sat(r, c);
    const auto block_sum = [&](int r0, int c0, int r1, int c1) {  // inclusive corners
        return at_sat(r1 + 1, c1 + 1) - at_sat(r0, c1 + 1) - at_sat(r1 + 1, c0) + at_sat(r0, c0);
    };

    std::vector<CfarDetection> dets;
    for (int r = half; r < rows - half; ++r)
        for (int c = half; c < cols - half; ++c) {
            const double ring = block_sum(r - half, c - half, r + half, c + half) -
                                block_sum(r - g, c - g, r + g, c + g);
            const double mean = ring / num_train;
            const double v = values[static_cast<size_t>(r) * cols + c];
            if (mean > 0.0 ? v > alpha * mean : v > 0.0)
                dets.push_back({r, c, mean > 0.0 ? v / mean : std::numeric_limits<double>::infinity()});
        }
    return dets;
}

inline std::vector<CfarDetection> ca_cfar_detect(const PolarMap& map, const CfarParams& params) {
    return ca_cfar_detect(map.values, map.num_range_bins, map.num_azimuth_bins, params);
}
inline std::vector<CfarDetection> ca_cfar_detect(const BevImage& bev, const CfarParams& params) {
    return ca_cfar_detect(bev.values, bev.rows, bev.cols, params);
}

namespace detail {

// Monotone-chain convex hull (CCW, no duplicates).
inline std::vector<geom::Vec2> convex_hull(std::vector<geom::Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const geom::Vec2& a, const geom::Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const geom::Vec2& a, const geom::Vec2& b) {
                              return a.x == b.x && a.y == b.y;
                          }),
              pts.end());
    const size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<geom::Vec2> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && geom::cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    for (size_t i = n - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && geom::cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Minimum-area oriented rectangle over a hull (rotating calipers flavor:
// one rectangle side is collinear with some hull edge).
inline OrientedBox min_area_rect(const std::vector<geom::Vec2>& hull) {
    if (hull.size() < 3) throw std::invalid_argument("min_area_rect: degenerate hull");
    double best_area = std::numeric_limits<double>::infinity();
    OrientedBox best;
    for (size_t e = 0; e < hull.size(); ++e) {
        const geom::Vec2 a = hull[e], b = hull[(e + 1) % hull.size()];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len < 1e-12) continue;
        const geom::Vec2 dir{(b.x - a.x) / len, (b.y - a.y) / len};
        const geom::Vec2 nrm{-dir.y, dir.x};
        double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
        for (const auto& p : hull) {
            const double u = p.x * dir.x + p.y * dir.y;
            const double v = p.x * nrm.x + p.y * nrm.y;
            umin = std::min(umin, u); umax = std::max(umax, u);
            vmin = std::min(vmin, v); vmax = std::max(vmax, v);
        }
        const double du = umax - umin, dv = vmax - vmin;
        if (du * dv < best_area) {
            best_area = du * dv;
            const double cu = 0.5 * (umin + umax), cv = 0.5 * (vmin + vmax);
            best.cx = cu * dir.x + cv * nrm.x;
            best.cy = cu * dir.y + cv * nrm.y;
            // Heading along the longer side.
            if (du >= dv) {
                best.h = du; best.w = dv;
                best.theta = wrap_angle(std::atan2(dir.y, dir.x));
            } else {
                best.h = dv; best.w = du;
                best.theta = wrap_angle(std::atan2(nrm.y, nrm.x));
            }
        }
    }
    return best;
}

// Metric single-linkage clustering over sparse detected cells: cells whose
// centers lie within link_meters join one cluster. Boxes come from the
// minimum oriented rectangle of each cluster's cell footprints.
// cell_corners(det) yields the four metric corners of a detected cell;
// the cell center is their mean.
template <typename CornerFn>
std::vector<OrientedBox> boxes_from_cfar(const std::vector<CfarDetection>& dets,
                                         double alpha_relative_energy_floor,
                                         CornerFn cell_corners, double link_meters) {
    if (dets.empty()) return {};
    const int n = static_cast<int>(dets.size());
    std::vector<geom::Vec2> center(n);
    std::vector<std::array<geom::Vec2, 4>> corners(n);
    for (int i = 0; i < n; ++i) {
        corners[i] = cell_corners(dets[i]);
        geom::Vec2 c{0.0, 0.0};
        for (const auto& p : corners[i]) c = c + p;
        center[i] = (1.0 / 4.0) * c;
    }

    // Union-find over the link graph.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    const double link2 = link_meters * link_meters;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dx = center[i].x - center[j].x, dy = center[i].y - center[j].y;
            if (dx * dx + dy * dy <= link2) parent[find(i)] = find(j);
        }

    std::map<int, int> root_to_cluster;
    std::vector<std::vector<geom::Vec2>> pts;
    std::vector<double> energy;
    for (int i = 0; i < n; ++i) {
        const int root = find(i);
        auto [it, fresh] = root_to_cluster.emplace(root, static_cast<int>(pts.size()));
        if (fresh) { pts.emplace_back(); energy.push_back(0.0); }
        const int c = it->second;
        for (const auto& corner : corners[i]) pts[c].push_back(corner);
        // CFAR-normalized cell energy: how far above the adaptive floor.
        energy[c] += std::max(0.0, dets[i].snr / alpha_relative_energy_floor - 1.0);
    }
    std::vector<OrientedBox> boxes;
    for (size_t c = 0; c < pts.size(); ++c) {
        OrientedBox b = min_area_rect(convex_hull(pts[c]));
        b.score = energy[c] / (energy[c] + 1.0);
        boxes.push_back(b);
    }
    return boxes;
}

inline double cfar_alpha(const CfarParams& p) {
    const int half = p.train_cells + p.guard_cells;
    const int n = (2 * half + 1) * (2 * half + 1) - (2 * p.guard_cells + 1) * (2 * p.guard_cells + 1);
    return n * (std::pow(p.pfa, -1.0 / n) - 1.0);
}

}  // namespace detail

/// Classical end-to-end detector on a BEV image: CFAR on the squared
/// intensities, metric single-linkage clustering, minimum-area oriented
/// rectangle per cluster. Scores saturate the cluster's CFAR-normalized
/// energy into (0, 1), so single-cell noise survivors stay weak.
inline DetectionSet baseline_detect_boxes(const BevImage& bev, const CfarParams& params,
                                          std::int64_t frame_id = 0, double link_meters = 1.5) {
    std::vector<float> power(bev.values.size());
    for (size_t i = 0; i < power.size(); ++i) power[i] = bev.values[i] * bev.values[i];
    const auto cells = ca_cfar_detect(power, bev.rows, bev.cols, params);
    const double mpp = bev.meters_per_pixel;
    auto corners = [&](const CfarDetection& d) {
        const double x = bev.pixel_x(d.range_bin), y = bev.pixel_y(d.azimuth_bin);
        const double h = 0.5 * mpp;
        return std::array<geom::Vec2, 4>{{{x - h, y - h}, {x - h, y + h},
                                          {x + h, y - h}, {x + h, y + h}}};
    };
    DetectionSet out{frame_id,
                     detail::boxes_from_cfar(cells, detail::cfar_alpha(params), corners, link_meters)};
    return out;
}

/// Same detector operating directly on a polar map; cluster cells are
/// mapped to Cartesian space before the rectangle fit, so output boxes are
/// metric BEV like everything else.
inline DetectionSet detect_boxes_polar(const PolarMap& map, const CfarParams& params,
                                       std::int64_t frame_id = 0, double link_meters = 1.5) {
    std::vector<float> power(map.values.size());
    for (size_t i = 0; i < power.size(); ++i) power[i] = map.values[i] * map.values[i];
    const auto cells = ca_cfar_detect(power, map.num_range_bins, map.num_azimuth_bins, params);
    const double dr = map.range_extent / map.num_range_bins;
    auto corners = [&](const CfarDetection& d) {
        std::array<geom::Vec2, 4> out;
        int i = 0;
        for (int er = 0; er < 2; ++er)
            for (int ea = 0; ea < 2; ++ea) {
                const double range = map.range_at(d.range_bin) + (er - 0.5) * dr;
                const double sin_az = std::clamp(
                    map.sin_azimuth_at(d.azimuth_bin) + (ea - 0.5) * 2.0 / map.num_azimuth_bins,
                    -1.0, 1.0);
                const double az = std::asin(sin_az);
                out[i++] = {range * std::cos(az), range * std::sin(az)};
            }
        return out;
    };
    DetectionSet out{frame_id,
                     detail::boxes_from_cfar(cells, detail::cfar_alpha(params), corners, link_meters)};
    return out;
}

}  // namespace radar::dsp
