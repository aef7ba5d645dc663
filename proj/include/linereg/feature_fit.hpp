#pragma once

// Piecewise-linear modelling of scan-lines (H-lines from rows, V-lines from
// columns), plane extraction and per-line surface normals.

#include "linereg/geometry.hpp"
#include "linereg/parallel.hpp"
#include "linereg/scan_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

namespace linereg {

/// Which scan-line a line was fitted on. Says nothing about its 3D direction.
enum class ScanOrientation { horizontal, vertical };

struct ScanLineId {
    ScanOrientation orientation = ScanOrientation::horizontal;
    std::size_t index = 0;

    friend bool operator==(const ScanLineId &, const ScanLineId &) = default;
};

/// Present points of one row (horizontal) or column (vertical), ordered by
/// their position along the scan-line.
struct ScanLine {
    ScanOrientation orientation = ScanOrientation::horizontal;
    std::size_t index = 0;
    std::vector<std::pair<std::size_t, Vec3>> points;
};

inline ScanLine extract_scanline(const OrganizedCloud &cloud, ScanOrientation o, std::size_t index) {
    ScanLine line{o, index, {}};
    if (o == ScanOrientation::horizontal) {
        for (std::size_t c = 0; c < cloud.cols; ++c)
            if (const auto &p = cloud.at(index, c))
                line.points.emplace_back(c, *p);
    } else {
        for (std::size_t r = 0; r < cloud.rows; ++r)
            if (const auto &p = cloud.at(r, index))
                line.points.emplace_back(r, *p);
    }
    return line;
}

struct FittedLine {
    LineSegment3D segment;
    PluckerLine plucker;
    ScanOrientation orientation = ScanOrientation::horizontal;
    std::optional<Vec3> normal;
    std::size_t inlier_count = 0;
    ScanLineId source;
    std::vector<std::size_t> inlier_positions; ///< grid positions along the scan-line

    FittedLine(const LineSegment3D &seg, ScanLineId src)
        : segment(seg), plucker(plucker_from_segment(seg)), orientation(src.orientation), source(src) {}
};

struct FittedPlane {
    Plane plane;
    Vec3 centroid = Vec3::Zero();
    std::size_t inlier_count = 0;
};

struct LineFitParams {
    double inlier_dist = 0.05;
    std::size_t min_inliers = 5;
    std::size_t gap_cells = 3;
    double confidence = 0.99;
    std::size_t max_iterations = 200;
    std::uint64_t seed = 0;
};

struct PlaneFitParams {
    double inlier_dist = 0.05;
    std::size_t min_plane_inliers = 200;
    std::size_t max_planes = 10;
    double confidence = 0.99;
    std::size_t max_iterations = 1000;
    std::uint64_t seed = 0;
};

struct NormalParams {
    double pair_dist = 0.10;
    double min_angle_deg = 10.0;
};

/// Fitting thresholds for one sensor class.
struct FeatureParams {
    LineFitParams lines;
    PlaneFitParams planes;
    NormalParams normals;

    static FeatureParams lidar(std::size_t downsample_factor = 1) { return make(0.05, downsample_factor); }
    static FeatureParams depth_camera(std::size_t downsample_factor = 1) { return make(0.01, downsample_factor); }

    static FeatureParams make(double inlier_dist, std::size_t downsample_factor) {
        FeatureParams p;
        p.lines.inlier_dist = inlier_dist;
        p.planes.inlier_dist = inlier_dist;
        p.planes.min_plane_inliers = std::max<std::size_t>(200 / std::max<std::size_t>(downsample_factor, 1), 20);
        p.normals.pair_dist = 2.0 * inlier_dist;
        return p;
    }

    void set_seed(std::uint64_t seed) {
        lines.seed = seed;
        planes.seed = mix_seed(seed, 0x706c616e65ULL);
    }
};

namespace detail {

/// Total-least-squares line through a point set: (centroid, unit direction).
inline std::pair<Vec3, Vec3> fit_line_lsq(const std::vector<Vec3> &pts) {
    Vec3 c = Vec3::Zero();
    for (const Vec3 &p : pts)
        c += p;
    c /= static_cast<double>(pts.size());
    Mat3 S = Mat3::Zero();
    for (const Vec3 &p : pts)
        S.noalias() += (p - c) * (p - c).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(S);
    return {c, es.eigenvectors().col(2)};
}

/// Total-least-squares plane: (centroid, unit normal).
inline std::pair<Vec3, Vec3> fit_plane_lsq(const std::vector<Vec3> &pts) {
    Vec3 c = Vec3::Zero();
    for (const Vec3 &p : pts)
        c += p;
    c /= static_cast<double>(pts.size());
    Mat3 S = Mat3::Zero();
    for (const Vec3 &p : pts)
        S.noalias() += (p - c) * (p - c).transpose();
    Eigen::SelfAdjointEigenSolver<Mat3> es(S);
    return {c, es.eigenvectors().col(0)};
}

inline double point_line_distance(const Vec3 &p, const Vec3 &origin, const Vec3 &dir) {
    return (p - origin).cross(dir).norm();
}

/// A stretch [first, last) of a run whose points are unclaimed and mostly
/// within distance of a line: it starts and ends on inliers and contains no
/// more than `max_gap` consecutive outliers.
struct Block {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t inliers = 0;

    bool operator==(const Block &) const = default;
};

/// Block with the most inliers. With `overlap` set, only blocks intersecting
/// [overlap->first, overlap->last) are considered.
inline Block longest_block(const std::vector<Vec3> &run, const std::vector<char> &claimed, const Vec3 &origin,
                           const Vec3 &dir, double dist, std::size_t max_gap, std::optional<Block> overlap = {}) {
    Block best, cur;
    bool open = false;
    std::size_t streak = 0;
    auto close = [&] {
        if (!open)
            return;
        open = false;
        if (overlap && (cur.last <= overlap->first || cur.first >= overlap->last))
            return;
        // Majority support: at least half of the block are inliers.
        if (2 * cur.inliers < cur.last - cur.first)
            return;
        if (cur.inliers > best.inliers)
            best = cur;
    };
    for (std::size_t k = 0; k < run.size(); ++k) {
        if (claimed[k]) {
            close();
            continue;
        }
        const bool in = point_line_distance(run[k], origin, dir) <= dist;
        if (in) {
            if (!open) {
                open = true;
                cur = {k, k + 1, 1};
            } else {
                cur.last = k + 1;
                ++cur.inliers;
            }
            streak = 0;
        } else if (open && ++streak > max_gap) {
            close();
        }
    }
    close();
    return best;
}

inline std::vector<Vec3> block_inliers(const std::vector<Vec3> &run, const Block &b, const Vec3 &origin,
                                       const Vec3 &dir, double dist) {
    std::vector<Vec3> pts;
    for (std::size_t k = b.first; k < b.last; ++k)
        if (point_line_distance(run[k], origin, dir) <= dist)
            pts.push_back(run[k]);
    return pts;
}

inline std::size_t ransac_iterations(double inlier_ratio, std::size_t sample_size, double confidence,
                                     std::size_t cap) {
    const double w = std::pow(std::clamp(inlier_ratio, 0.0, 1.0), static_cast<double>(sample_size));
    if (w <= 0.0)
        return cap;
    if (w >= 1.0)
        return 1;
    const double n = std::log(1.0 - confidence) / std::log(1.0 - w);
    if (!std::isfinite(n) || n >= static_cast<double>(cap))
        return cap;
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n)));
}

} // namespace detail

/// Sequential RANSAC over one scan-line. The scan-line is first split where
/// more than gap_cells consecutive cells are absent; within each run a line is
/// hypothesised from 2-point samples and scored by the inliers of its best
/// block, a stretch that is mostly inliers with at most gap_cells consecutive
/// outliers. Accepted blocks are refined by total least squares, claimed
/// (tolerated outliers included), and the search repeats on the rest.
inline std::vector<FittedLine> fit_scanline_segments(const ScanLine &line, const LineFitParams &params) {
    std::vector<FittedLine> out;
    const std::size_t min_in = std::max<std::size_t>(params.min_inliers, 2);
    if (line.points.size() < min_in)
        return out;

    std::mt19937_64 rng(mix_seed(params.seed, static_cast<std::uint64_t>(line.orientation), line.index));
    const ScanLineId src{line.orientation, line.index};
    const std::size_t gap = params.gap_cells;

    std::size_t run_begin = 0;
    while (run_begin < line.points.size()) {
        std::size_t run_end = run_begin + 1;
        while (run_end < line.points.size() &&
               line.points[run_end].first - line.points[run_end - 1].first - 1 <= params.gap_cells)
            ++run_end;

        std::vector<Vec3> run;
        std::vector<std::size_t> positions;
        for (std::size_t k = run_begin; k < run_end; ++k) {
            run.push_back(line.points[k].second);
            positions.push_back(line.points[k].first);
        }
        run_begin = run_end;
        if (run.size() < min_in)
            continue;

        std::vector<char> claimed(run.size(), 0);
        while (true) {
            std::vector<std::size_t> free;
            for (std::size_t k = 0; k < run.size(); ++k)
                if (!claimed[k])
                    free.push_back(k);
            if (free.size() < min_in)
                break;

            detail::Block best_block;
            Vec3 best_origin = Vec3::Zero();
            Vec3 best_dir = Vec3::UnitX();
            std::size_t needed = params.max_iterations;
            std::uniform_int_distribution<std::size_t> pick(0, free.size() - 1);
            for (std::size_t it = 0; it < needed; ++it) {
                const std::size_t i = free[pick(rng)];
                const std::size_t j = free[pick(rng)];
                if (i == j)
                    continue;
                const Vec3 d = run[j] - run[i];
                const double len = d.norm();
                if (len < 1e-12)
                    continue;
                const Vec3 dir = d / len;
                const auto block = detail::longest_block(run, claimed, run[i], dir, params.inlier_dist, gap);
                if (block.inliers > best_block.inliers) {
                    best_block = block;
                    best_origin = run[i];
                    best_dir = dir;
                    needed = std::min(needed, detail::ransac_iterations(static_cast<double>(block.inliers) /
                                                                            static_cast<double>(free.size()),
                                                                        2, params.confidence, params.max_iterations));
                }
            }
            if (best_block.inliers < min_in)
                break;

            // Refine: refit on the block's inliers, then re-grow the block around it.
            auto block = best_block;
            Vec3 origin = best_origin;
            Vec3 dir = best_dir;
            for (int refine = 0; refine < 3; ++refine) {
                const auto pts = detail::block_inliers(run, block, origin, dir, params.inlier_dist);
                const auto [c, d] = detail::fit_line_lsq(pts);
                const auto grown = detail::longest_block(run, claimed, c, d, params.inlier_dist, gap, block);
                if (grown.inliers < min_in)
                    break;
                origin = c;
                dir = d;
                const bool stable = grown == block;
                block = grown;
                if (stable)
                    break;
            }
            // Final membership is always taken against the line being reported.
            block = detail::longest_block(run, claimed, origin, dir, params.inlier_dist, gap, block);
            if (block.inliers < min_in) {
                block = best_block;
                origin = best_origin;
                dir = best_dir;
            }

            double tmin = std::numeric_limits<double>::infinity();
            double tmax = -tmin;
            std::vector<std::size_t> members;
            for (std::size_t k = block.first; k < block.last; ++k) {
                claimed[k] = 1;
                if (detail::point_line_distance(run[k], origin, dir) > params.inlier_dist)
                    continue;
                const double t = (run[k] - origin).dot(dir);
                tmin = std::min(tmin, t);
                tmax = std::max(tmax, t);
                members.push_back(k);
            }
            if (tmax - tmin < 1e-9)
                continue;
            FittedLine fl(LineSegment3D(origin + tmin * dir, origin + tmax * dir), src);
            fl.inlier_count = members.size();
            for (std::size_t k : members)
                fl.inlier_positions.push_back(positions[k]);
            out.push_back(std::move(fl));
        }
    }
    return out;
}

/// Sequential RANSAC plane extraction over the present points of a cloud.
/// Normals are oriented so the sensor origin lies on the positive side.
inline std::vector<FittedPlane> fit_planes(const OrganizedCloud &cloud, const PlaneFitParams &params) {
    std::vector<FittedPlane> planes;
    std::vector<Vec3> remaining = cloud.present_points();
    std::mt19937_64 rng(mix_seed(params.seed, 0x504cULL));
    const std::size_t min_in = std::max<std::size_t>(params.min_plane_inliers, 3);

    auto collect = [&](const Vec3 &n, double off, std::vector<char> *mask) {
        std::size_t count = 0;
        for (std::size_t k = 0; k < remaining.size(); ++k) {
            const bool in = std::abs(n.dot(remaining[k]) + off) <= params.inlier_dist;
            count += in;
            if (mask)
                (*mask)[k] = in;
        }
        return count;
    };

    while (planes.size() < params.max_planes && remaining.size() >= min_in) {
        std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
        std::size_t best_count = 0;
        Vec3 best_n = Vec3::UnitZ();
        double best_off = 0.0;
        std::size_t needed = params.max_iterations;
        for (std::size_t it = 0; it < needed; ++it) {
            const Vec3 &p0 = remaining[pick(rng)];
            const Vec3 &p1 = remaining[pick(rng)];
            const Vec3 &p2 = remaining[pick(rng)];
            const Vec3 n = (p1 - p0).cross(p2 - p0);
            const double nn = n.norm();
            if (nn < 1e-12)
                continue;
            const Vec3 u = n / nn;
            const double off = -u.dot(p0);
            const std::size_t count = collect(u, off, nullptr);
            if (count > best_count) {
                best_count = count;
                best_n = u;
                best_off = off;
                needed = std::min(needed, detail::ransac_iterations(static_cast<double>(count) /
                                                                        static_cast<double>(remaining.size()),
                                                                    3, params.confidence, params.max_iterations));
            }
        }
        if (best_count < min_in)
            break;

        std::vector<char> mask(remaining.size(), 0);
        Vec3 n = best_n;
        double off = best_off;
        Vec3 centroid = Vec3::Zero();
        std::size_t count = collect(n, off, &mask);
        for (int refine = 0; refine < 3; ++refine) {
            std::vector<Vec3> inliers;
            for (std::size_t k = 0; k < remaining.size(); ++k)
                if (mask[k])
                    inliers.push_back(remaining[k]);
            const auto [c, normal] = detail::fit_plane_lsq(inliers);
            std::vector<char> next(remaining.size(), 0);
            const std::size_t next_count = collect(normal, -normal.dot(c), &next);
            if (next_count < min_in)
                break;
            n = normal;
            off = -normal.dot(c);
            centroid = c;
            const bool stable = next == mask;
            mask = std::move(next);
            count = next_count;
            if (stable)
                break;
        }
        if (centroid.isZero()) {
            std::vector<Vec3> inliers;
            for (std::size_t k = 0; k < remaining.size(); ++k)
                if (mask[k])
                    inliers.push_back(remaining[k]);
            for (const Vec3 &p : inliers)
                centroid += p;
            centroid /= static_cast<double>(inliers.size());
        }
        if (off < 0.0) {
            n = -n;
            off = -off;
        }
        planes.push_back({Plane{n, off}, centroid, count});

        std::vector<Vec3> rest;
        rest.reserve(remaining.size() - count);
        for (std::size_t k = 0; k < remaining.size(); ++k)
            if (!mask[k])
                rest.push_back(remaining[k]);
        remaining = std::move(rest);
    }
    return planes;
}

/// Sign convention for normals: positive z; if z vanishes, positive y; then x.
inline Vec3 canonicalize_normal(const Vec3 &n) {
    constexpr double eps = 1e-12;
    const double key = std::abs(n.z()) > eps ? n.z() : (std::abs(n.y()) > eps ? n.y() : n.x());
    return key < 0.0 ? Vec3(-n) : n;
}

/// Normals from H/V line pairs of one frame: each line takes the normal of the
/// plane spanned by itself and its nearest partner of the other orientation
/// (segment distance <= pair_dist, crossing angle >= min_angle_deg).
inline void estimate_line_normals(std::vector<FittedLine> &h_lines, std::vector<FittedLine> &v_lines,
                                  const NormalParams &params) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const double min_sin = std::sin(deg2rad(params.min_angle_deg));
    std::vector<double> best_h(h_lines.size(), inf);
    std::vector<double> best_v(v_lines.size(), inf);
    std::vector<std::optional<Vec3>> normal_h(h_lines.size());
    std::vector<std::optional<Vec3>> normal_v(v_lines.size());

    for (std::size_t i = 0; i < h_lines.size(); ++i) {
        const auto &hs = h_lines[i].segment;
        const Vec3 hm = hs.midpoint();
        const double hr = 0.5 * hs.length();
        for (std::size_t j = 0; j < v_lines.size(); ++j) {
            const auto &vs = v_lines[j].segment;
            if ((vs.midpoint() - hm).norm() - hr - 0.5 * vs.length() > params.pair_dist)
                continue;
            const Vec3 c = h_lines[i].plucker.direction.cross(v_lines[j].plucker.direction);
            const double s = c.norm();
            if (s < min_sin)
                continue;
            const double d = segment_distance(hs, vs);
            if (d > params.pair_dist)
                continue;
            const Vec3 n = canonicalize_normal(c / s);
            if (d < best_h[i]) {
                best_h[i] = d;
                normal_h[i] = n;
            }
            if (d < best_v[j]) {
                best_v[j] = d;
                normal_v[j] = n;
            }
        }
    }
    for (std::size_t i = 0; i < h_lines.size(); ++i)
        h_lines[i].normal = normal_h[i];
    for (std::size_t j = 0; j < v_lines.size(); ++j)
        v_lines[j].normal = normal_v[j];
}

/// All features of one frame.
struct FrameFeatures {
    std::vector<FittedLine> h_lines;
    std::vector<FittedLine> v_lines;
    std::vector<FittedPlane> planes;
};

inline FrameFeatures extract_features(const OrganizedCloud &cloud, const FeatureParams &params, bool with_planes = true,
                                      unsigned threads = 0) {
    FrameFeatures f;
    std::vector<std::vector<FittedLine>> rows(cloud.rows);
    std::vector<std::vector<FittedLine>> cols(cloud.cols);
    parallel_for(
        cloud.rows + cloud.cols,
        [&](std::size_t k) {
            if (k < cloud.rows)
                rows[k] = fit_scanline_segments(extract_scanline(cloud, ScanOrientation::horizontal, k), params.lines);
            else
                cols[k - cloud.rows] = fit_scanline_segments(
                    extract_scanline(cloud, ScanOrientation::vertical, k - cloud.rows), params.lines);
        },
        threads);
    for (auto &r : rows)
        for (auto &l : r)
            f.h_lines.push_back(std::move(l));
    for (auto &c : cols)
        for (auto &l : c)
            f.v_lines.push_back(std::move(l));
    estimate_line_normals(f.h_lines, f.v_lines, params.normals);
    if (with_planes)
        f.planes = fit_planes(cloud, params.planes);
    return f;
}

} // namespace linereg
