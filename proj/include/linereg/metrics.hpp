#pragma once

// Trajectory error metrics: relative pose error between successive frames and
// KITTI-style errors over sub-trajectories of fixed arc length.

#include "linereg/errors.hpp"
#include "linereg/geometry.hpp"
#include "linereg/trajectory.hpp"

#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace linereg {

struct PoseError {
    double translation_err = 0.0; ///< m
    double rotation_err = 0.0;    ///< degrees, in [0, 180]
};

/// Error of an estimated transform against the true one: E = gt^-1 * est.
inline PoseError pose_error(const RigidTransform &est, const RigidTransform &gt) {
    const RigidTransform E = gt.inverse() * est;
    return {E.translation.norm(), rad2deg(rotation_distance(gt.rotation, est.rotation))};
}

struct RpeReport {
    std::vector<PoseError> steps; ///< steps[k-1] compares frame k-1 -> k
    double mean_translation = 0.0;
    double mean_rotation = 0.0;
    double max_translation = 0.0;
    double max_rotation = 0.0;
};

/// Per-step error of the relative motion between successive frames, with
/// frames associated by index.
inline RpeReport relative_pose_error(const Trajectory &traj, const Trajectory &gt) {
    if (traj.size() != gt.size())
        throw InvalidInput("relative_pose_error: trajectories have " + std::to_string(traj.size()) + " and " +
                           std::to_string(gt.size()) + " poses");
    RpeReport rep;
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const RigidTransform est_rel = traj[k - 1].inverse() * traj[k];
        const RigidTransform gt_rel = gt[k - 1].inverse() * gt[k];
        const PoseError e = pose_error(est_rel, gt_rel);
        rep.steps.push_back(e);
        rep.mean_translation += e.translation_err;
        rep.mean_rotation += e.rotation_err;
        rep.max_translation = std::max(rep.max_translation, e.translation_err);
        rep.max_rotation = std::max(rep.max_rotation, e.rotation_err);
    }
    if (!rep.steps.empty()) {
        rep.mean_translation /= static_cast<double>(rep.steps.size());
        rep.mean_rotation /= static_cast<double>(rep.steps.size());
    }
    return rep;
}

struct SegmentErrorConfig {
    std::vector<double> lengths = {100, 200, 300, 400, 500, 600, 700, 800}; ///< m
    std::size_t step = 1; ///< start-frame stride

    /// lengths scaled by `factor`, e.g. 0.01 for 1..8 m.
    static SegmentErrorConfig scaled(double factor) {
        SegmentErrorConfig c;
        for (double &l : c.lengths)
            l *= factor;
        return c;
    }
};

struct SegmentErrors {
    double translation_percent = 0.0; ///< mean over segments of |t_err| / L * 100
    double rotation_deg_per_m = 0.0;  ///< mean over segments of angle_err / L
    std::size_t segments = 0;
};

/// Cumulative arc length of the ground-truth positions.
inline std::vector<double> trajectory_distances(const Trajectory &gt) {
    std::vector<double> d(gt.size(), 0.0);
    for (std::size_t k = 1; k < gt.size(); ++k)
        d[k] = d[k - 1] + (gt[k].translation - gt[k - 1].translation).norm();
    return d;
}

/// For every start frame (every `step`-th) and every length L, the segment
/// ends at the first frame whose ground-truth arc length from the start
/// reaches L. The error of the segment is E = est_delta^-1 * gt_delta with
/// deltas taken between start and end frames; translation and rotation
/// errors are divided by L. Returns nullopt when no segment fits.
inline std::optional<SegmentErrors> kitti_segment_errors(const Trajectory &traj, const Trajectory &gt,
                                                         const SegmentErrorConfig &cfg = {}) {
    if (traj.size() != gt.size())
        throw InvalidInput("kitti_segment_errors: trajectories differ in length");
    if (cfg.step < 1)
        throw InvalidInput("kitti_segment_errors: step must be >= 1");
    const std::vector<double> dist = trajectory_distances(gt);
    SegmentErrors out;
    for (std::size_t first = 0; first < gt.size(); first += cfg.step) {
        for (double len : cfg.lengths) {
            if (!(len > 0.0))
                throw InvalidInput("kitti_segment_errors: segment lengths must be positive");
            std::size_t last = first;
            while (last < gt.size() && dist[last] < dist[first] + len)
                ++last;
            if (last >= gt.size())
                continue;
            const RigidTransform gt_delta = gt[first].inverse() * gt[last];
            const RigidTransform est_delta = traj[first].inverse() * traj[last];
            const RigidTransform E = est_delta.inverse() * gt_delta;
            out.translation_percent += E.translation.norm() / len;
            out.rotation_deg_per_m += rad2deg(rotation_distance(est_delta.rotation, gt_delta.rotation)) / len;
            ++out.segments;
        }
    }
    if (out.segments == 0)
        return std::nullopt;
    out.translation_percent *= 100.0 / static_cast<double>(out.segments);
    out.rotation_deg_per_m /= static_cast<double>(out.segments);
    return out;
}

inline void write_rpe_csv(std::ostream &os, const RpeReport &rep) {
    os << "step,translation_err_m,rotation_err_deg\n" << std::setprecision(12);
    for (std::size_t k = 0; k < rep.steps.size(); ++k)
        os << k + 1 << ',' << rep.steps[k].translation_err << ',' << rep.steps[k].rotation_err << '\n';
}

/// One row of the summary table.
struct SummaryRow {
    std::string name;
    RpeReport rpe;
};

/// Fixed-width table: mean/max translation [m] and rotation [deg] per row.
inline void write_summary_table(std::ostream &os, const std::vector<SummaryRow> &rows) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << std::left << std::setw(16) << "sequence" << std::right << std::setw(16) << "mean tra. [m]" << std::setw(16)
       << "mean rot. [deg]" << std::setw(16) << "max tra. [m]" << std::setw(16) << "max rot. [deg]" << '\n';
    os << std::fixed << std::setprecision(4);
    for (const auto &r : rows)
        os << std::left << std::setw(16) << r.name << std::right << std::setw(16) << r.rpe.mean_translation
           << std::setw(16) << r.rpe.mean_rotation << std::setw(16) << r.rpe.max_translation << std::setw(16)
           << r.rpe.max_rotation << '\n';
    os.flags(flags);
    os.precision(prec);
}

} // namespace linereg
