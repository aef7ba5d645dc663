#pragma once

// Alternating projection between the intersection constraint (corresponding
// segments from two frames must meet) and the rigidity constraint (each
// frame's endpoints move as one rigid body).

#include "linereg/errors.hpp"
#include "linereg/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <vector>

namespace linereg {

struct ApConfig {
    double epsilon = 0.005;       ///< stop when the max endpoint update of a sweep drops below this (m)
    std::size_t max_iters = 30000; ///< sweeps
    double relaxation = 1.0;      ///< lambda in (0, 2]; 1 is the plain projection
    bool final_polish = false;    ///< refit the pose on the last intersection-projected endpoints
    double satisfied_dist = 0.01; ///< a pair counts as satisfied if its segments come this close (m)
    double min_conditioning = 1e-4; ///< below this the pose is reported as not unique

    static ApConfig depth_camera() { return {}; }
    static ApConfig lidar() {
        ApConfig c;
        c.epsilon = 0.02;
        c.satisfied_dist = 0.04;
        return c;
    }

    void validate() const {
        if (!(epsilon > 0.0))
            throw InvalidInput("ApConfig: epsilon must be positive");
        if (max_iters < 1)
            throw InvalidInput("ApConfig: max_iters must be >= 1");
        if (!(relaxation > 0.0 && relaxation <= 2.0))
            throw InvalidInput("ApConfig: relaxation must lie in (0, 2]");
    }
};

/// One correspondence: a segment from frame 1 and one from frame 2.
struct SegmentPair {
    LineSegment3D first;
    LineSegment3D second;
};

/// Endpoints (a, b) of the frame-1 segment and (c, d) of the frame-2 segment.
struct PairEndpoints {
    Vec3 a, b, c, d;

    static PairEndpoints from(const SegmentPair &p) { return {p.first.a(), p.first.b(), p.second.a(), p.second.b()}; }
    SegmentPair to_pair() const { return {{a, b}, {c, d}}; }
};

/// Original endpoints (immutable) plus the working copy moved by the projections.
class SegmentPairSet {
  public:
    static constexpr std::size_t kMinPairs = 6;

    explicit SegmentPairSet(const std::vector<SegmentPair> &pairs) {
        originals_.reserve(pairs.size());
        for (const auto &p : pairs)
            originals_.push_back(PairEndpoints::from(p));
        working_ = originals_;
    }

    std::size_t size() const { return originals_.size(); }
    const std::vector<PairEndpoints> &originals() const { return originals_; }
    const std::vector<PairEndpoints> &working() const { return working_; }
    std::vector<PairEndpoints> &working() { return working_; }
    void reset() { working_ = originals_; }

    std::vector<Vec3> original_points(int frame) const { return collect(originals_, frame); }
    std::vector<Vec3> working_points(int frame) const { return collect(working_, frame); }

  private:
    static std::vector<Vec3> collect(const std::vector<PairEndpoints> &v, int frame) {
        std::vector<Vec3> pts;
        pts.reserve(2 * v.size());
        for (const auto &p : v) {
            pts.push_back(frame == 1 ? p.a : p.c);
            pts.push_back(frame == 1 ? p.b : p.d);
        }
        return pts;
    }

    std::vector<PairEndpoints> originals_;
    std::vector<PairEndpoints> working_;
};

/// Moves both segments by half the gap between their closest points (scaled
/// by `relaxation`), in opposite directions, so that with relaxation 1 they
/// touch. Returns the length of the move applied to each endpoint.
inline double project_intersection_inplace(PairEndpoints &p, double relaxation = 1.0) {
    const ClosestPoints cp = closest_points(p.a, p.b, p.c, p.d);
    const Vec3 half = (0.5 * relaxation) * (cp.p2 - cp.p1);
    p.a += half;
    p.b += half;
    p.c -= half;
    p.d -= half;
    return half.norm();
}

inline SegmentPair project_intersection(const SegmentPair &pair, double relaxation = 1.0) {
    PairEndpoints e = PairEndpoints::from(pair);
    project_intersection_inplace(e, relaxation);
    return e.to_pair();
}

namespace detail {

/// Procrustes with a fixed source set: centroid, centered points and the
/// collinearity check are computed once.
class RigidFitter {
  public:
    explicit RigidFitter(std::vector<Vec3> src) : src_(std::move(src)) {
        if (src_.size() < 3)
            throw DegenerateInput("rigidity projection: need at least 3 endpoints");
        centroid_ = Vec3::Zero();
        for (const Vec3 &p : src_)
            centroid_ += p;
        centroid_ /= static_cast<double>(src_.size());
        Mat3 S = Mat3::Zero();
        for (Vec3 &p : src_) {
            p -= centroid_;
            S.noalias() += p * p.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Mat3> es(S, Eigen::EigenvaluesOnly);
        if (!(es.eigenvalues()(2) > 0.0) || es.eigenvalues()(1) <= 1e-14 * es.eigenvalues()(2))
            throw DegenerateInput("rigidity projection: endpoints are collinear");
    }

    template <typename Getter>
    RigidTransform fit(Getter &&dst_at) const {
        Vec3 cd = Vec3::Zero();
        for (std::size_t i = 0; i < src_.size(); ++i)
            cd += dst_at(i);
        cd /= static_cast<double>(src_.size());
        Mat3 H = Mat3::Zero();
        for (std::size_t i = 0; i < src_.size(); ++i)
            H.noalias() += src_[i] * (dst_at(i) - cd).transpose();
        Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Mat3 D = Mat3::Identity();
        if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0)
            D(2, 2) = -1.0;
        const Mat3 R = svd.matrixV() * D * svd.matrixU().transpose();
        return {R, cd - R * centroid_};
    }

  private:
    std::vector<Vec3> src_;
    Vec3 centroid_;
};

inline Vec3 &endpoint(PairEndpoints &p, int frame, int which) {
    return frame == 1 ? (which == 0 ? p.a : p.b) : (which == 0 ? p.c : p.d);
}

inline const Vec3 &endpoint(const PairEndpoints &p, int frame, int which) {
    return frame == 1 ? (which == 0 ? p.a : p.b) : (which == 0 ? p.c : p.d);
}

/// Rigidity projection using precomputed fitters. Returns (T1, T2).
inline std::pair<RigidTransform, RigidTransform> rigidity_step(const std::vector<PairEndpoints> &originals,
                                                               std::vector<PairEndpoints> &working,
                                                               const RigidFitter &f1, const RigidFitter &f2) {
    std::pair<RigidTransform, RigidTransform> out;
    for (int frame = 1; frame <= 2; ++frame) {
        const RigidFitter &f = frame == 1 ? f1 : f2;
        const RigidTransform T =
            f.fit([&](std::size_t i) -> const Vec3 & { return endpoint(working[i / 2], frame, static_cast<int>(i % 2)); });
        for (std::size_t k = 0; k < working.size(); ++k)
            for (int w = 0; w < 2; ++w)
                endpoint(working[k], frame, w) = T(endpoint(originals[k], frame, w));
        (frame == 1 ? out.first : out.second) = T;
    }
    return out;
}

inline RigidFitter make_fitter(const std::vector<PairEndpoints> &originals, int frame) {
    std::vector<Vec3> pts;
    pts.reserve(2 * originals.size());
    for (const auto &p : originals) {
        pts.push_back(endpoint(p, frame, 0));
        pts.push_back(endpoint(p, frame, 1));
    }
    return RigidFitter(std::move(pts));
}

} // namespace detail

/// Replaces each frame's working endpoints by the rigid motion of its
/// originals that best fits them. Returns (T1, T2).
inline std::pair<RigidTransform, RigidTransform> project_rigidity(SegmentPairSet &set) {
    const auto f1 = detail::make_fitter(set.originals(), 1);
    const auto f2 = detail::make_fitter(set.originals(), 2);
    return detail::rigidity_step(set.originals(), set.working(), f1, f2);
}

enum class ApStatus {
    converged,          ///< updates fell below epsilon and the pose is well determined
    max_iterations,     ///< sweep budget exhausted
    unsatisfied_pairs,  ///< more than ceil(N/2) pairs still do not meet under the pose
    not_unique,         ///< the constraints leave a direction of motion unresolved
};

inline const char *to_string(ApStatus s) {
    switch (s) {
    case ApStatus::converged: return "converged";
    case ApStatus::max_iterations: return "max_iterations";
    case ApStatus::unsatisfied_pairs: return "unsatisfied_pairs";
    case ApStatus::not_unique: return "not_unique";
    }
    return "?";
}

struct ApResult {
    /// Maps frame-1 coordinates into frame 2: T = T2^-1 * T1.
    RigidTransform pose;
    bool converged = false;
    ApStatus status = ApStatus::max_iterations;
    std::size_t iterations = 0;
    double last_update = 0.0;
    std::size_t unsatisfied = 0;
    double conditioning = 0.0;
    /// Sweeps after the 10th whose update exceeded the previous one.
    std::size_t monotonicity_violations = 0;
};

/// sigma_min / sigma_max of the 6-column Jacobian of the intersection
/// residuals w.r.t. a twist of frame 2, in coordinates centered on the
/// frame-2 segments with translation columns scaled by their spread.
inline double pose_conditioning(const std::vector<PairEndpoints> &pairs, const RigidTransform &T) {
    if (pairs.empty())
        return 0.0;
    Vec3 center = Vec3::Zero();
    for (const auto &p : pairs)
        center += 0.5 * (p.c + p.d);
    center /= static_cast<double>(pairs.size());
    double spread = 0.0;
    for (const auto &p : pairs)
        spread += (0.5 * (p.c + p.d) - center).squaredNorm();
    spread = std::sqrt(spread / static_cast<double>(pairs.size()));
    if (spread < 1e-9)
        spread = 1.0;

    Eigen::Matrix<double, Eigen::Dynamic, 6> J(static_cast<Eigen::Index>(pairs.size()), 6);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto &p = pairs[i];
        const Vec3 a = T(p.a) - center;
        const Vec3 b = T(p.b) - center;
        const PluckerLine l = PluckerLine::through(a, b - a);
        const PluckerLine m = PluckerLine::through(p.c - center, p.d - p.c);
        const Vec3 rot = l.moment.cross(m.direction) + l.direction.cross(m.moment);
        const Vec3 trans = l.direction.cross(m.direction) * spread;
        J.row(static_cast<Eigen::Index>(i)) << rot.transpose(), trans.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto &sv = svd.singularValues();
    if (sv.size() < 6 || !(sv(0) > 0.0))
        return 0.0;
    return sv(5) / sv(0);
}

/// Alternates intersection projections over all pairs (in order) with one
/// rigidity projection per sweep until the largest endpoint update of a sweep
/// is below epsilon or max_iters sweeps ran. The optional trace receives CSV
/// rows "sweep,max_update,r00,...,r22,tx,ty,tz".
inline ApResult solve_ap(const SegmentPairSet &input, const ApConfig &cfg, std::ostream *trace = nullptr) {
    cfg.validate();
    const std::size_t n = input.size();
    if (n < SegmentPairSet::kMinPairs)
        throw UnderConstrained("solve_ap: need at least 6 segment pairs, got " + std::to_string(n));

    const auto &orig = input.originals();
    std::vector<PairEndpoints> work = input.working();
    const auto f1 = detail::make_fitter(orig, 1);
    const auto f2 = detail::make_fitter(orig, 2);

    if (trace)
        *trace << "sweep,max_update,r00,r01,r02,r10,r11,r12,r20,r21,r22,tx,ty,tz\n";

    ApResult res;
    RigidTransform T1, T2;
    std::vector<PairEndpoints> prev;
    double prev_update = 0.0;
    for (std::size_t sweep = 1; sweep <= cfg.max_iters; ++sweep) {
        prev = work;
        for (auto &p : work)
            project_intersection_inplace(p, cfg.relaxation);
        std::tie(T1, T2) = detail::rigidity_step(orig, work, f1, f2);

        double update = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            update = std::max({update, (work[k].a - prev[k].a).squaredNorm(), (work[k].b - prev[k].b).squaredNorm(),
                               (work[k].c - prev[k].c).squaredNorm(), (work[k].d - prev[k].d).squaredNorm()});
        }
        update = std::sqrt(update);
        if (sweep > 10 && update > prev_update)
            ++res.monotonicity_violations;
        prev_update = update;
        res.iterations = sweep;
        res.last_update = update;

        if (trace) {
            const RigidTransform T = T2.inverse() * T1;
            *trace << sweep << ',' << update;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c)
                    *trace << ',' << T.rotation(r, c);
            *trace << ',' << T.translation.x() << ',' << T.translation.y() << ',' << T.translation.z() << '\n';
        }
        if (update < cfg.epsilon) {
            res.converged = true;
            break;
        }
    }

    res.pose = T2.inverse() * T1;
    res.pose.rotation = orthonormalize(res.pose.rotation);

    if (cfg.final_polish) {
        // Frame-1 endpoints after one more intersection projection, expressed in frame 2.
        std::vector<PairEndpoints> touched = work;
        for (auto &p : touched)
            project_intersection_inplace(p, 1.0);
        const RigidTransform to2 = T2.inverse();
        res.pose = f1.fit([&](std::size_t i) {
            const auto &p = touched[i / 2];
            return to2(i % 2 == 0 ? p.a : p.b);
        });
    }

    for (const auto &p : orig) {
        if (closest_points(res.pose(p.a), res.pose(p.b), p.c, p.d).dist > cfg.satisfied_dist)
            ++res.unsatisfied;
    }
    res.conditioning = pose_conditioning(orig, res.pose);

    if (res.unsatisfied > (n + 1) / 2) {
        res.converged = false;
        res.status = ApStatus::unsatisfied_pairs;
    } else if (res.conditioning < cfg.min_conditioning) {
        res.converged = false;
        res.status = ApStatus::not_unique;
    } else {
        res.status = res.converged ? ApStatus::converged : ApStatus::max_iterations;
    }
    return res;
}

} // namespace linereg
