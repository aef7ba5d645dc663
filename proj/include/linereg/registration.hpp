#pragma once

// Frame-to-frame registration: candidate correspondences under a pose guess,
// normal clustering, RANSAC over the AP (7 line pairs), 1L2P and 3L1P
// solvers, weighted inlier scoring, repeated rounds, and trajectory chaining.

#include "linereg/ap_solver.hpp"
#include "linereg/errors.hpp"
#include "linereg/feature_fit.hpp"
#include "linereg/geometry.hpp"
#include "linereg/minimal_solvers.hpp"
#include "linereg/parallel.hpp"
#include "linereg/trajectory.hpp"

#include <array>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace linereg {

enum class SolverKind { ap7l, l1p2, l3p1 };

inline const char *to_string(SolverKind s) {
    switch (s) {
    case SolverKind::ap7l: return "7L";
    case SolverKind::l1p2: return "1L2P";
    case SolverKind::l3p1: return "3L1P";
    }
    return "?";
}

inline SolverKind parse_solver(const std::string &name) {
    if (name == "7L" || name == "7l")
        return SolverKind::ap7l;
    if (name == "1L2P" || name == "1l2p")
        return SolverKind::l1p2;
    if (name == "3L1P" || name == "3l1p")
        return SolverKind::l3p1;
    throw InvalidInput("unknown solver '" + name + "' (expected 7L, 1L2P or 3L1P)");
}

struct RansacConfig {
    SolverKind solver = SolverKind::ap7l;
    double candidate_dist = 2.0;   ///< m
    double plane_angle_max = 20.0; ///< degrees
    double inlier_dist = 0.02;     ///< m
    std::size_t hypotheses = 500;
    std::size_t refinement_rounds = 3;
    std::uint64_t seed = 0;
    bool symmetric = true; ///< also pair V-lines of A with H-lines of B
    ApConfig ap = ApConfig::lidar();
    unsigned threads = 0;

    static RansacConfig lidar(SolverKind s = SolverKind::ap7l) {
        RansacConfig c;
        c.solver = s;
        c.hypotheses = s == SolverKind::ap7l ? 500 : 5000;
        return c;
    }

    static RansacConfig depth_camera(SolverKind s = SolverKind::ap7l) {
        RansacConfig c = lidar(s);
        c.inlier_dist = 0.005;
        c.ap = ApConfig::depth_camera();
        return c;
    }

    void validate() const {
        if (!(candidate_dist > 0.0) || !(plane_angle_max > 0.0) || !(inlier_dist > 0.0))
            throw InvalidInput("RansacConfig: thresholds must be positive");
        if (hypotheses < 1 || refinement_rounds < 1)
            throw InvalidInput("RansacConfig: hypotheses and refinement_rounds must be >= 1");
        ap.validate();
    }
};

/// Cluster labels of frame-A line normals. Label -1 marks lines without a normal.
struct NormalClusters {
    std::vector<Vec3> centroids;          ///< up to three unit axes (sign irrelevant)
    std::array<std::size_t, 3> sizes{};   ///< members per cluster
    std::vector<int> labels;              ///< one per input line
    bool fallback = false;                ///< fewer than three normals or three non-empty clusters

    std::size_t total_clustered() const { return sizes[0] + sizes[1] + sizes[2]; }

    /// (total clustered lines) / (3 * size(c)); 1 for unclustered lines.
    double weight(int label) const {
        if (label < 0 || sizes[static_cast<std::size_t>(label)] == 0)
            return 1.0;
        return static_cast<double>(total_clustered()) / (3.0 * static_cast<double>(sizes[static_cast<std::size_t>(label)]));
    }

    /// Nearest centroid within `max_angle_rad` (axially), or -1.
    int classify(const Vec3 &n, double max_angle_rad) const {
        int best = -1;
        double best_dot = std::cos(max_angle_rad);
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            if (sizes[c] == 0)
                continue;
            const double d = std::abs(centroids[c].dot(n));
            if (d >= best_dot) {
                best_dot = d;
                best = static_cast<int>(c);
            }
        }
        return best;
    }
};

/// Spherical k-means (k = 3) on axes: n and -n are the same direction.
/// Seeds are the two most opposed axes plus the axis farthest from both.
inline NormalClusters cluster_normals(const std::vector<std::optional<Vec3>> &normals, std::size_t max_iterations = 50) {
    NormalClusters out;
    out.labels.assign(normals.size(), -1);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < normals.size(); ++i)
        if (normals[i])
            idx.push_back(i);

    if (idx.size() < 3) {
        out.fallback = true;
        if (!idx.empty()) {
            out.centroids.push_back(*normals[idx[0]]);
            for (std::size_t i : idx)
                out.labels[i] = 0;
            out.sizes[0] = idx.size();
        }
        return out;
    }

    auto axial = [](const Vec3 &a, const Vec3 &b) { return 1.0 - std::abs(a.dot(b)); };
    std::size_t s0 = idx[0], s1 = idx[0];
    double best = -1.0;
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = i + 1; j < idx.size(); ++j) {
            const double d = axial(*normals[idx[i]], *normals[idx[j]]);
            if (d > best) {
                best = d;
                s0 = idx[i];
                s1 = idx[j];
            }
        }
    std::size_t s2 = idx[0];
    best = -1.0;
    for (std::size_t i : idx) {
        const double d = std::min(axial(*normals[i], *normals[s0]), axial(*normals[i], *normals[s1]));
        if (d > best) {
            best = d;
            s2 = i;
        }
    }
    out.centroids = {*normals[s0], *normals[s1], *normals[s2]};

    std::vector<int> labels(normals.size(), -1);
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        bool changed = false;
        for (std::size_t i : idx) {
            int lbl = 0;
            double bd = -1.0;
            for (int c = 0; c < 3; ++c) {
                const double d = std::abs(out.centroids[static_cast<std::size_t>(c)].dot(*normals[i]));
                if (d > bd + 1e-15) {
                    bd = d;
                    lbl = c;
                }
            }
            changed = changed || labels[i] != lbl;
            labels[i] = lbl;
        }
        if (!changed && iter > 0)
            break;
        for (int c = 0; c < 3; ++c) {
            Mat3 S = Mat3::Zero();
            std::size_t n = 0;
            for (std::size_t i : idx)
                if (labels[i] == c) {
                    S.noalias() += *normals[i] * normals[i]->transpose();
                    ++n;
                }
            if (n == 0)
                continue;
            Eigen::SelfAdjointEigenSolver<Mat3> es(S);
            out.centroids[static_cast<std::size_t>(c)] = canonicalize_normal(es.eigenvectors().col(2));
        }
    }
    out.labels = labels;
    for (std::size_t i : idx)
        ++out.sizes[static_cast<std::size_t>(labels[i])];
    out.fallback = out.sizes[0] == 0 || out.sizes[1] == 0 || out.sizes[2] == 0;
    return out;
}

inline NormalClusters cluster_normals(const std::vector<FittedLine> &lines) {
    std::vector<std::optional<Vec3>> normals;
    normals.reserve(lines.size());
    for (const auto &l : lines)
        normals.push_back(l.normal);
    return cluster_normals(normals);
}

/// One candidate line correspondence. `pool` is the cluster used for
/// sampling: the A-line's cluster when the B-line's normal, carried into
/// frame A, falls in the same cluster; otherwise -1 (mixed pool).
struct LineCandidate {
    std::size_t a = 0; ///< index into the frame-A line list
    std::size_t b = 0; ///< index into the frame-B line list
    double distance = 0.0;
    int cluster = -1;  ///< cluster of the A-line normal (weighting)
    int pool = -1;
};

struct PlaneCandidate {
    std::size_t a = 0;
    std::size_t b = 0;
    double angle_deg = 0.0;
    double distance = 0.0;
};

/// Line and plane correspondences of a frame pair plus the segments they
/// refer to. A-lines are listed H first then V; B-lines likewise.
struct ConstraintSet {
    std::vector<LineSegment3D> lines_a;
    std::vector<LineSegment3D> lines_b;
    std::vector<LineCandidate> line_candidates;
    std::vector<FittedPlane> planes_a;
    std::vector<FittedPlane> planes_b;
    std::vector<PlaneCandidate> plane_candidates;
};

namespace detail {

/// Lower bound of the segment distance from midpoints and half-lengths.
inline bool far_apart(const LineSegment3D &s1, const LineSegment3D &s2, double dist) {
    return (s1.midpoint() - s2.midpoint()).norm() - 0.5 * (s1.length() + s2.length()) > dist;
}

} // namespace detail

/// Pairs (i, j, distance) of lines with segment distance <= dist_max once
/// `T_guess` (A into B) is applied to the A-lines.
inline std::vector<LineCandidate> candidate_line_pairs(const std::vector<LineSegment3D> &lines_a,
                                                       const std::vector<LineSegment3D> &lines_b,
                                                       const RigidTransform &T_guess, double dist_max) {
    std::vector<LineCandidate> out;
    std::vector<LineSegment3D> moved;
    moved.reserve(lines_a.size());
    for (const auto &s : lines_a)
        moved.push_back(s.transformed(T_guess));
    for (std::size_t i = 0; i < moved.size(); ++i)
        for (std::size_t j = 0; j < lines_b.size(); ++j) {
            if (detail::far_apart(moved[i], lines_b[j], dist_max))
                continue;
            const double d = segment_distance(moved[i], lines_b[j]);
            if (d <= dist_max)
                out.push_back({i, j, d, -1, -1});
        }
    return out;
}

inline std::vector<LineCandidate> candidate_line_pairs(const std::vector<FittedLine> &lines_a,
                                                       const std::vector<FittedLine> &lines_b,
                                                       const RigidTransform &T_guess, double dist_max) {
    std::vector<LineSegment3D> a, b;
    for (const auto &l : lines_a)
        a.push_back(l.segment);
    for (const auto &l : lines_b)
        b.push_back(l.segment);
    return candidate_line_pairs(a, b, T_guess, dist_max);
}

/// Plane pairs whose normals, after T_guess, differ by less than angle_max
/// and where A's centroid lies within dist_max of B's plane.
inline std::vector<PlaneCandidate> candidate_plane_pairs(const std::vector<FittedPlane> &planes_a,
                                                         const std::vector<FittedPlane> &planes_b,
                                                         const RigidTransform &T_guess, double angle_max_deg,
                                                         double dist_max) {
    std::vector<PlaneCandidate> out;
    for (std::size_t i = 0; i < planes_a.size(); ++i) {
        const Vec3 n = T_guess.rotation * planes_a[i].plane.normal;
        const Vec3 c = T_guess(planes_a[i].centroid);
        for (std::size_t j = 0; j < planes_b.size(); ++j) {
            const double cosang = std::clamp(n.dot(planes_b[j].plane.normal), -1.0, 1.0);
            const double ang = rad2deg(std::acos(cosang));
            const double d = std::abs(planes_b[j].plane.signed_distance(c));
            if (ang < angle_max_deg && d <= dist_max)
                out.push_back({i, j, ang, d});
        }
    }
    return out;
}

/// Builds the full constraint set of a frame pair under T_guess. H-lines of A
/// pair with V-lines of B, and with `symmetric` also V-lines of A with H-lines
/// of B. Cluster labels come from `clusters` (computed on A's H then V lines).
inline ConstraintSet build_constraints(const FrameFeatures &A, const FrameFeatures &B, const NormalClusters &clusters,
                                       const RigidTransform &T_guess, const RansacConfig &cfg) {
    ConstraintSet cs;
    std::vector<const FittedLine *> la, lb;
    for (const auto &l : A.h_lines)
        la.push_back(&l);
    for (const auto &l : A.v_lines)
        la.push_back(&l);
    for (const auto &l : B.h_lines)
        lb.push_back(&l);
    for (const auto &l : B.v_lines)
        lb.push_back(&l);
    for (const auto *l : la)
        cs.lines_a.push_back(l->segment);
    for (const auto *l : lb)
        cs.lines_b.push_back(l->segment);

    const std::size_t nha = A.h_lines.size(), nhb = B.h_lines.size();
    auto add = [&](std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
        const std::vector<LineSegment3D> sa(cs.lines_a.begin() + static_cast<std::ptrdiff_t>(a0),
                                            cs.lines_a.begin() + static_cast<std::ptrdiff_t>(a1));
        const std::vector<LineSegment3D> sb(cs.lines_b.begin() + static_cast<std::ptrdiff_t>(b0),
                                            cs.lines_b.begin() + static_cast<std::ptrdiff_t>(b1));
        for (auto c : candidate_line_pairs(sa, sb, T_guess, cfg.candidate_dist)) {
            c.a += a0;
            c.b += b0;
            cs.line_candidates.push_back(c);
        }
    };
    add(0, nha, nhb, lb.size());
    if (cfg.symmetric)
        add(nha, la.size(), 0, nhb);

    const Mat3 back = T_guess.rotation.transpose();
    const double max_ang = deg2rad(cfg.plane_angle_max);
    for (auto &c : cs.line_candidates) {
        c.cluster = c.a < clusters.labels.size() ? clusters.labels[c.a] : -1;
        if (c.cluster >= 0 && lb[c.b]->normal && clusters.classify(back * *lb[c.b]->normal, max_ang) == c.cluster)
            c.pool = c.cluster;
    }

    cs.planes_a = A.planes;
    cs.planes_b = B.planes;
    cs.plane_candidates = candidate_plane_pairs(A.planes, B.planes, T_guess, cfg.plane_angle_max, cfg.candidate_dist);
    return cs;
}

/// Solver input drawn by one RANSAC iteration (indices into the constraint set).
struct HypothesisSample {
    std::vector<std::size_t> lines;
    std::vector<std::size_t> planes;
};

/// Candidate indices per sampling pool: [0..2] clusters, [3] mixed.
struct SamplingPools {
    std::array<std::vector<std::size_t>, 4> pools;

    static SamplingPools from(const ConstraintSet &cs) {
        SamplingPools p;
        for (std::size_t i = 0; i < cs.line_candidates.size(); ++i) {
            const int pool = cs.line_candidates[i].pool;
            p.pools[pool >= 0 ? static_cast<std::size_t>(pool) : 3].push_back(i);
        }
        return p;
    }
};

namespace detail {

inline bool contains(const std::vector<std::size_t> &v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
}

/// Draws up to `k` distinct members of `pool` not already in `taken`.
inline std::size_t draw_from(const std::vector<std::size_t> &pool, std::size_t k, std::vector<std::size_t> &taken,
                             std::mt19937_64 &rng) {
    std::vector<std::size_t> avail;
    for (std::size_t x : pool)
        if (!contains(taken, x))
            avail.push_back(x);
    std::size_t drawn = 0;
    while (drawn < k && !avail.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, avail.size() - 1);
        const std::size_t j = pick(rng);
        taken.push_back(avail[j]);
        avail[j] = avail.back();
        avail.pop_back();
        ++drawn;
    }
    return drawn;
}

/// `per_cluster` pairs from each cluster pool; a pool's shortfall moves to
/// the other clusters in order, then to the whole candidate set. Then
/// `extra` pairs from the whole set.
inline std::optional<std::vector<std::size_t>> sample_lines(const SamplingPools &pools, std::size_t total,
                                                            std::size_t per_cluster, std::size_t extra,
                                                            std::mt19937_64 &rng) {
    std::vector<std::size_t> taken;
    std::size_t deficit = 0;
    for (std::size_t c = 0; c < 3; ++c)
        deficit += per_cluster - draw_from(pools.pools[c], per_cluster, taken, rng);
    for (std::size_t c = 0; c < 3 && deficit > 0; ++c)
        deficit -= draw_from(pools.pools[c], deficit, taken, rng);
    std::vector<std::size_t> all(total);
    for (std::size_t i = 0; i < total; ++i)
        all[i] = i;
    const std::size_t want = deficit + extra;
    if (draw_from(all, want, taken, rng) < want)
        return std::nullopt;
    return taken;
}

} // namespace detail

/// Draws the solver input for one hypothesis: 7L takes two pairs per cluster
/// and one from all candidates; 3L1P one pair per cluster and one plane pair;
/// 1L2P one line pair and two plane pairs with distinct planes on both sides.
/// nullopt when the candidates cannot supply the sample.
inline std::optional<HypothesisSample> sample_hypothesis(const ConstraintSet &cs, const SamplingPools &pools,
                                                         SolverKind solver, std::mt19937_64 &rng) {
    HypothesisSample s;
    const std::size_t n = cs.line_candidates.size();
    switch (solver) {
    case SolverKind::ap7l: {
        auto l = detail::sample_lines(pools, n, 2, 1, rng);
        if (!l)
            return std::nullopt;
        s.lines = std::move(*l);
        break;
    }
    case SolverKind::l3p1: {
        if (cs.plane_candidates.empty())
            return std::nullopt;
        auto l = detail::sample_lines(pools, n, 1, 0, rng);
        if (!l)
            return std::nullopt;
        s.lines = std::move(*l);
        std::uniform_int_distribution<std::size_t> pick(0, cs.plane_candidates.size() - 1);
        s.planes.push_back(pick(rng));
        break;
    }
    case SolverKind::l1p2: {
        if (n == 0 || cs.plane_candidates.size() < 2)
            return std::nullopt;
        std::uniform_int_distribution<std::size_t> pick_line(0, n - 1);
        s.lines.push_back(pick_line(rng));
        std::vector<std::size_t> second;
        std::uniform_int_distribution<std::size_t> pick(0, cs.plane_candidates.size() - 1);
        const std::size_t p0 = pick(rng);
        for (std::size_t i = 0; i < cs.plane_candidates.size(); ++i) {
            const auto &c = cs.plane_candidates[i];
            if (c.a != cs.plane_candidates[p0].a && c.b != cs.plane_candidates[p0].b)
                second.push_back(i);
        }
        if (second.empty())
            return std::nullopt;
        std::uniform_int_distribution<std::size_t> pick2(0, second.size() - 1);
        s.planes = {p0, second[pick2(rng)]};
        break;
    }
    }
    return s;
}

/// Candidate poses (A into B) for one sample. Degenerate samples give none.
inline std::vector<RigidTransform> solve_hypothesis(const ConstraintSet &cs, const HypothesisSample &s,
                                                    SolverKind solver, const ApConfig &ap) {
    std::vector<RigidTransform> out;
    try {
        switch (solver) {
        case SolverKind::ap7l: {
            std::vector<SegmentPair> pairs;
            for (std::size_t i : s.lines) {
                const auto &c = cs.line_candidates[i];
                pairs.push_back({cs.lines_a[c.a], cs.lines_b[c.b]});
            }
            const ApResult r = solve_ap(SegmentPairSet(pairs), ap);
            if (r.pose.rotation.allFinite() && r.pose.translation.allFinite())
                out.push_back(r.pose);
            break;
        }
        case SolverKind::l3p1: {
            std::array<LineIntersection, 3> lp;
            for (std::size_t k = 0; k < 3; ++k) {
                const auto &c = cs.line_candidates[s.lines[k]];
                lp[k] = {plucker_from_segment(cs.lines_a[c.a]), plucker_from_segment(cs.lines_b[c.b])};
            }
            const auto &pc = cs.plane_candidates[s.planes[0]];
            out = solve_3l1p(lp, cs.planes_a[pc.a].plane, cs.planes_b[pc.b].plane).poses;
            break;
        }
        case SolverKind::l1p2: {
            const auto &c = cs.line_candidates[s.lines[0]];
            const auto &p0 = cs.plane_candidates[s.planes[0]];
            const auto &p1 = cs.plane_candidates[s.planes[1]];
            out.push_back(solve_1l2p(plucker_from_segment(cs.lines_a[c.a]), plucker_from_segment(cs.lines_b[c.b]),
                                     {cs.planes_a[p0.a].plane, cs.planes_a[p1.a].plane},
                                     {cs.planes_b[p0.b].plane, cs.planes_b[p1.b].plane}));
            break;
        }
        }
    } catch (const DegenerateInput &) {
        out.clear();
    } catch (const UnderConstrained &) {
        out.clear();
    }
    return out;
}

struct InlierScore {
    double score = 0.0;
    std::vector<std::size_t> inliers; ///< ascending candidate indices
};

/// Weighted inlier count of a pose: a line candidate is an inlier when its
/// segments come within `inlier_dist` after T. The score is accumulated as
/// sum over clusters of weight * count, so it does not depend on the order of
/// the candidates.
inline InlierScore count_inliers(const RigidTransform &T, const ConstraintSet &cs, double inlier_dist,
                                 const NormalClusters &clusters) {
    InlierScore out;
    std::vector<std::optional<LineSegment3D>> moved(cs.lines_a.size());
    std::array<std::size_t, 4> counts{};
    for (std::size_t i = 0; i < cs.line_candidates.size(); ++i) {
        const auto &c = cs.line_candidates[i];
        if (!moved[c.a])
            moved[c.a] = cs.lines_a[c.a].transformed(T);
        const auto &sa = *moved[c.a];
        const auto &sb = cs.lines_b[c.b];
        if (detail::far_apart(sa, sb, inlier_dist))
            continue;
        if (segment_distance(sa, sb) <= inlier_dist) {
            out.inliers.push_back(i);
            ++counts[c.cluster >= 0 ? static_cast<std::size_t>(c.cluster) : 3];
        }
    }
    for (int c = 0; c < 3; ++c)
        out.score += clusters.weight(c) * static_cast<double>(counts[static_cast<std::size_t>(c)]);
    out.score += static_cast<double>(counts[3]);
    return out;
}

struct RoundDiagnostics {
    std::size_t round = 0;
    std::size_t line_candidates = 0;
    std::size_t plane_candidates = 0;
    std::size_t hypotheses = 0;       ///< samples drawn
    std::size_t valid_hypotheses = 0; ///< samples that produced at least one pose
    std::size_t poses_scored = 0;
    double best_score = 0.0;
    std::size_t inliers = 0;
    bool carried_over = false; ///< best pose is the previous round's pose
};

struct RegistrationDiagnostics {
    SolverKind solver = SolverKind::ap7l;
    bool cluster_fallback = false;
    std::array<std::size_t, 3> cluster_sizes{};
    std::vector<RoundDiagnostics> rounds;
    double score = 0.0;
    std::size_t inliers = 0;
    std::size_t score_decreases = 0; ///< rounds whose best score fell below the previous round's

    void write(std::ostream &os) const {
        os << "round,line_candidates,plane_candidates,hypotheses,valid,poses,best_score,inliers,carried_over\n";
        for (const auto &r : rounds)
            os << r.round << ',' << r.line_candidates << ',' << r.plane_candidates << ',' << r.hypotheses << ','
               << r.valid_hypotheses << ',' << r.poses_scored << ',' << r.best_score << ',' << r.inliers << ','
               << (r.carried_over ? 1 : 0) << '\n';
    }
};

class RegistrationFailure : public std::runtime_error {
  public:
    RegistrationFailure(const std::string &what, RegistrationDiagnostics diag)
        : std::runtime_error(what), diagnostics_(std::move(diag)) {}
    const RegistrationDiagnostics &diagnostics() const { return diagnostics_; }

  private:
    RegistrationDiagnostics diagnostics_;
};

struct RegistrationResult {
    RigidTransform pose; ///< maps frame-A coordinates into frame B
    RegistrationDiagnostics diagnostics;
};

/// RANSAC registration of frame A against frame B over
/// `cfg.refinement_rounds` rounds. Round 1 builds candidates under the
/// identity; later rounds rebuild them under the previous best pose, which
/// is also re-scored on the new candidates. Hypothesis i of round r draws
/// from its own RNG seeded by (seed, r, i), and ties go to the lowest index,
/// so results do not depend on the thread count.
inline RegistrationResult register_pair(const FrameFeatures &A, const FrameFeatures &B, const RansacConfig &cfg) {
    cfg.validate();
    RegistrationDiagnostics diag;
    diag.solver = cfg.solver;

    std::vector<FittedLine> a_lines = A.h_lines;
    a_lines.insert(a_lines.end(), A.v_lines.begin(), A.v_lines.end());
    const NormalClusters clusters = cluster_normals(a_lines);
    diag.cluster_fallback = clusters.fallback;
    diag.cluster_sizes = clusters.sizes;

    std::optional<RigidTransform> best_pose;
    double best_score = 0.0;
    std::size_t best_inliers = 0;
    RigidTransform guess = RigidTransform::identity();

    for (std::size_t round = 1; round <= cfg.refinement_rounds; ++round) {
        const ConstraintSet cs = build_constraints(A, B, clusters, guess, cfg);
        const SamplingPools pools = SamplingPools::from(cs);
        RoundDiagnostics rd;
        rd.round = round;
        rd.line_candidates = cs.line_candidates.size();
        rd.plane_candidates = cs.plane_candidates.size();

        struct Slot {
            bool sampled = false;
            std::size_t poses = 0;
            double score = -1.0;
            std::size_t inliers = 0;
            RigidTransform pose;
        };
        std::vector<Slot> slots(cfg.hypotheses);
        parallel_for(
            cfg.hypotheses,
            [&](std::size_t i) {
                std::mt19937_64 rng(mix_seed(cfg.seed, round, i));
                const auto sample = sample_hypothesis(cs, pools, cfg.solver, rng);
                if (!sample)
                    return;
                Slot &slot = slots[i];
                slot.sampled = true;
                for (const auto &T : solve_hypothesis(cs, *sample, cfg.solver, cfg.ap)) {
                    ++slot.poses;
                    const InlierScore s = count_inliers(T, cs, cfg.inlier_dist, clusters);
                    if (s.score > slot.score) {
                        slot.score = s.score;
                        slot.inliers = s.inliers.size();
                        slot.pose = T;
                    }
                }
            },
            cfg.threads);

        std::optional<RigidTransform> round_pose;
        double round_score = 0.0;
        std::size_t round_inliers = 0;
        if (best_pose) {
            const InlierScore s = count_inliers(*best_pose, cs, cfg.inlier_dist, clusters);
            if (s.score > 0.0) {
                round_pose = best_pose;
                round_score = s.score;
                round_inliers = s.inliers.size();
                rd.carried_over = true;
            }
        }
        for (const Slot &s : slots) {
            rd.hypotheses += s.sampled;
            rd.valid_hypotheses += s.poses > 0;
            rd.poses_scored += s.poses;
            if (s.poses > 0 && s.score > round_score) {
                round_score = s.score;
                round_inliers = s.inliers;
                round_pose = s.pose;
                rd.carried_over = false;
            }
        }
        rd.best_score = round_score;
        rd.inliers = round_inliers;
        diag.rounds.push_back(rd);

        if (round_pose) {
            if (best_pose && round_score < best_score)
                ++diag.score_decreases;
            best_pose = round_pose;
            best_score = round_score;
            best_inliers = round_inliers;
            guess = *round_pose;
        }
    }

    if (!best_pose)
        throw RegistrationFailure("register_pair: no hypothesis produced a pose with inliers", diag);
    diag.score = best_score;
    diag.inliers = best_inliers;
    return {*best_pose, diag};
}

/// Sensor motion from frame k-1 to frame k given register_pair's output for
/// that pair (which maps frame k-1 coordinates into frame k).
inline RigidTransform motion_from_registration(const RigidTransform &T) { return T.inverse(); }

/// World-from-frame poses: W_0 = I and W_k = W_{k-1} * M_k where M_k is the
/// pose of frame k expressed in frame k-1 (see motion_from_registration).
inline Trajectory chain_trajectory(const std::vector<RigidTransform> &motions, const std::vector<double> &stamps = {}) {
    if (!stamps.empty() && stamps.size() != motions.size() + 1)
        throw InvalidInput("chain_trajectory: need one stamp per frame");
    Trajectory traj;
    RigidTransform W = RigidTransform::identity();
    auto stamp = [&](std::size_t k) { return stamps.empty() ? static_cast<double>(k) : stamps[k]; };
    traj.push_back(stamp(0), W);
    for (std::size_t k = 0; k < motions.size(); ++k) {
        W = W * motions[k];
        W.rotation = orthonormalize(W.rotation);
        traj.push_back(stamp(k + 1), W);
    }
    return traj;
}

} // namespace linereg
