#include "linereg/registration.hpp"
#include "linereg/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <map>
#include <random>

using namespace linereg;

namespace {

std::vector<std::optional<Vec3>> axis_normals(std::size_t nx, std::size_t ny, std::size_t nz) {
    std::vector<std::optional<Vec3>> n;
    for (std::size_t i = 0; i < nx; ++i)
        n.push_back(i % 2 ? Vec3(1, 0.01, 0).normalized() : Vec3(-1, 0, 0.01).normalized());
    for (std::size_t i = 0; i < ny; ++i)
        n.push_back(Vec3(0.01, 1, 0).normalized());
    for (std::size_t i = 0; i < nz; ++i)
        n.push_back(Vec3(0, -0.01, -1).normalized());
    return n;
}

/// Features of one frame of a named scene.
FrameFeatures scene_features(const std::string &name, const RigidTransform &pose, std::size_t ds, double noise = 0.0,
                             std::uint64_t frame = 0) {
    const SyntheticScene scene = make_scene(name, noise, 1);
    const auto r = raycast_scene(scene, pose, frame);
    FeatureParams p = FeatureParams::depth_camera(ds);
    return extract_features(downsample(r.cloud, ds, ds), p, false);
}

/// Three square grids of crossing lines, one per axis-aligned plane, placed
/// so that lines on different grids are more than 2 m apart. Every H/V pair
/// on the same grid intersects exactly.
FrameFeatures crossing_grids() {
    FrameFeatures f;
    const std::array<Vec3, 3> origin = {Vec3(0, 0, 0), Vec3(6, 0, 0), Vec3(0, 6, 0)};
    std::size_t id = 0;
    for (int axis = 0; axis < 3; ++axis) {
        const Vec3 n = Vec3::Unit(axis);
        const Vec3 e1 = Vec3::Unit((axis + 1) % 3), e2 = Vec3::Unit((axis + 2) % 3);
        for (int k = 0; k < 5; ++k) {
            const double off = 0.4 * k - 0.8;
            FittedLine h({origin[axis] - e1 + off * e2, origin[axis] + e1 + off * e2},
                         {ScanOrientation::horizontal, id});
            FittedLine v({origin[axis] + off * e1 - e2, origin[axis] + off * e1 + e2}, {ScanOrientation::vertical, id});
            h.normal = v.normal = n;
            f.h_lines.push_back(h);
            f.v_lines.push_back(v);
            ++id;
        }
    }
    return f;
}

RansacConfig fast_config() {
    RansacConfig c = RansacConfig::depth_camera(SolverKind::ap7l);
    c.hypotheses = 150;
    c.ap.epsilon = 1e-6;
    c.ap.max_iters = 2000;
    c.seed = 7;
    return c;
}

} // namespace

TEST(Solver, NamesRoundTrip) {
    for (auto s : {SolverKind::ap7l, SolverKind::l1p2, SolverKind::l3p1})
        EXPECT_EQ(parse_solver(to_string(s)), s);
    EXPECT_THROW(parse_solver("5L"), InvalidInput);
}

TEST(Config, Presets) {
    EXPECT_EQ(RansacConfig::lidar(SolverKind::ap7l).hypotheses, 500u);
    EXPECT_EQ(RansacConfig::lidar(SolverKind::l3p1).hypotheses, 5000u);
    EXPECT_DOUBLE_EQ(RansacConfig::lidar().inlier_dist, 0.02);
    EXPECT_DOUBLE_EQ(RansacConfig::depth_camera().inlier_dist, 0.005);
    RansacConfig bad;
    bad.refinement_rounds = 0;
    EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Clusters, AxisAlignedNormalsGiveThreeAxisClusters) {
    const NormalClusters c = cluster_normals(axis_normals(20, 15, 10));
    EXPECT_FALSE(c.fallback);
    ASSERT_EQ(c.centroids.size(), 3u);
    std::vector<std::size_t> sizes(c.sizes.begin(), c.sizes.end());
    std::sort(sizes.begin(), sizes.end());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 15, 20}));
    for (const Vec3 &axis : {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()}) {
        double best = 0;
        for (const auto &ctr : c.centroids)
            best = std::max(best, std::abs(ctr.dot(axis)));
        EXPECT_GT(best, std::cos(deg2rad(2.0)));
    }
    // Members of one axis share a label whatever their sign.
    for (std::size_t i = 1; i < 20; ++i)
        EXPECT_EQ(c.labels[i], c.labels[0]);
}

TEST(Clusters, IdenticalNormalsFallBack) {
    std::vector<std::optional<Vec3>> n(12, Vec3::UnitZ());
    const NormalClusters c = cluster_normals(n);
    EXPECT_TRUE(c.fallback);
    std::size_t nonempty = 0;
    for (auto s : c.sizes)
        nonempty += s > 0;
    EXPECT_EQ(nonempty, 1u);
}

TEST(Clusters, FewNormalsFallBackAndMissingNormalsAreUnclustered) {
    std::vector<std::optional<Vec3>> n = {Vec3::UnitX(), std::nullopt, Vec3::UnitY()};
    const NormalClusters c = cluster_normals(n);
    EXPECT_TRUE(c.fallback);
    EXPECT_EQ(c.labels[1], -1);
    EXPECT_DOUBLE_EQ(c.weight(-1), 1.0);
}

TEST(Clusters, WeightsFavourSmallClusters) {
    const NormalClusters c = cluster_normals(axis_normals(10, 10, 1));
    int small = -1, big = -1;
    for (int k = 0; k < 3; ++k)
        (c.sizes[static_cast<std::size_t>(k)] == 1 ? small : big) = k;
    ASSERT_GE(small, 0);
    EXPECT_DOUBLE_EQ(c.weight(small), 7.0);
    EXPECT_DOUBLE_EQ(c.weight(big), 0.7);
}

TEST(Clusters, BoxRoomClustersFollowTheWalls) {
    const auto pose = scene_trajectory("box_room", 1)[0];
    const FrameFeatures f = scene_features("box_room", pose, 10);
    std::vector<FittedLine> all = f.h_lines;
    all.insert(all.end(), f.v_lines.begin(), f.v_lines.end());
    const NormalClusters c = cluster_normals(all);
    EXPECT_FALSE(c.fallback);
    for (const auto &ctr : c.centroids) {
        const Vec3 world = pose.rotation * ctr;
        const double best = std::max({std::abs(world.x()), std::abs(world.y()), std::abs(world.z())});
        EXPECT_GT(best, std::cos(deg2rad(5.0))) << world.transpose();
    }
}

TEST(LineCandidates, IdenticalFramesPairCrossingLinesAtZeroDistance) {
    const std::vector<LineSegment3D> h = {{Vec3(-1, 0, 0), Vec3(1, 0, 0)}, {Vec3(-1, 1, 0), Vec3(1, 1, 0)}};
    const std::vector<LineSegment3D> v = {{Vec3(0, -1, 0), Vec3(0, 2, 0)}, {Vec3(0.5, -1, 0), Vec3(0.5, 2, 0)}};
    const auto c = candidate_line_pairs(h, v, RigidTransform::identity(), 2.0);
    EXPECT_EQ(c.size(), 4u);
    for (const auto &x : c)
        EXPECT_NEAR(x.distance, 0.0, 1e-15);
}

TEST(LineCandidates, DistantLinesAreExcluded) {
    const std::vector<LineSegment3D> a = {{Vec3(-1, 0, 0), Vec3(1, 0, 0)}};
    const std::vector<LineSegment3D> b = {{Vec3(0, -1, 3), Vec3(0, 1, 3)}};
    EXPECT_TRUE(candidate_line_pairs(a, b, RigidTransform::identity(), 2.0).empty());
    EXPECT_EQ(candidate_line_pairs(a, b, RigidTransform::identity(), 3.0).size(), 1u);
}

TEST(LineCandidates, GroundTruthGuessKeepsTrueIntersections) {
    std::mt19937_64 rng(3);
    const auto inst = linereg::testing::make_ap_instance(rng, 12, 0.3, 0.5);
    std::vector<LineSegment3D> a, b;
    for (const auto &p : inst.pairs) {
        a.push_back(p.first);
        b.push_back(p.second);
    }
    const auto c = candidate_line_pairs(a, b, inst.gt, 0.01);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_TRUE(std::any_of(c.begin(), c.end(), [&](const LineCandidate &x) { return x.a == i && x.b == i; }));
}

TEST(PlaneCandidates, SamePlaneKeptPerpendicularRejected) {
    FittedPlane floor{{Vec3::UnitZ(), 0.0}, Vec3(1, 1, 0), 100};
    FittedPlane wall{{Vec3::UnitX(), -2.0}, Vec3(2, 0, 1), 100};
    const auto c = candidate_plane_pairs({floor, wall}, {floor, wall}, RigidTransform::identity(), 20.0, 2.0);
    ASSERT_EQ(c.size(), 2u);
    for (const auto &x : c) {
        EXPECT_EQ(x.a, x.b);
        EXPECT_NEAR(x.angle_deg, 0.0, 1e-12);
        EXPECT_NEAR(x.distance, 0.0, 1e-12);
    }
}

TEST(Sampling, SevenLineSampleTakesTwoPerCluster) {
    ConstraintSet cs;
    for (int k = 0; k < 30; ++k)
        cs.line_candidates.push_back({0, 0, 0.0, k % 3, k % 3});
    const SamplingPools pools = SamplingPools::from(cs);
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        const auto s = sample_hypothesis(cs, pools, SolverKind::ap7l, rng);
        ASSERT_TRUE(s.has_value());
        ASSERT_EQ(s->lines.size(), 7u);
        std::map<int, int> count;
        for (std::size_t i = 0; i < 6; ++i)
            ++count[cs.line_candidates[s->lines[i]].pool];
        EXPECT_EQ(count, (std::map<int, int>{{0, 2}, {1, 2}, {2, 2}}));
        std::vector<std::size_t> sorted = s->lines;
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
    }
}

TEST(Sampling, EmptyClusterQuotaIsRedistributed) {
    ConstraintSet cs;
    for (int k = 0; k < 20; ++k)
        cs.line_candidates.push_back({0, 0, 0.0, k % 2 ? 2 : 0, k % 2 ? 2 : 0});
    const SamplingPools pools = SamplingPools::from(cs);
    std::mt19937_64 rng(2);
    const auto s = sample_hypothesis(cs, pools, SolverKind::ap7l, rng);
    ASSERT_TRUE(s.has_value());
    EXPECT_EQ(s->lines.size(), 7u);
}

TEST(Sampling, SolverSpecificShapes) {
    ConstraintSet cs;
    for (int k = 0; k < 9; ++k)
        cs.line_candidates.push_back({0, 0, 0.0, k % 3, k % 3});
    cs.plane_candidates.push_back({0, 0, 0.0, 0.0});
    const SamplingPools pools = SamplingPools::from(cs);
    std::mt19937_64 rng(3);
    const auto s3 = sample_hypothesis(cs, pools, SolverKind::l3p1, rng);
    ASSERT_TRUE(s3.has_value());
    EXPECT_EQ(s3->lines.size(), 3u);
    EXPECT_EQ(s3->planes.size(), 1u);
    // One plane pair is not enough for 1L2P.
    EXPECT_FALSE(sample_hypothesis(cs, pools, SolverKind::l1p2, rng).has_value());
    cs.plane_candidates.push_back({1, 1, 0.0, 0.0});
    const auto s1 = sample_hypothesis(cs, pools, SolverKind::l1p2, rng);
    ASSERT_TRUE(s1.has_value());
    EXPECT_EQ(s1->lines.size(), 1u);
    EXPECT_EQ(s1->planes.size(), 2u);
    // Too few candidates for seven lines.
    ConstraintSet tiny;
    for (int k = 0; k < 5; ++k)
        tiny.line_candidates.push_back({0, 0, 0.0, -1, -1});
    EXPECT_FALSE(sample_hypothesis(tiny, SamplingPools::from(tiny), SolverKind::ap7l, rng).has_value());
}

TEST(Inliers, WeightedScoreAndOrderInvariance) {
    std::mt19937_64 rng(4);
    const auto inst = linereg::testing::make_ap_instance(rng, 21, 0.2, 0.3);
    ConstraintSet cs;
    for (const auto &p : inst.pairs) {
        cs.lines_a.push_back(p.first);
        cs.lines_b.push_back(p.second);
    }
    NormalClusters clusters;
    clusters.centroids = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    clusters.sizes = {10, 10, 1};
    for (std::size_t i = 0; i < cs.lines_a.size(); ++i) {
        const int label = i < 20 ? int(i % 2) : 2;
        cs.line_candidates.push_back({i, i, 0.0, label, label});
    }
    const InlierScore s = count_inliers(inst.gt, cs, 1e-6, clusters);
    EXPECT_EQ(s.inliers.size(), 21u);
    EXPECT_NEAR(s.score, 20 * 0.7 + 7.0, 1e-12);

    ConstraintSet shuffled = cs;
    std::shuffle(shuffled.line_candidates.begin(), shuffled.line_candidates.end(), rng);
    EXPECT_EQ(count_inliers(inst.gt, shuffled, 1e-6, clusters).score, s.score);

    // Moving frame A by a metre leaves almost nothing within 2 cm.
    const RigidTransform off = RigidTransform(Mat3::Identity(), Vec3(0, 0, 1)) * inst.gt;
    EXPECT_LT(count_inliers(off, cs, 0.02, clusters).inliers.size(), 3u);
}

TEST(RegisterPair, IdenticalExactFramesGiveIdentity) {
    const FrameFeatures f = crossing_grids();
    RansacConfig cfg = fast_config();
    cfg.ap.epsilon = 1e-12;
    const RegistrationResult r = register_pair(f, f, cfg);
    EXPECT_LT(rotation_angle(r.pose.rotation), 1e-6);
    EXPECT_LT(r.pose.translation.norm(), 1e-6);
    ASSERT_EQ(r.diagnostics.rounds.size(), 3u);
    // Every candidate pair is an inlier of the final pose.
    EXPECT_EQ(r.diagnostics.inliers, r.diagnostics.rounds.back().line_candidates);
}

TEST(RegisterPair, IdenticalScannedFramesGiveNearIdentity) {
    // Fitted H and V segments on the same surface need not touch, so the
    // recovered pose is close to, not exactly, the identity.
    const auto pose = scene_trajectory("box_room", 1)[0];
    const FrameFeatures f = scene_features("box_room", pose, 10);
    const RegistrationResult r = register_pair(f, f, fast_config());
    EXPECT_LT(rad2deg(rotation_angle(r.pose.rotation)), 0.1);
    EXPECT_LT(r.pose.translation.norm(), 0.002);
    EXPECT_EQ(r.diagnostics.rounds.size(), 3u);
}

TEST(RegisterPair, AdjacentSyntheticScansRecoverTheMotion) {
    const auto poses = scene_trajectory("box_room", 2);
    const ScanPair sp = make_scan_pair(make_scene("box_room"), poses[0], poses[1]);
    const FeatureParams fp = FeatureParams::depth_camera(10);
    const FrameFeatures a = extract_features(downsample(sp.a.cloud, 10, 10), fp, false);
    const FrameFeatures b = extract_features(downsample(sp.b.cloud, 10, 10), fp, false);
    const RegistrationResult r = register_pair(a, b, fast_config());
    const PoseDelta d = pose_delta(r.pose, sp.gt);
    EXPECT_LT(rad2deg(d.rotation_rad), 0.1);
    EXPECT_LT(d.translation, 0.005);

    // The reported score is reproduced by re-scoring the final pose.
    EXPECT_GT(r.diagnostics.score, 0.0);
    EXPECT_FALSE(r.diagnostics.rounds.empty());
}

TEST(RegisterPair, SameSeedSameResultAcrossThreadCounts) {
    const auto poses = scene_trajectory("box_room", 2);
    const FrameFeatures a = scene_features("box_room", poses[0], 10, 0.005, 0);
    const FrameFeatures b = scene_features("box_room", poses[1], 10, 0.005, 1);
    RansacConfig c1 = fast_config(), c2 = fast_config();
    c1.hypotheses = c2.hypotheses = 60;
    c1.threads = 1;
    c2.threads = 3;
    const auto r1 = register_pair(a, b, c1), r2 = register_pair(a, b, c2);
    EXPECT_EQ(r1.pose.rotation, r2.pose.rotation);
    EXPECT_EQ(r1.pose.translation, r2.pose.translation);
    EXPECT_EQ(r1.diagnostics.score, r2.diagnostics.score);
}

TEST(RegisterPair, DisjointFramesFail) {
    const auto pose = scene_trajectory("box_room", 1)[0];
    const FrameFeatures a = scene_features("box_room", pose, 10);
    FrameFeatures far = a;
    const RigidTransform away(Mat3::Identity(), Vec3(100, 0, 0));
    for (auto *lines : {&far.h_lines, &far.v_lines})
        for (auto &l : *lines)
            l = FittedLine(l.segment.transformed(away), l.source);
    RansacConfig cfg = fast_config();
    cfg.hypotheses = 20;
    EXPECT_THROW(register_pair(a, far, cfg), RegistrationFailure);
}

TEST(RegisterPair, PlaneSolversRecoverTheMotion) {
    const auto poses = scene_trajectory("box_room", 2);
    const ScanPair sp = make_scan_pair(make_scene("box_room"), poses[0], poses[1]);
    const FeatureParams fp = FeatureParams::depth_camera(10);
    const FrameFeatures a = extract_features(downsample(sp.a.cloud, 10, 10), fp, true);
    const FrameFeatures b = extract_features(downsample(sp.b.cloud, 10, 10), fp, true);
    for (SolverKind s : {SolverKind::l3p1, SolverKind::l1p2}) {
        RansacConfig cfg = RansacConfig::depth_camera(s);
        cfg.hypotheses = 1000;
        cfg.seed = 3;
        const RegistrationResult r = register_pair(a, b, cfg);
        const PoseDelta d = pose_delta(r.pose, sp.gt);
        EXPECT_LT(rad2deg(d.rotation_rad), 0.5) << to_string(s);
        EXPECT_LT(d.translation, 0.02) << to_string(s);
    }
}
