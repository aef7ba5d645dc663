#include "linereg/synthetic.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace linereg;

namespace {

SyntheticScene one_patch(const RectPatch &p, double noise = 0.0) {
    SyntheticScene s;
    s.name = "patch";
    s.patches = {p};
    s.sensor = DepthCamera{};
    s.noise_sigma = noise;
    s.seed = 5;
    return s;
}

RectPatch big_wall() { return RectPatch(Vec3(0, 0, 4), Vec3(1, 0, 0.2), Vec3(0, 1, 0), 20, 20); }

} // namespace

TEST(Raycast, PlaneFillingViewIsHitExactly) {
    const RectPatch wall = big_wall();
    const auto r = raycast_scene(one_patch(wall), RigidTransform::identity());
    EXPECT_EQ(r.cloud.count_present(), 640u * 480u);
    const Plane p = wall.plane();
    for (const Vec3 &x : r.cloud.present_points())
        EXPECT_NEAR(p.signed_distance(x), 0.0, 1e-9);
}

TEST(Raycast, EmptySceneHasNoReturns) {
    SyntheticScene s;
    s.sensor = DepthCamera{};
    const auto r = raycast_scene(s, RigidTransform::identity());
    EXPECT_EQ(r.cloud.count_present(), 0u);
    for (int id : r.patch_ids)
        EXPECT_EQ(id, -1);
}

TEST(Raycast, PatchIdsAgreeWithBruteForceVisibility) {
    const SyntheticScene scene = make_scene("box_room");
    for (const RigidTransform &pose : scene_trajectory("box_room", 4)) {
        const auto r = raycast_scene(scene, pose);
        for (std::size_t cell = 0; cell < r.patch_ids.size(); cell += 97) {
            const auto &pt = r.cloud.points[cell];
            const int id = r.patch_ids[cell];
            ASSERT_EQ(pt.has_value(), id >= 0);
            if (!pt)
                continue;
            const Vec3 w = pose(*pt);
            EXPECT_TRUE(scene.patches[static_cast<std::size_t>(id)].contains(w, 1e-9)) << "cell " << cell;
            // No other patch is crossed before the hit along the segment from the sensor.
            for (std::size_t k = 0; k < scene.patches.size(); ++k) {
                if (static_cast<int>(k) == id)
                    continue;
                const Plane p = scene.patches[k].plane();
                const double s0 = p.signed_distance(pose.translation), s1 = p.signed_distance(w);
                if ((s0 > 0) != (s1 > 0) && std::abs(s1) > 1e-9) {
                    const Vec3 x = pose.translation + s0 / (s0 - s1) * (w - pose.translation);
                    const RectPatch &q = scene.patches[k];
                    const Vec3 d = x - q.center;
                    const bool inside = std::abs(d.dot(q.u)) < q.half_u - 1e-6 && std::abs(d.dot(q.v)) < q.half_v - 1e-6;
                    EXPECT_FALSE(inside) << "cell " << cell << " occluded by " << k;
                }
            }
        }
    }
}

TEST(Raycast, NoiseIsDeterministicAndHasTheRequestedSpread) {
    const RectPatch wall = big_wall();
    const auto a = raycast_scene(one_patch(wall, 0.01), RigidTransform::identity(), 3);
    const auto b = raycast_scene(one_patch(wall, 0.01), RigidTransform::identity(), 3, 1);
    EXPECT_EQ(a.cloud.points, b.cloud.points);
    const auto c = raycast_scene(one_patch(wall, 0.01), RigidTransform::identity(), 4);
    EXPECT_NE(a.cloud.points, c.cloud.points);

    const auto exact = raycast_scene(one_patch(wall), RigidTransform::identity());
    double sum = 0, sum2 = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.cloud.points.size(); ++i) {
        const double e = a.cloud.points[i]->norm() - exact.cloud.points[i]->norm();
        sum += e;
        sum2 += e * e;
        ++n;
    }
    const double mean = sum / double(n), sd = std::sqrt(sum2 / double(n) - mean * mean);
    EXPECT_NEAR(mean, 0.0, 2e-4);
    EXPECT_NEAR(sd, 0.01, 2e-4);
}

TEST(Raycast, MaxRangeDropsFarHits) {
    SyntheticScene s = one_patch(big_wall());
    s.max_range = 3.0;
    EXPECT_EQ(raycast_scene(s, RigidTransform::identity()).cloud.count_present(), 0u);
}

TEST(ScanPair, SamePoseGivesIdentity) {
    const SyntheticScene scene = make_scene("box_room");
    const RigidTransform p = scene_trajectory("box_room", 1)[0];
    const ScanPair sp = make_scan_pair(scene, p, p);
    EXPECT_LE((sp.gt.rotation - Mat3::Identity()).norm(), 1e-15);
    EXPECT_LE(sp.gt.translation.norm(), 1e-15);
}

TEST(ScanPair, KnownOffsetIsReproduced) {
    const SyntheticScene scene = make_scene("box_room");
    const RigidTransform pa = scene_trajectory("box_room", 1)[0];
    const RigidTransform offset = RigidTransform::from_axis_angle(Vec3::UnitY(), deg2rad(5.0), Vec3(0.5, 0, 0));
    const ScanPair sp = make_scan_pair(scene, pa, pa * offset);
    // gt maps frame-A coordinates into frame B, i.e. the inverse of B's pose in A.
    const RigidTransform expected = offset.inverse();
    EXPECT_LE((sp.gt.rotation - expected.rotation).norm(), 1e-12);
    EXPECT_LE((sp.gt.translation - expected.translation).norm(), 1e-12);
}

TEST(ScanPair, GroundTruthCarriesPointsOntoTheSamePatches) {
    const SyntheticScene scene = make_scene("box_room");
    const auto poses = scene_trajectory("box_room", 2);
    const ScanPair sp = make_scan_pair(scene, poses[0], poses[1]);
    for (std::size_t i = 0; i < sp.a.patch_ids.size(); i += 53) {
        const int id = sp.a.patch_ids[i];
        if (id < 0)
            continue;
        const Vec3 in_b = sp.gt(*sp.a.cloud.points[i]);
        // Express the patch plane in frame B and check the carried point lies on it.
        const Plane pb = transform_plane(poses[1].inverse(), scene.patches[static_cast<std::size_t>(id)].plane());
        EXPECT_NEAR(pb.signed_distance(in_b), 0.0, 1e-9);
    }
}

TEST(Scenes, AllNamedScenesBuild) {
    for (const auto &name : scene_names()) {
        const SyntheticScene s = make_scene(name);
        EXPECT_FALSE(s.patches.empty());
        const auto poses = scene_trajectory(name, 3);
        ASSERT_EQ(poses.size(), 3u);
        EXPECT_GT(raycast_scene(s, poses[0]).cloud.count_present(), 1000u) << name;
    }
    EXPECT_THROW(make_scene("nowhere"), InvalidInput);
    EXPECT_THROW(scene_trajectory("nowhere", 2), InvalidInput);
}

TEST(Scenes, TrajectoryStepsHaveTheRequestedSize) {
    const auto poses = scene_trajectory("box_room", 5, 2.0, 0.3);
    for (std::size_t k = 1; k < poses.size(); ++k) {
        const PoseDelta d = pose_delta(poses[k - 1], poses[k]);
        EXPECT_NEAR(rad2deg(d.rotation_rad), 2.0, 0.5);
        EXPECT_NEAR(d.translation, 0.3, 1e-12);
    }
}

TEST(Patch, ValidationAndIntersection) {
    EXPECT_THROW(RectPatch(Vec3::Zero(), Vec3::UnitX(), Vec3(1, 1, 0), 1, 1), InvalidInput);
    EXPECT_THROW(RectPatch(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), 0, 1), InvalidInput);
    const RectPatch p(Vec3(0, 0, 2), Vec3::UnitX(), Vec3::UnitY(), 1, 1);
    ASSERT_TRUE(p.intersect(Vec3::Zero(), Vec3::UnitZ()).has_value());
    EXPECT_DOUBLE_EQ(*p.intersect(Vec3::Zero(), Vec3::UnitZ()), 2.0);
    EXPECT_FALSE(p.intersect(Vec3::Zero(), -Vec3::UnitZ()).has_value());
    EXPECT_FALSE(p.intersect(Vec3(5, 0, 0), Vec3::UnitZ()).has_value());
}
