#include "linereg/geometry.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace linereg;
using linereg::testing::random_pose;
using linereg::testing::random_unit;
using linereg::testing::random_vec;

namespace {

void expect_vec_near(const Vec3 &a, const Vec3 &b, double tol) {
    EXPECT_LE((a - b).norm(), tol) << "got " << a.transpose() << " expected " << b.transpose();
}

} // namespace

TEST(Plucker, LineThroughOriginHasZeroMoment) {
    const PluckerLine l = plucker_from_segment({Vec3(0, 0, 0), Vec3(1, 0, 0)});
    expect_vec_near(l.direction, Vec3(1, 0, 0), 1e-15);
    expect_vec_near(l.moment, Vec3::Zero(), 1e-15);
}

TEST(Plucker, MomentIsPointCrossDirection) {
    const PluckerLine l = plucker_from_segment({Vec3(0, 1, 0), Vec3(1, 1, 0)});
    expect_vec_near(l.direction, Vec3(1, 0, 0), 1e-15);
    expect_vec_near(l.moment, Vec3(0, 0, -1), 1e-15);
}

TEST(Plucker, CoincidentEndpointsAreRejected) {
    EXPECT_THROW(LineSegment3D(Vec3(1, 2, 3), Vec3(1, 2, 3)), InvalidInput);
}

TEST(Plucker, InvariantsHoldForRandomSegments) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 a = random_vec(rng, 5.0), b = random_vec(rng, 5.0);
        const PluckerLine l = plucker_from_segment({a, b});
        EXPECT_NEAR(l.direction.norm(), 1.0, 1e-12);
        EXPECT_NEAR(l.direction.dot(l.moment), 0.0, 1e-12);
        EXPECT_NEAR(l.distance_to(a), 0.0, 1e-12);
        EXPECT_NEAR(l.distance_to(b), 0.0, 1e-12);
    }
}

TEST(EpipolarResidual, IntersectingLinesUnderIdentityGiveZero) {
    const PluckerLine l = PluckerLine::through(Vec3(1, 1, 0), Vec3(1, 0, 0));
    const PluckerLine m = PluckerLine::through(Vec3(1, 1, 0), Vec3(0, 1, 0));
    EXPECT_NEAR(epipolar_residual(m, l, RigidTransform::identity()), 0.0, 1e-15);
}

TEST(EpipolarResidual, SkewLinesAtUnitDistanceGiveUnitResidual) {
    const PluckerLine l = PluckerLine::through(Vec3::Zero(), Vec3::UnitX());
    const PluckerLine m = PluckerLine::through(Vec3(0, 0, 1), Vec3::UnitY());
    EXPECT_NEAR(std::abs(epipolar_residual(m, l, RigidTransform::identity())), 1.0, 1e-15);
}

TEST(EpipolarResidual, VanishesThroughTransportedPoint) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        const RigidTransform T = random_pose(rng, 3.0, 5.0);
        const Vec3 p = random_vec(rng, 5.0);
        const PluckerLine l = PluckerLine::through(p, random_unit(rng));
        const PluckerLine m = PluckerLine::through(T(p), random_unit(rng));
        EXPECT_LT(std::abs(epipolar_residual(m, l, T)), 1e-9);
    }
}

TEST(EpipolarResidual, MatchesBilinearForm) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const RigidTransform T = random_pose(rng, 3.0, 5.0);
        const PluckerLine l = PluckerLine::through(random_vec(rng, 3.0), random_unit(rng));
        const PluckerLine m = PluckerLine::through(random_vec(rng, 3.0), random_unit(rng));
        const double form = m.coords().dot(intersection_form(T) * l.coords());
        EXPECT_NEAR(form, epipolar_residual(m, l, T), 1e-10);
        EXPECT_NEAR(reciprocal_product(m, transform_line(T, l)), epipolar_residual(m, l, T), 1e-10);
    }
}

TEST(TransformLine, IdentityLeavesLineUnchanged) {
    const PluckerLine l = PluckerLine::through(Vec3(1, 2, 3), Vec3(0, 1, 1));
    const PluckerLine t = transform_line(RigidTransform::identity(), l);
    expect_vec_near(t.direction, l.direction, 1e-15);
    expect_vec_near(t.moment, l.moment, 1e-15);
}

TEST(TransformLine, TranslationAlongLineIsSymmetry) {
    const PluckerLine l = PluckerLine::through(Vec3(1, 2, 3), Vec3(0, 1, 1));
    const PluckerLine t = transform_line({Mat3::Identity(), 2.5 * l.direction}, l);
    expect_vec_near(t.direction, l.direction, 1e-14);
    expect_vec_near(t.moment, l.moment, 1e-14);
}

TEST(TransformLine, QuarterTurnAboutZ) {
    const PluckerLine l = PluckerLine::through(Vec3::Zero(), Vec3::UnitX());
    const PluckerLine t = transform_line(RigidTransform::from_axis_angle(Vec3::UnitZ(), std::numbers::pi / 2), l);
    expect_vec_near(t.direction, Vec3(0, 1, 0), 1e-15);
    expect_vec_near(t.moment, Vec3::Zero(), 1e-15);
}

TEST(TransformLine, AgreesWithTransformedPoints) {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 200; ++i) {
        const RigidTransform T = random_pose(rng, 3.0, 5.0);
        const LineSegment3D s(random_vec(rng, 3.0), random_vec(rng, 3.0));
        const PluckerLine a = transform_line(T, plucker_from_segment(s));
        const PluckerLine b = plucker_from_segment(s.transformed(T));
        expect_vec_near(a.direction, b.direction, 1e-10);
        expect_vec_near(a.moment, b.moment, 1e-10);
    }
}

TEST(TransformPlane, IdentityLeavesPlaneUnchanged) {
    const Plane p = Plane::through(Vec3(1, 2, 3), Vec3(1, 1, 0));
    const Plane q = transform_plane(RigidTransform::identity(), p);
    expect_vec_near(q.normal, p.normal, 1e-15);
    EXPECT_NEAR(q.offset, p.offset, 1e-15);
}

TEST(TransformPlane, LiftingGroundPlane) {
    const Plane q = transform_plane({Mat3::Identity(), Vec3(0, 0, 2)}, Plane{Vec3::UnitZ(), 0.0});
    expect_vec_near(q.normal, Vec3::UnitZ(), 1e-15);
    EXPECT_NEAR(q.offset, -2.0, 1e-15);
}

TEST(TransformPlane, TransformedPointsStayOnPlane) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const RigidTransform T = random_pose(rng, 3.0, 5.0);
        const Vec3 x = random_vec(rng, 3.0);
        const Plane p = Plane::through(x, random_unit(rng));
        EXPECT_NEAR(transform_plane(T, p).signed_distance(T(x)), 0.0, 1e-12);
    }
}

TEST(ClosestPoints, PerpendicularSegments) {
    const ClosestPoints c = closest_points(LineSegment3D(Vec3(0, 0, 0), Vec3(1, 0, 0)),
                                           LineSegment3D(Vec3(0.5, -1, 1), Vec3(0.5, 1, 1)));
    expect_vec_near(c.p1, Vec3(0.5, 0, 0), 1e-15);
    expect_vec_near(c.p2, Vec3(0.5, 0, 1), 1e-15);
    EXPECT_NEAR(c.dist, 1.0, 1e-15);
}

TEST(ClosestPoints, IntersectingSegments) {
    const ClosestPoints c = closest_points(LineSegment3D(Vec3(-1, 0, 0), Vec3(1, 0, 0)),
                                           LineSegment3D(Vec3(0.2, -1, 0), Vec3(0.2, 1, 0)));
    EXPECT_NEAR(c.dist, 0.0, 1e-15);
}

TEST(ClosestPoints, ParallelOverlapResolvesToOverlapMidpoint) {
    const ClosestPoints c = closest_points(LineSegment3D(Vec3(0, 0, 0), Vec3(2, 0, 0)),
                                           LineSegment3D(Vec3(1, 0.5, 0), Vec3(3, 0.5, 0)));
    EXPECT_NEAR(c.dist, 0.5, 1e-15);
    expect_vec_near(c.p1, Vec3(1.5, 0, 0), 1e-12);
    expect_vec_near(c.p2, Vec3(1.5, 0.5, 0), 1e-12);
}

TEST(ClosestPoints, MatchesGridSearch) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const LineSegment3D s1(random_vec(rng, 2.0), random_vec(rng, 2.0));
        const LineSegment3D s2(random_vec(rng, 2.0), random_vec(rng, 2.0));
        const ClosestPoints c = closest_points(s1, s2);
        double best = std::numeric_limits<double>::infinity();
        const int n = 400;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j)
                best = std::min(best, (s1.point_at(double(i) / n) - s2.point_at(double(j) / n)).norm());
        EXPECT_LE(c.dist, best + 1e-12);
        EXPECT_GE(c.dist, best - 0.03);
        EXPECT_NEAR((c.p1 - c.p2).norm(), c.dist, 1e-12);
    }
}

TEST(RigidFit, IdentityAndTranslation) {
    const std::vector<Vec3> src = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const RigidTransform I = fit_rigid_transform(src, src);
    EXPECT_LE((I.rotation - Mat3::Identity()).norm(), 1e-12);
    EXPECT_LE(I.translation.norm(), 1e-12);
    std::vector<Vec3> dst;
    for (const auto &p : src)
        dst.push_back(p + Vec3(1, 2, 3));
    const RigidTransform T = fit_rigid_transform(src, dst);
    EXPECT_LE((T.rotation - Mat3::Identity()).norm(), 1e-12);
    expect_vec_near(T.translation, Vec3(1, 2, 3), 1e-12);
}

TEST(RigidFit, RecoversRandomPose) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const RigidTransform gt = random_pose(rng, 3.1, 10.0);
        std::vector<Vec3> src, dst;
        for (int k = 0; k < 8; ++k) {
            src.push_back(random_vec(rng, 3.0));
            dst.push_back(gt(src.back()));
        }
        const RigidTransform T = fit_rigid_transform(src, dst);
        EXPECT_TRUE(T.is_proper());
        EXPECT_LE((T.rotation - gt.rotation).norm(), 1e-9);
        EXPECT_LE((T.translation - gt.translation).norm(), 1e-9);
    }
}

TEST(RigidFit, ReflectionIsNeverReturned) {
    // Mirror image of a tetrahedron: the best proper rotation is still proper.
    const std::vector<Vec3> src = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    std::vector<Vec3> dst;
    for (const auto &p : src)
        dst.emplace_back(-p.x(), p.y(), p.z());
    EXPECT_TRUE(fit_rigid_transform(src, dst).is_proper());
}

TEST(RigidFit, DegenerateConfigurationsThrow) {
    EXPECT_THROW(fit_rigid_transform(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}}, std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}}),
                 DegenerateInput);
    const std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_THROW(fit_rigid_transform(line, line), DegenerateInput);
}

TEST(RotationAngle, ExactZeroForIdentityAndKnownAngles) {
    EXPECT_EQ(rotation_angle(Mat3::Identity()), 0.0);
    for (double a : {1e-9, 0.1, 1.0, 3.0, std::numbers::pi}) {
        const RigidTransform T = RigidTransform::from_axis_angle(Vec3(1, 2, 3).normalized(), a);
        EXPECT_NEAR(rotation_angle(T.rotation), a, 1e-12);
    }
}

TEST(RigidTransform, InverseAndComposition) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 100; ++i) {
        const RigidTransform a = random_pose(rng, 3.0, 5.0), b = random_pose(rng, 3.0, 5.0);
        const Vec3 x = random_vec(rng, 3.0);
        expect_vec_near((a * b)(x), a(b(x)), 1e-12);
        expect_vec_near(a.inverse()(a(x)), x, 1e-12);
    }
}
