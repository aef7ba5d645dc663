#include "linereg/config.hpp"
#include "linereg/io.hpp"
#include "linereg/scan_io.hpp"
#include "linereg/synthetic.hpp"
#include "linereg/trajectory.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

using namespace linereg;

namespace {

std::filesystem::path temp_dir(const std::string &name) {
    const auto dir = std::filesystem::temp_directory_path() / ("linereg_scan_io_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

GridConfig full_sphere(std::size_t az, std::size_t el) {
    GridConfig g;
    g.azimuth_bins = az;
    g.elevation_bins = el;
    g.elevation_min = -std::numbers::pi / 2;
    g.elevation_range = std::numbers::pi;
    return g;
}

} // namespace

TEST(OrganizeLidar, SinglePointOccupiesOneCell) {
    const OrganizedCloud c = organize_lidar({Vec3(1, 0, 0)}, full_sphere(4, 2));
    EXPECT_EQ(c.rows, 2u);
    EXPECT_EQ(c.cols, 4u);
    EXPECT_EQ(c.count_present(), 1u);
}

TEST(OrganizeLidar, NearestReturnWins) {
    const OrganizedCloud c = organize_lidar({Vec3(7, 0, 0), Vec3(5, 0, 0)}, full_sphere(4, 2));
    ASSERT_EQ(c.count_present(), 1u);
    EXPECT_DOUBLE_EQ(c.present_points()[0].x(), 5.0);
}

TEST(OrganizeLidar, EmptyInputThrows) { EXPECT_THROW(organize_lidar({}, GridConfig::kitti()), InvalidInput); }

TEST(OrganizeLidar, PointsOutsideFieldOfViewAreDropped) {
    const OrganizedCloud c = organize_lidar({Vec3(0, 0, 10), Vec3(10, 0, 0)}, GridConfig::kitti());
    EXPECT_EQ(c.count_present(), 1u);
}

TEST(OrganizeLidar, ReorganizedRaycastMatchesRaycastGrid) {
    SyntheticScene scene = make_scene("street");
    const auto &grid = std::get<GridConfig>(scene.sensor);
    const RaycastResult r = raycast_scene(scene, lidar_pose(Vec3(0, 0, 1.7), 0.0));
    const OrganizedCloud again = organize_lidar(r.cloud.present_points(), grid);
    ASSERT_EQ(again.points.size(), r.cloud.points.size());
    for (std::size_t i = 0; i < r.cloud.points.size(); ++i)
        EXPECT_EQ(again.points[i].has_value(), r.cloud.points[i].has_value()) << "cell " << i;
}

TEST(DepthToCloud, PrincipalPointAtOneMeter) {
    DepthIntrinsics k;
    k.cx = 2;
    k.cy = 1;
    DepthImage16 img(5, 3, 0);
    img.at(2, 1) = 5000;
    const OrganizedCloud c = depth_to_cloud(img, k);
    ASSERT_TRUE(c.at(1, 2).has_value());
    EXPECT_LE((*c.at(1, 2) - Vec3(0, 0, 1)).norm(), 1e-15);
    EXPECT_FALSE(c.at(0, 0).has_value());
    EXPECT_EQ(c.count_present(), 1u);
}

TEST(DepthToCloud, BackProjectionFormula) {
    DepthIntrinsics k;
    Image<float> img(640, 480, 0.0f);
    img.at(100, 50) = 7500.0f;
    const OrganizedCloud c = depth_to_cloud(img, k);
    const Vec3 expected((100 - k.cx) * 7500 / (k.fx * 5000), (50 - k.cy) * 7500 / (k.fy * 5000), 1.5);
    EXPECT_LE((*c.at(50, 100) - expected).norm(), 1e-12);
}

TEST(DepthToCloud, RenderedPlaneBackProjectsOntoPlane) {
    // Exact (float) depth of the plane n.x = d seen from the origin.
    const Vec3 n = Vec3(0.2, -0.3, 1.0).normalized();
    const double d = 2.0;
    DepthIntrinsics k;
    k.depth_scale = 1.0;
    Image<double> img(64, 48, 0.0);
    for (std::size_t v = 0; v < 48; ++v)
        for (std::size_t u = 0; u < 64; ++u)
            img.at(u, v) = d / n.dot(k.ray(double(u), double(v)));
    const OrganizedCloud c = depth_to_cloud(img, k);
    for (const Vec3 &p : c.present_points())
        EXPECT_NEAR(n.dot(p) - d, 0.0, 1e-6);
    EXPECT_EQ(c.count_present(), 64u * 48u);
}

TEST(Downsample, StepOneIsIdentity) {
    OrganizedCloud c(3, 4);
    c.at(1, 2) = Vec3(1, 2, 3);
    const OrganizedCloud d = downsample(c, 1, 1);
    EXPECT_EQ(d.rows, 3u);
    EXPECT_EQ(d.cols, 4u);
    EXPECT_EQ(d.points, c.points);
}

TEST(Downsample, CeilingArithmetic) {
    const OrganizedCloud c(480, 640);
    const OrganizedCloud d6 = downsample(c, 6, 6);
    EXPECT_EQ(d6.cols, 107u);
    EXPECT_EQ(d6.rows, 80u);
    const OrganizedCloud d10 = downsample(c, 10, 10);
    EXPECT_EQ(d10.cols, 64u);
    EXPECT_EQ(d10.rows, 48u);
}

TEST(Downsample, KeepsMultiplesOfStep) {
    OrganizedCloud c(4, 4);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t col = 0; col < 4; ++col)
            c.at(r, col) = Vec3(double(r), double(col), 0);
    const OrganizedCloud d = downsample(c, 2, 3);
    ASSERT_EQ(d.rows, 2u);
    ASSERT_EQ(d.cols, 2u);
    EXPECT_EQ(*d.at(1, 1), Vec3(2, 3, 0));
    EXPECT_THROW(downsample(c, 0, 1), InvalidInput);
}

TEST(KittiBin, RoundTrip) {
    const auto dir = temp_dir("bin");
    const std::vector<Vec3> pts = {{1.5, -2.25, 0.125}, {10, 20, -3}};
    write_kitti_bin((dir / "a.bin").string(), pts);
    const auto back = read_kitti_bin((dir / "a.bin").string());
    ASSERT_EQ(back.size(), pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        EXPECT_LE((back[i] - pts[i]).norm(), 1e-6);
    EXPECT_EQ(std::filesystem::file_size(dir / "a.bin"), 32u);
}

TEST(KittiBin, TruncatedFileIsRejected) {
    const auto dir = temp_dir("bin_bad");
    {
        std::ofstream f(dir / "bad.bin", std::ios::binary);
        f << "0123456789";
    }
    EXPECT_THROW(read_kitti_bin((dir / "bad.bin").string()), IoError);
    EXPECT_THROW(read_kitti_bin((dir / "missing.bin").string()), IoError);
}

TEST(DepthImages, Png16AndPgmRoundTrip) {
    const auto dir = temp_dir("png");
    DepthImage16 img(7, 5, 0);
    for (std::size_t v = 0; v < 5; ++v)
        for (std::size_t u = 0; u < 7; ++u)
            img.at(u, v) = static_cast<std::uint16_t>(1000 * v + 37 * u + 60000 * (u == 6));
    write_png16((dir / "d.png").string(), img);
    write_pgm((dir / "d.pgm").string(), img);
    for (const char *name : {"d.png", "d.pgm"}) {
        const DepthImage16 back = read_depth_image((dir / name).string());
        EXPECT_EQ(back.width, 7u);
        EXPECT_EQ(back.height, 5u);
        EXPECT_EQ(back.data, img.data) << name;
    }
}

TEST(Trajectory, TumAndKittiRoundTrip) {
    std::mt19937_64 rng(11);
    Trajectory t;
    for (int k = 0; k < 5; ++k)
        t.push_back(double(k), linereg::testing::random_pose(rng, 3.0, 10.0));
    for (auto fmt : {TrajectoryFormat::tum, TrajectoryFormat::kitti}) {
        std::stringstream ss;
        write_trajectory(ss, t, fmt, {"header line"});
        TrajectoryFormat detected{};
        const Trajectory back = read_trajectory(ss, "mem", &detected);
        EXPECT_EQ(detected, fmt);
        ASSERT_EQ(back.size(), t.size());
        for (std::size_t k = 0; k < t.size(); ++k) {
            EXPECT_LE((back[k].rotation - t[k].rotation).norm(), 1e-8);
            EXPECT_LE((back[k].translation - t[k].translation).norm(), 1e-8);
        }
    }
}

TEST(Trajectory, ParseErrorsCiteTheLine) {
    std::stringstream ss("# comment\n0 0 0 0 0 0 0 1\n1 0 0 0 0 0 1\n");
    try {
        read_trajectory(ss, "t.tum");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("t.tum:3"), std::string::npos);
    }
    std::stringstream bad("0 0 0 x 0 0 0 1\n");
    EXPECT_THROW(read_trajectory(bad, "b"), ParseError);
}

TEST(Config, ParsesKeyValuesAndComments) {
    std::stringstream ss("# leading comment\nsolver = 3L1P\n  hypotheses=250 # trailing\n\nnoise = 0.005\n");
    const KeyValueConfig c = KeyValueConfig::parse(ss);
    EXPECT_EQ(c.get_string("solver", ""), "3L1P");
    EXPECT_EQ(c.get_int("hypotheses", 0), 250);
    EXPECT_DOUBLE_EQ(c.get_double("noise", 0.0), 0.005);
    EXPECT_DOUBLE_EQ(c.get_double("absent", 4.5), 4.5);
}

TEST(Config, MalformedLinesAreRejected) {
    std::stringstream ss("a = 1\njust words\n");
    try {
        KeyValueConfig::parse(ss, "x.cfg");
        FAIL() << "expected ParseError";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Ply, HeaderCountsMatchBody) {
    std::stringstream ss;
    write_ply(ss, {{Vec3(0, 0, 0), 1}, {Vec3(1, 0, 0), 1}}, {{0, 1, 1}}, {"note"});
    const std::string s = ss.str();
    EXPECT_NE(s.find("element vertex 2"), std::string::npos);
    EXPECT_NE(s.find("element edge 1"), std::string::npos);
    EXPECT_NE(s.find("comment note"), std::string::npos);
}
