#pragma once

// Raycast scenes made of rectangular patches, used as a ground-truth oracle.

#include "linereg/errors.hpp"
#include "linereg/geometry.hpp"
#include "linereg/parallel.hpp"
#include "linereg/scan_io.hpp"

#include <limits>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace linereg {

/// Rectangle center + s*u + t*v with |s| <= half_u, |t| <= half_v.
struct RectPatch {
    Vec3 center = Vec3::Zero();
    Vec3 u = Vec3::UnitX();
    Vec3 v = Vec3::UnitY();
    double half_u = 1.0;
    double half_v = 1.0;

    RectPatch() = default;
    RectPatch(const Vec3 &c, const Vec3 &u_axis, const Vec3 &v_axis, double hu, double hv)
        : center(c), u(u_axis.normalized()), v(v_axis.normalized()), half_u(hu), half_v(hv) {
        validate();
    }

    void validate() const {
        if (!(half_u > 0.0) || !(half_v > 0.0))
            throw InvalidInput("RectPatch: extents must be positive");
        if (std::abs(u.dot(v)) > 1e-9 || std::abs(u.norm() - 1.0) > 1e-9 || std::abs(v.norm() - 1.0) > 1e-9)
            throw InvalidInput("RectPatch: axes must be orthonormal");
    }

    Vec3 normal() const { return u.cross(v); }
    Plane plane() const { return Plane::through(center, normal()); }

    bool contains(const Vec3 &x, double tol = 1e-9) const {
        const Vec3 d = x - center;
        return std::abs(d.dot(u)) <= half_u + tol && std::abs(d.dot(v)) <= half_v + tol &&
               std::abs(d.dot(normal())) <= tol;
    }

    /// Ray parameter of the hit (origin + t * dir, t > 0), if any.
    std::optional<double> intersect(const Vec3 &origin, const Vec3 &dir) const {
        const Vec3 n = normal();
        const double denom = n.dot(dir);
        if (std::abs(denom) < 1e-12)
            return std::nullopt;
        const double t = n.dot(center - origin) / denom;
        if (!(t > 1e-9))
            return std::nullopt;
        const Vec3 d = origin + t * dir - center;
        if (std::abs(d.dot(u)) > half_u || std::abs(d.dot(v)) > half_v)
            return std::nullopt;
        return t;
    }
};

/// Pinhole camera producing a width x height organized cloud.
struct DepthCamera {
    DepthIntrinsics intrinsics;
    std::size_t width = 640;
    std::size_t height = 480;
};

using SensorModel = std::variant<GridConfig, DepthCamera>;

struct SyntheticScene {
    std::string name;
    std::vector<RectPatch> patches;
    SensorModel sensor = DepthCamera{};
    double noise_sigma = 0.0; ///< m, Gaussian along the ray
    double max_range = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

namespace detail {

/// Standard normal sample determined by a 64-bit key (Box-Muller on two
/// splitmix64 outputs).
inline double hashed_normal(std::uint64_t key) {
    const std::uint64_t a = mix_seed(key);
    const std::uint64_t b = mix_seed(a);
    const double u1 = (static_cast<double>(a >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(b >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace detail

struct RaycastResult {
    OrganizedCloud cloud;
    std::vector<int> patch_ids; ///< per cell (row-major), -1 for a miss
};

/// Casts one ray per sensor cell from `pose` (world from sensor). Points are
/// in the sensor frame. The noise of a cell depends only on (seed, frame, cell).
inline RaycastResult raycast_scene(const SyntheticScene &scene, const RigidTransform &pose, std::uint64_t frame = 0,
                                   unsigned threads = 0) {
    for (const auto &p : scene.patches)
        p.validate();
    std::size_t rows = 0, cols = 0;
    std::visit(
        [&](const auto &s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, GridConfig>) {
                s.validate();
                rows = s.elevation_bins;
                cols = s.azimuth_bins;
            } else {
                s.intrinsics.validate();
                rows = s.height;
                cols = s.width;
            }
        },
        scene.sensor);

    RaycastResult out{OrganizedCloud(rows, cols, scene.name + ":" + std::to_string(frame)),
                      std::vector<int>(rows * cols, -1)};
    auto ray_of = [&](std::size_t r, std::size_t c) -> Vec3 {
        if (const auto *g = std::get_if<GridConfig>(&scene.sensor))
            return g->ray(r, c);
        const auto &cam = std::get<DepthCamera>(scene.sensor);
        return cam.intrinsics.ray(static_cast<double>(c), static_cast<double>(r)).normalized();
    };

    parallel_for(
        rows,
        [&](std::size_t r) {
            for (std::size_t c = 0; c < cols; ++c) {
                const Vec3 dir_s = ray_of(r, c);
                const Vec3 dir_w = pose.rotation * dir_s;
                double best = std::numeric_limits<double>::infinity();
                int id = -1;
                for (std::size_t k = 0; k < scene.patches.size(); ++k) {
                    const auto t = scene.patches[k].intersect(pose.translation, dir_w);
                    if (t && *t < best) {
                        best = *t;
                        id = static_cast<int>(k);
                    }
                }
                if (id < 0 || best > scene.max_range)
                    continue;
                double range = best;
                if (scene.noise_sigma > 0.0)
                    range += scene.noise_sigma * detail::hashed_normal(mix_seed(scene.seed, frame, r * cols + c));
                out.cloud.at(r, c) = range * dir_s;
                out.patch_ids[r * cols + c] = id;
            }
        },
        threads);
    return out;
}

struct ScanPair {
    RaycastResult a;
    RaycastResult b;
    RigidTransform gt; ///< maps frame-A coordinates into frame B, like register_pair
};

inline ScanPair make_scan_pair(const SyntheticScene &scene, const RigidTransform &pose_a, const RigidTransform &pose_b,
                               std::uint64_t frame_a = 0, std::uint64_t frame_b = 1) {
    return {raycast_scene(scene, pose_a, frame_a), raycast_scene(scene, pose_b, frame_b),
            pose_b.inverse() * pose_a};
}

/// World-from-camera pose of an optical-frame camera (x right, y down, z
/// forward) at `position`, heading `yaw` about world z and looking `pitch`
/// below the horizon.
inline RigidTransform camera_pose(const Vec3 &position, double yaw, double pitch) {
    const Vec3 fwd(std::cos(yaw) * std::cos(pitch), std::sin(yaw) * std::cos(pitch), -std::sin(pitch));
    const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
    const Vec3 down = fwd.cross(right);
    Mat3 R;
    R.col(0) = right;
    R.col(1) = down;
    R.col(2) = fwd;
    return {R, position};
}

/// World-from-sensor pose of a LiDAR (x forward, z up) heading `yaw`.
inline RigidTransform lidar_pose(const Vec3 &position, double yaw) {
    return RigidTransform::from_axis_angle(Vec3::UnitZ(), yaw, position);
}

inline std::vector<std::string> scene_names() { return {"corridor", "box_room", "street"}; }

namespace detail {

inline RectPatch wall_x(double x, double y0, double y1, double z0, double z1) {
    return {Vec3(x, 0.5 * (y0 + y1), 0.5 * (z0 + z1)), Vec3::UnitY(), Vec3::UnitZ(), 0.5 * (y1 - y0), 0.5 * (z1 - z0)};
}
inline RectPatch wall_y(double y, double x0, double x1, double z0, double z1) {
    return {Vec3(0.5 * (x0 + x1), y, 0.5 * (z0 + z1)), Vec3::UnitX(), Vec3::UnitZ(), 0.5 * (x1 - x0), 0.5 * (z1 - z0)};
}
inline RectPatch floor_z(double z, double x0, double x1, double y0, double y1) {
    return {Vec3(0.5 * (x0 + x1), 0.5 * (y0 + y1), z), Vec3::UnitX(), Vec3::UnitY(), 0.5 * (x1 - x0), 0.5 * (y1 - y0)};
}

} // namespace detail

/// Named scenes:
///  corridor: floor and two parallel walls (two normal directions), depth camera
///  box_room: floor and four walls of a 5 x 4 x 3 m room (three directions), depth camera
///  street:   ground, facades on both sides with a cross street, reduced LiDAR grid
inline SyntheticScene make_scene(const std::string &name, double noise_sigma = 0.0, std::uint64_t seed = 0) {
    SyntheticScene s;
    s.name = name;
    s.noise_sigma = noise_sigma;
    s.seed = seed;
    if (name == "corridor") {
        s.patches = {detail::floor_z(0.0, -3.0, 30.0, -1.2, 1.2), detail::wall_y(-1.2, -3.0, 30.0, 0.0, 2.6),
                     detail::wall_y(1.2, -3.0, 30.0, 0.0, 2.6)};
        s.sensor = DepthCamera{};
        s.max_range = 10.0;
    } else if (name == "box_room") {
        s.patches = {detail::floor_z(0.0, -2.5, 2.5, -2.0, 2.0), detail::wall_x(2.5, -2.0, 2.0, 0.0, 3.0),
                     detail::wall_x(-2.5, -2.0, 2.0, 0.0, 3.0), detail::wall_y(2.0, -2.5, 2.5, 0.0, 3.0),
                     detail::wall_y(-2.0, -2.5, 2.5, 0.0, 3.0)};
        s.sensor = DepthCamera{};
    } else if (name == "street") {
        s.patches = {detail::floor_z(0.0, -60.0, 60.0, -40.0, 40.0),
                     detail::wall_y(8.0, -60.0, -6.0, 0.0, 12.0),
                     detail::wall_y(8.0, 6.0, 60.0, 0.0, 12.0),
                     detail::wall_y(-8.0, -60.0, -6.0, 0.0, 9.0),
                     detail::wall_y(-8.0, 6.0, 60.0, 0.0, 9.0),
                     detail::wall_x(-6.0, 8.0, 40.0, 0.0, 12.0),
                     detail::wall_x(6.0, 8.0, 40.0, 0.0, 12.0),
                     detail::wall_x(-6.0, -40.0, -8.0, 0.0, 9.0),
                     detail::wall_x(6.0, -40.0, -8.0, 0.0, 9.0)};
        GridConfig g;
        g.azimuth_bins = 720;
        g.elevation_bins = 32;
        s.sensor = g;
        s.max_range = 80.0;
    } else {
        std::string list;
        for (const auto &n : scene_names())
            list += (list.empty() ? "" : ", ") + n;
        throw InvalidInput("unknown scene '" + name + "' (available: " + list + ")");
    }
    return s;
}

/// Default sensor path through a named scene: each step turns by
/// `step_rotation_deg` about the vertical and moves `step_translation` m.
inline std::vector<RigidTransform> scene_trajectory(const std::string &name, std::size_t frames,
                                                    double step_rotation_deg = 2.0, double step_translation = 0.3) {
    std::vector<RigidTransform> poses;
    const double dyaw = deg2rad(step_rotation_deg);
    for (std::size_t k = 0; k < frames; ++k) {
        const double kk = static_cast<double>(k);
        if (name == "corridor") {
            const Vec3 dir = Vec3(1.0, 0.05, 0.02).normalized();
            poses.push_back(camera_pose(Vec3(-2.0, -0.3, 1.3) + kk * step_translation * dir, -0.1 + kk * dyaw,
                                        deg2rad(15.0)));
        } else if (name == "box_room") {
            const Vec3 dir = Vec3(0.25, 1.0, 0.05).normalized();
            poses.push_back(camera_pose(Vec3(-2.0, -1.2, 1.4) + kk * step_translation * dir, deg2rad(-5.0) + kk * dyaw,
                                        deg2rad(22.0)));
        } else if (name == "street") {
            const Vec3 dir = Vec3(1.0, 0.1, 0.0).normalized();
            poses.push_back(lidar_pose(Vec3(-20.0, -1.0, 1.73) + kk * step_translation * dir, kk * dyaw));
        } else {
            (void)make_scene(name); // throws with the list of scenes
        }
    }
    return poses;
}

} // namespace linereg
