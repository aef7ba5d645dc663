#pragma once

// Organized point clouds: binning raw LiDAR returns by azimuth/elevation,
// back-projecting depth images and index-based down-sampling.

#include "linereg/errors.hpp"
#include "linereg/geometry.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace linereg {

/// H x W grid of optional points. Row r is a horizontal scan-line, column c a
/// vertical one. Missing returns are std::nullopt, never zero-filled.
struct OrganizedCloud {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::optional<Vec3>> points;
    std::string frame_id;

    OrganizedCloud() = default;
    OrganizedCloud(std::size_t r, std::size_t c, std::string id = {})
        : rows(r), cols(c), points(r * c), frame_id(std::move(id)) {}

    std::optional<Vec3> &at(std::size_t r, std::size_t c) { return points[r * cols + c]; }
    const std::optional<Vec3> &at(std::size_t r, std::size_t c) const { return points[r * cols + c]; }

    std::size_t count_present() const {
        std::size_t n = 0;
        for (const auto &p : points)
            n += p.has_value();
        return n;
    }

    std::vector<Vec3> present_points() const {
        std::vector<Vec3> out;
        out.reserve(points.size());
        for (const auto &p : points)
            if (p)
                out.push_back(*p);
        return out;
    }
};

/// Spherical binning of a rotating LiDAR. Row 0 holds the highest elevation.
struct GridConfig {
    std::size_t azimuth_bins = 2000;
    std::size_t elevation_bins = 64;
    double azimuth_min = -std::numbers::pi;
    double azimuth_range = 2.0 * std::numbers::pi;
    double elevation_min = deg2rad(-24.8);
    double elevation_range = deg2rad(26.8);

    /// HDL-64E style default used for KITTI scans.
    static GridConfig kitti() { return {}; }

    void validate() const {
        if (azimuth_bins < 2 || elevation_bins < 2)
            throw InvalidInput("GridConfig: bin counts must be >= 2");
        if (!(azimuth_range > 0.0) || !(elevation_range > 0.0))
            throw InvalidInput("GridConfig: angular ranges must be positive");
    }

    /// Unit ray through the center of cell (row, col).
    Vec3 ray(std::size_t row, std::size_t col) const {
        const double az = azimuth_min + (static_cast<double>(col) + 0.5) / static_cast<double>(azimuth_bins) * azimuth_range;
        const double el = elevation_min + (static_cast<double>(elevation_bins - 1 - row) + 0.5) /
                                              static_cast<double>(elevation_bins) * elevation_range;
        return {std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
    }

    /// Cell of a point, or nullopt if it falls outside the configured field of view.
    std::optional<std::pair<std::size_t, std::size_t>> cell_of(const Vec3 &p) const {
        const double horiz = std::hypot(p.x(), p.y());
        if (horiz == 0.0 && p.z() == 0.0)
            return std::nullopt;
        double az = std::atan2(p.y(), p.x()) - azimuth_min;
        if (azimuth_range >= 2.0 * std::numbers::pi - 1e-12) {
            az = std::fmod(az, 2.0 * std::numbers::pi);
            if (az < 0.0)
                az += 2.0 * std::numbers::pi;
        }
        const double el = std::atan2(p.z(), horiz) - elevation_min;
        const double fc = std::floor(az / azimuth_range * static_cast<double>(azimuth_bins));
        const double fe = std::floor(el / elevation_range * static_cast<double>(elevation_bins));
        if (fc < 0.0 || fc >= static_cast<double>(azimuth_bins) || fe < 0.0 ||
            fe >= static_cast<double>(elevation_bins))
            return std::nullopt;
        const auto col = static_cast<std::size_t>(fc);
        const auto row = elevation_bins - 1 - static_cast<std::size_t>(fe);
        return std::pair{row, col};
    }
};

/// Pinhole depth camera. Raw depth value z corresponds to z / depth_scale meters.
struct DepthIntrinsics {
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;
    double depth_scale = 5000.0;

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0))
            throw InvalidInput("DepthIntrinsics: focal lengths must be positive");
        if (!(depth_scale > 0.0))
            throw InvalidInput("DepthIntrinsics: depth_scale must be positive");
    }

    /// Ray through pixel (u, v) with unit z component.
    Vec3 ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }
};

/// Single-channel image, row-major.
template <typename T>
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<T> data;

    Image() = default;
    Image(std::size_t w, std::size_t h, T fill = T{}) : width(w), height(h), data(w * h, fill) {}

    T &at(std::size_t u, std::size_t v) { return data[v * width + u]; }
    const T &at(std::size_t u, std::size_t v) const { return data[v * width + u]; }
};

using DepthImage16 = Image<std::uint16_t>;

/// Bins raw LiDAR points into an organized grid; on collision the nearest
/// return wins. Points outside the field of view are dropped.
inline OrganizedCloud organize_lidar(const std::vector<Vec3> &raw_points, const GridConfig &cfg,
                                     std::string frame_id = {}) {
    cfg.validate();
    if (raw_points.empty())
        throw InvalidInput("organize_lidar: empty input");
    OrganizedCloud cloud(cfg.elevation_bins, cfg.azimuth_bins, std::move(frame_id));
    for (const Vec3 &p : raw_points) {
        const auto cell = cfg.cell_of(p);
        if (!cell)
            continue;
        auto &slot = cloud.at(cell->first, cell->second);
        if (!slot || p.squaredNorm() < slot->squaredNorm())
            slot = p;
    }
    return cloud;
}

/// Back-projects a depth image. Zero (or non-finite) raw depth is absent.
template <typename T>
OrganizedCloud depth_to_cloud(const Image<T> &depth, const DepthIntrinsics &k, std::string frame_id = {}) {
    k.validate();
    OrganizedCloud cloud(depth.height, depth.width, std::move(frame_id));
    for (std::size_t v = 0; v < depth.height; ++v) {
        for (std::size_t u = 0; u < depth.width; ++u) {
            const double raw = static_cast<double>(depth.at(u, v));
            if (!(raw > 0.0) || !std::isfinite(raw))
                continue;
            const double z = raw / k.depth_scale;
            cloud.at(v, u) = Vec3((static_cast<double>(u) - k.cx) * z / k.fx,
                                  (static_cast<double>(v) - k.cy) * z / k.fy, z);
        }
    }
    return cloud;
}

/// Keeps cells whose row and column indices are multiples of the steps.
inline OrganizedCloud downsample(const OrganizedCloud &cloud, std::size_t row_step, std::size_t col_step) {
    if (row_step < 1 || col_step < 1)
        throw InvalidInput("downsample: steps must be >= 1");
    const std::size_t rows = (cloud.rows + row_step - 1) / row_step;
    const std::size_t cols = (cloud.cols + col_step - 1) / col_step;
    OrganizedCloud out(rows, cols, cloud.frame_id);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out.at(r, c) = cloud.at(r * row_step, c * col_step);
    return out;
}

/// Applies T to every present point.
inline OrganizedCloud transform_cloud(const OrganizedCloud &cloud, const RigidTransform &T) {
    OrganizedCloud out = cloud;
    for (auto &p : out.points)
        if (p)
            p = T(*p);
    return out;
}

} // namespace linereg
