#pragma once

// Trajectories (world-from-frame poses) and their TUM / KITTI text formats.

#include "linereg/errors.hpp"
#include "linereg/geometry.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace linereg {

struct StampedPose {
    double stamp = 0.0;
    RigidTransform pose;
};

/// Ordered world-from-frame poses. The first frame defines the world frame.
struct Trajectory {
    std::vector<StampedPose> poses;

    std::size_t size() const { return poses.size(); }
    bool empty() const { return poses.empty(); }
    const RigidTransform &operator[](std::size_t i) const { return poses[i].pose; }
    void push_back(double stamp, const RigidTransform &T) { poses.push_back({stamp, T}); }
};

enum class TrajectoryFormat { tum, kitti };

namespace detail {

inline std::vector<std::string> split_ws(const std::string &line) {
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string tok;
    while (ss >> tok)
        out.push_back(tok);
    return out;
}

inline bool is_blank_or_comment(const std::string &line) {
    const auto pos = line.find_first_not_of(" \t\r");
    return pos == std::string::npos || line[pos] == '#';
}

inline double parse_double(const std::string &tok, const std::string &file, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size())
            throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception &) {
        throw ParseError(file, line_no, "not a number: '" + tok + "'");
    }
}

} // namespace detail

/// Writes one pose per line. `header` lines are emitted as '#' comments.
inline void write_trajectory(std::ostream &os, const Trajectory &traj, TrajectoryFormat fmt,
                             const std::vector<std::string> &header = {}) {
    for (const auto &h : header)
        os << "# " << h << '\n';
    os << std::fixed << std::setprecision(9);
    for (const auto &sp : traj.poses) {
        const Mat3 &R = sp.pose.rotation;
        const Vec3 &t = sp.pose.translation;
        if (fmt == TrajectoryFormat::tum) {
            Eigen::Quaterniond q(R);
            q.normalize();
            if (q.w() < 0.0)
                q.coeffs() = -q.coeffs();
            os << sp.stamp << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x() << ' ' << q.y() << ' '
               << q.z() << ' ' << q.w() << '\n';
        } else {
            for (int r = 0; r < 3; ++r) {
                os << R(r, 0) << ' ' << R(r, 1) << ' ' << R(r, 2) << ' ' << t(r);
                os << (r == 2 ? '\n' : ' ');
            }
        }
    }
}

inline void write_trajectory(const std::string &path, const Trajectory &traj, TrajectoryFormat fmt,
                             const std::vector<std::string> &header = {}) {
    std::ofstream f(path);
    if (!f)
        throw IoError("cannot open for writing: " + path);
    write_trajectory(f, traj, fmt, header);
    if (!f)
        throw IoError("write failed: " + path);
}

/// Reads a TUM (8 columns) or KITTI (12 columns) trajectory; the format is
/// taken from the first data line and every later line must match it.
/// KITTI files get the line index as stamp.
inline Trajectory read_trajectory(std::istream &is, const std::string &name, TrajectoryFormat *detected = nullptr) {
    Trajectory traj;
    std::string line;
    std::size_t line_no = 0;
    std::size_t expected = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (detail::is_blank_or_comment(line))
            continue;
        const auto tok = detail::split_ws(line);
        if (expected == 0) {
            if (tok.size() != 8 && tok.size() != 12)
                throw ParseError(name, line_no,
                                 "expected 8 (TUM) or 12 (KITTI) values, got " + std::to_string(tok.size()));
            expected = tok.size();
        } else if (tok.size() != expected) {
            throw ParseError(name, line_no,
                             "expected " + std::to_string(expected) + " values, got " + std::to_string(tok.size()));
        }
        std::vector<double> v;
        v.reserve(tok.size());
        for (const auto &t : tok)
            v.push_back(detail::parse_double(t, name, line_no));

        RigidTransform T;
        double stamp = 0.0;
        if (expected == 8) {
            stamp = v[0];
            Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
            if (q.norm() < 1e-9)
                throw ParseError(name, line_no, "zero quaternion");
            T.rotation = q.normalized().toRotationMatrix();
            T.translation = Vec3(v[1], v[2], v[3]);
        } else {
            stamp = static_cast<double>(traj.size());
            Mat3 M;
            M << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
            if (std::abs(M.determinant() - 1.0) > 1e-3)
                throw ParseError(name, line_no, "rotation block is not a rotation");
            T.rotation = orthonormalize(M);
            T.translation = Vec3(v[3], v[7], v[11]);
        }
        traj.push_back(stamp, T);
    }
    if (detected)
        *detected = expected == 12 ? TrajectoryFormat::kitti : TrajectoryFormat::tum;
    return traj;
}

inline Trajectory read_trajectory(const std::string &path, TrajectoryFormat *detected = nullptr) {
    std::ifstream f(path);
    if (!f)
        throw IoError("cannot open trajectory: " + path);
    return read_trajectory(f, path, detected);
}

} // namespace linereg
