#pragma once

// Lines, planes and rigid transforms in R^3.
//
// Conventions used throughout the library:
//  * A RigidTransform T = (R, t) acts on points as x' = R x + t.
//  * Composition (a * b) applies b first, then a.
//  * Plücker lines are (direction, moment) with moment = p x direction for any
//    point p on the line, and a unit direction.
//  * Planes satisfy normal . x + offset = 0 with a unit normal.

#include "linereg/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

namespace linereg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline Mat3 skew(const Vec3 &v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return m;
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Rotation angle of R in [0, pi]. Uses atan2(sin, cos) so that a rotation
/// matrix whose antisymmetric part vanishes yields exactly zero.
inline double rotation_angle(const Mat3 &R) {
    const double cos_part = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
    const Vec3 axis(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    return std::atan2(0.5 * axis.norm(), cos_part);
}

/// Angle of the rotation Ra^T * Rb, from the chordal distance
/// |Ra - Rb|_F = 2 sqrt(2) sin(angle / 2). Exactly zero when Ra == Rb.
inline double rotation_distance(const Mat3 &Ra, const Mat3 &Rb) {
    const double chord = (Ra - Rb).norm() / (2.0 * std::numbers::sqrt2);
    return 2.0 * std::asin(std::min(chord, 1.0));
}

/// Nearest proper rotation (in the Frobenius sense).
inline Mat3 orthonormalize(const Mat3 &M) {
    Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 D = Mat3::Identity();
    D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * D * svd.matrixV().transpose();
}

struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    RigidTransform() = default;
    RigidTransform(const Mat3 &R, const Vec3 &t) : rotation(R), translation(t) {}

    static RigidTransform identity() { return {}; }

    static RigidTransform from_axis_angle(const Vec3 &axis, double angle, const Vec3 &t = Vec3::Zero()) {
        return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), t};
    }

    Vec3 operator()(const Vec3 &x) const { return rotation * x + translation; }

    RigidTransform operator*(const RigidTransform &rhs) const {
        return {rotation * rhs.rotation, rotation * rhs.translation + translation};
    }

    RigidTransform inverse() const {
        const Mat3 Rt = rotation.transpose();
        return {Rt, -(Rt * translation)};
    }

    bool is_proper(double tol = 1e-9) const {
        return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() < tol &&
               std::abs(rotation.determinant() - 1.0) < tol;
    }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation;
        m.topRightCorner<3, 1>() = translation;
        return m;
    }
};

/// Rotation angle (radians) and translation distance between two transforms.
struct PoseDelta {
    double rotation_rad;
    double translation;
};

inline PoseDelta pose_delta(const RigidTransform &a, const RigidTransform &b) {
    return {rotation_angle(a.rotation.transpose() * b.rotation), (a.translation - b.translation).norm()};
}

class LineSegment3D {
  public:
    static constexpr double kMinLength = 1e-12;

    LineSegment3D(const Vec3 &a, const Vec3 &b) : a_(a), b_(b) {
        if (!((a - b).norm() >= kMinLength))
            throw InvalidInput("degenerate line segment: endpoints coincide");
    }

    const Vec3 &a() const { return a_; }
    const Vec3 &b() const { return b_; }
    Vec3 vector() const { return b_ - a_; }
    Vec3 direction() const { return (b_ - a_).normalized(); }
    Vec3 midpoint() const { return 0.5 * (a_ + b_); }
    double length() const { return (b_ - a_).norm(); }
    Vec3 point_at(double s) const { return a_ + s * (b_ - a_); }

    LineSegment3D transformed(const RigidTransform &T) const { return {T(a_), T(b_)}; }
    LineSegment3D translated(const Vec3 &v) const { return {a_ + v, b_ + v}; }

  private:
    Vec3 a_, b_;
};

struct PluckerLine {
    Vec3 direction = Vec3::UnitX();
    Vec3 moment = Vec3::Zero();

    static PluckerLine through(const Vec3 &point, const Vec3 &dir) {
        const Vec3 d = dir.normalized();
        return {d, point.cross(d)};
    }

    /// Point on the line closest to the origin.
    Vec3 closest_to_origin() const { return direction.cross(moment); }

    Vec6 coords() const {
        Vec6 v;
        v << direction, moment;
        return v;
    }

    double distance_to(const Vec3 &x) const { return (x.cross(direction) - moment).norm(); }
};

struct Plane {
    Vec3 normal = Vec3::UnitZ();
    double offset = 0.0;

    static Plane through(const Vec3 &point, const Vec3 &n) {
        const Vec3 u = n.normalized();
        return {u, -u.dot(point)};
    }

    double signed_distance(const Vec3 &x) const { return normal.dot(x) + offset; }

    /// Point of the plane closest to the origin.
    Vec3 closest_to_origin() const { return -offset * normal; }
};

inline PluckerLine plucker_from_segment(const LineSegment3D &seg) {
    const Vec3 v = seg.b() - seg.a();
    const double len = v.norm();
    if (!(len >= LineSegment3D::kMinLength))
        throw InvalidInput("plucker_from_segment: degenerate segment");
    const Vec3 d = v / len;
    return {d, seg.a().cross(d)};
}

inline PluckerLine transform_line(const RigidTransform &T, const PluckerLine &l) {
    const Vec3 d = T.rotation * l.direction;
    return {d, T.rotation * l.moment + T.translation.cross(d)};
}

inline Plane transform_plane(const RigidTransform &T, const Plane &p) {
    const Vec3 n = T.rotation * p.normal;
    return {n, p.offset - n.dot(T.translation)};
}

/// Reciprocal product of two lines; zero iff they are coplanar.
inline double reciprocal_product(const PluckerLine &m, const PluckerLine &l) {
    return m.direction.dot(l.moment) + m.moment.dot(l.direction);
}

/// 6x6 bilinear form E(T) such that m^T E l vanishes iff l, carried into the
/// frame of m by T, meets m. Rows/columns are ordered (direction, moment).
inline Mat6 intersection_form(const RigidTransform &T) {
    Mat6 E = Mat6::Zero();
    E.topLeftCorner<3, 3>() = skew(T.translation) * T.rotation;
    E.topRightCorner<3, 3>() = T.rotation;
    E.bottomLeftCorner<3, 3>() = T.rotation;
    return E;
}

/// Generalized epipolar residual m^T E(T) l. Equivalent to
/// reciprocal_product(m, transform_line(T, l)).
inline double epipolar_residual(const PluckerLine &m, const PluckerLine &l, const RigidTransform &T) {
    const Vec3 Rd = T.rotation * l.direction;
    return m.direction.dot(T.rotation * l.moment + T.translation.cross(Rd)) + m.moment.dot(Rd);
}

/// Distance between two infinite lines.
inline double line_line_distance(const PluckerLine &a, const PluckerLine &b) {
    const Vec3 c = a.direction.cross(b.direction);
    const double s = c.norm();
    if (s < 1e-12) {
        // Parallel: distance from a point of b to a.
        return a.distance_to(b.closest_to_origin());
    }
    return std::abs(reciprocal_product(a, b)) / s;
}

struct ClosestPoints {
    Vec3 p1;
    Vec3 p2;
    double dist;
    double s; ///< parameter of p1 along the first segment, in [0, 1]
    double t; ///< parameter of p2 along the second segment, in [0, 1]
};

/// Closest points between segments [a1, b1] and [a2, b2] (clamped to their
/// extents). Parallel segments resolve to the midpoint of their overlap.
inline ClosestPoints closest_points(const Vec3 &a1, const Vec3 &b1, const Vec3 &a2, const Vec3 &b2) {
    const Vec3 d1 = b1 - a1;
    const Vec3 d2 = b2 - a2;
    const Vec3 r = a1 - a2;
    const double a = d1.squaredNorm();
    const double e = d2.squaredNorm();
    const double b = d1.dot(d2);
    const double c = d1.dot(r);
    const double f = d2.dot(r);
    const double denom = a * e - b * b;

    double s = 0.0;
    double t = 0.0;
    if (denom <= 1e-14 * a * e) {
        const double u0 = -c / a;
        const double u1 = (b2 - a1).dot(d1) / a;
        const double lo = std::max(0.0, std::min(u0, u1));
        const double hi = std::min(1.0, std::max(u0, u1));
        if (lo <= hi)
            s = 0.5 * (lo + hi);
        else
            s = std::max(u0, u1) < 0.0 ? 0.0 : 1.0;
        t = std::clamp(d2.dot(a1 + s * d1 - a2) / e, 0.0, 1.0);
    } else {
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
        t = (b * s + f) / e;
        if (t < 0.0) {
            t = 0.0;
            s = std::clamp(-c / a, 0.0, 1.0);
        } else if (t > 1.0) {
            t = 1.0;
            s = std::clamp((b - c) / a, 0.0, 1.0);
        }
    }
    ClosestPoints out;
    out.p1 = a1 + s * d1;
    out.p2 = a2 + t * d2;
    out.dist = (out.p1 - out.p2).norm();
    out.s = s;
    out.t = t;
    return out;
}

inline ClosestPoints closest_points(const LineSegment3D &s1, const LineSegment3D &s2) {
    return closest_points(s1.a(), s1.b(), s2.a(), s2.b());
}

inline double segment_distance(const LineSegment3D &s1, const LineSegment3D &s2) { return closest_points(s1, s2).dist; }

/// Least-squares rigid transform with T(src_i) ~ dst_i (Kabsch/Umeyama without
/// scale). Throws DegenerateInput for fewer than 3 points or a collinear source.
inline RigidTransform fit_rigid_transform(std::span<const Vec3> src, std::span<const Vec3> dst) {
    if (src.size() != dst.size())
        throw InvalidInput("fit_rigid_transform: point lists differ in length");
    if (src.size() < 3)
        throw DegenerateInput("fit_rigid_transform: need at least 3 point pairs");

    const double n = static_cast<double>(src.size());
    Vec3 cs = Vec3::Zero();
    Vec3 cd = Vec3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= n;
    cd /= n;

    Mat3 H = Mat3::Zero();
    Mat3 S = Mat3::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const Vec3 ps = src[i] - cs;
        H.noalias() += ps * (dst[i] - cd).transpose();
        S.noalias() += ps * ps.transpose();
    }

    Eigen::SelfAdjointEigenSolver<Mat3> spread(S, Eigen::EigenvaluesOnly);
    const Vec3 ev = spread.eigenvalues(); // ascending
    if (!(ev(2) > 0.0) || ev(1) <= 1e-14 * ev(2))
        throw DegenerateInput("fit_rigid_transform: source points are collinear or coincident");

    Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3 &U = svd.matrixU();
    const Mat3 &V = svd.matrixV();
    Mat3 D = Mat3::Identity();
    // Reflection: flip the direction of the smallest singular value.
    if ((V * U.transpose()).determinant() < 0.0)
        D(2, 2) = -1.0;
    const Mat3 R = V * D * U.transpose();
    return {R, cd - R * cs};
}

inline RigidTransform fit_rigid_transform(const std::vector<Vec3> &src, const std::vector<Vec3> &dst) {
    return fit_rigid_transform(std::span<const Vec3>(src), std::span<const Vec3>(dst));
}

} // namespace linereg
