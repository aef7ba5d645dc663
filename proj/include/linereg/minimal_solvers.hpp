#pragma once

// Closed-form solvers for registration with plane correspondences:
//  * 1L2P: one line intersection + two plane correspondences (linear in one unknown)
//  * 3L1P: three line intersections + one plane correspondence (quartic in sin(theta))
//
// Both move each scan into a canonical frame in which the remaining relative
// motion is simple, solve there, and undo the canonical transforms. Returned
// poses map frame-1 coordinates into frame 2, and corresponding planes are
// expected to carry consistently oriented normals.

#include "linereg/errors.hpp"
#include "linereg/geometry.hpp"
#include "linereg/polynomial.hpp"

#include <array>
#include <cmath>
#include <utility>
#include <vector>

namespace linereg {

/// Pre-transforms of the two scans into the solver's canonical frame.
struct CanonicalFrames {
    RigidTransform pre1;
    RigidTransform pre2;
};

/// Up to four poses; disambiguation is left to the caller.
struct PoseCandidateSet {
    std::vector<RigidTransform> poses;

    std::size_t size() const { return poses.size(); }
    bool empty() const { return poses.empty(); }
};

/// A line of frame 1 and the line of frame 2 it should intersect.
struct LineIntersection {
    PluckerLine l; ///< frame 1
    PluckerLine m; ///< frame 2
};

/// Rigid transform taking p2 to z = 0 (normal +z) and the line p1 ∩ p2 to the
/// x-axis, oriented so that the transformed normal of p1 has y >= 0. The
/// point of the intersection line closest to the origin goes to the origin.
inline RigidTransform canonicalize_1l2p(const Plane &p1, const Plane &p2) {
    const Vec3 axis = p1.normal.cross(p2.normal);
    const double s = axis.norm();
    if (s <= std::sin(deg2rad(1.0)))
        throw DegenerateInput("canonicalize_1l2p: planes are (nearly) parallel");
    const Vec3 ez = p2.normal;
    Vec3 ex = axis / s;
    Vec3 ey = ez.cross(ex);
    if (p1.normal.dot(ey) < 0.0) {
        ex = -ex;
        ey = -ey;
    }
    Mat3 R;
    R.row(0) = ex.transpose();
    R.row(1) = ey.transpose();
    R.row(2) = ez.transpose();

    // Closest point to the origin on the intersection line: solve
    // n1.x = -d1, n2.x = -d2 with x in span(n1, n2).
    const double n12 = p1.normal.dot(p2.normal);
    const double det = 1.0 - n12 * n12;
    const double k1 = (-p1.offset + n12 * p2.offset) / det;
    const double k2 = (-p2.offset + n12 * p1.offset) / det;
    const Vec3 x0 = k1 * p1.normal + k2 * p2.normal;
    return {R, -(R * x0)};
}

/// Rigid transform taking p to z = 0 with normal +z. The in-plane freedom is
/// fixed by sending the projection of the world x-axis (y-axis if x is nearly
/// normal to p) to +x and the point of p closest to the origin to the origin.
inline RigidTransform canonicalize_3l1p(const Plane &p) {
    const Vec3 ez = p.normal;
    Vec3 ref = Vec3::UnitX() - ez.x() * ez;
    if (ref.norm() < 1e-6)
        ref = Vec3::UnitY() - ez.y() * ez;
    const Vec3 ex = ref.normalized();
    const Vec3 ey = ez.cross(ex);
    Mat3 R;
    R.row(0) = ex.transpose();
    R.row(1) = ey.transpose();
    R.row(2) = ez.transpose();
    return {R, -(R * p.closest_to_origin())};
}

/// 1L2P. `planes1` = (pi_1, pi_2) in frame 1 and `planes2` = (pi'_1, pi'_2) in
/// frame 2. After canonicalization the motion is a pure translation t1 along
/// x, and the intersection constraint is alpha * t1 + beta = 0.
inline RigidTransform solve_1l2p(const PluckerLine &l1, const PluckerLine &m1, const std::pair<Plane, Plane> &planes1,
                                 const std::pair<Plane, Plane> &planes2) {
    const RigidTransform C1 = canonicalize_1l2p(planes1.first, planes1.second);
    const RigidTransform C2 = canonicalize_1l2p(planes2.first, planes2.second);
    const PluckerLine l = transform_line(C1, l1);
    const PluckerLine m = transform_line(C2, m1);

    const double alpha = l.direction.cross(m.direction).x();
    const double beta = reciprocal_product(m, l);
    if (std::abs(alpha) < 1e-9)
        throw DegenerateInput("solve_1l2p: line pair does not constrain the translation along the plane intersection");
    const RigidTransform shift(Mat3::Identity(), Vec3(-beta / alpha, 0.0, 0.0));
    RigidTransform T = C2.inverse() * shift * C1;
    T.rotation = orthonormalize(T.rotation);
    return T;
}

namespace detail {

/// k0 + kc * cos + ks * sin.
struct TrigAffine {
    double k0 = 0.0, kc = 0.0, ks = 0.0;
    double at(double c, double s) const { return k0 + kc * c + ks * s; }
};

/// Dense polynomial in (c, s) of total degree <= 3; coef[i][j] multiplies c^i s^j.
struct CsPoly {
    double coef[4][4] = {};

    static CsPoly from(const TrigAffine &a) {
        CsPoly p;
        p.coef[0][0] = a.k0;
        p.coef[1][0] = a.kc;
        p.coef[0][1] = a.ks;
        return p;
    }

    CsPoly operator*(const CsPoly &o) const {
        CsPoly r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; i + j < 4; ++j)
                if (coef[i][j] != 0.0)
                    for (int k = 0; i + k < 4; ++k)
                        for (int l = 0; i + j + k + l < 4; ++l)
                            r.coef[i + k][j + l] += coef[i][j] * o.coef[k][l];
        return r;
    }

    CsPoly &operator+=(const CsPoly &o) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                coef[i][j] += o.coef[i][j];
        return *this;
    }

    CsPoly operator*(double k) const {
        CsPoly r = *this;
        for (auto &row : r.coef)
            for (double &v : row)
                v *= k;
        return r;
    }
};

/// Rows [a, b, g] of the 3x3 system a*t1 + b*t2 + g = 0, one per line pair,
/// for the canonical motion R = Rz(theta), t = (t1, t2, 0).
inline std::array<std::array<TrigAffine, 3>, 3> build_3l1p_system(const std::array<LineIntersection, 3> &pairs) {
    std::array<std::array<TrigAffine, 3>, 3> rows{};
    for (std::size_t i = 0; i < 3; ++i) {
        const Vec3 &dl = pairs[i].l.direction;
        const Vec3 &ml = pairs[i].l.moment;
        const Vec3 &dm = pairs[i].m.direction;
        const Vec3 &mm = pairs[i].m.moment;
        // Rz(theta) v = cos * (vx, vy, 0) + sin * (-vy, vx, 0) + (0, 0, vz)
        const std::array<Vec3, 3> u = {Vec3(0.0, 0.0, dl.z()), Vec3(dl.x(), dl.y(), 0.0), Vec3(-dl.y(), dl.x(), 0.0)};
        const std::array<Vec3, 3> w = {Vec3(0.0, 0.0, ml.z()), Vec3(ml.x(), ml.y(), 0.0), Vec3(-ml.y(), ml.x(), 0.0)};
        double a[3], b[3], g[3];
        for (int k = 0; k < 3; ++k) {
            const Vec3 x = u[static_cast<std::size_t>(k)].cross(dm); // t . (u x dm)
            a[k] = x.x();
            b[k] = x.y();
            g[k] = dm.dot(w[static_cast<std::size_t>(k)]) + mm.dot(u[static_cast<std::size_t>(k)]);
        }
        rows[i][0] = {a[0], a[1], a[2]};
        rows[i][1] = {b[0], b[1], b[2]};
        rows[i][2] = {g[0], g[1], g[2]};
    }
    return rows;
}

/// det of the system as F(s) + c * G(s) on the unit circle. The cubic part of
/// the determinant is (c^2 + s^2) times a linear form, so F has degree <= 2
/// and G degree <= 1 once c^2 is replaced by 1 - s^2.
struct CircleDet {
    std::array<double, 3> F{}; // f0 + f1 s + f2 s^2
    std::array<double, 2> G{}; // g0 + g1 s
    double scale = 0.0;
};

inline CircleDet reduce_determinant(const std::array<std::array<TrigAffine, 3>, 3> &M) {
    static constexpr int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
    static constexpr double signs[6] = {1, 1, 1, -1, -1, -1};
    CsPoly det;
    for (int p = 0; p < 6; ++p) {
        const CsPoly term = CsPoly::from(M[0][static_cast<std::size_t>(perms[p][0])]) *
                            CsPoly::from(M[1][static_cast<std::size_t>(perms[p][1])]) *
                            CsPoly::from(M[2][static_cast<std::size_t>(perms[p][2])]);
        det += term * signs[p];
    }
    // c^i s^j -> reduce even powers of c with c^2 = 1 - s^2.
    double Fs[6] = {};
    double Gs[6] = {};
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; i + j < 4; ++j) {
            const double v = det.coef[i][j];
            if (v == 0.0)
                continue;
            // (1 - s^2)^(i/2) expanded
            const int h = i / 2;
            double binom = 1.0;
            for (int k = 0; k <= h; ++k) {
                const double coef = v * binom * ((k % 2) ? -1.0 : 1.0);
                (i % 2 ? Gs : Fs)[j + 2 * k] += coef;
                binom = binom * (h - k) / (k + 1);
            }
        }
    }
    CircleDet out;
    out.F = {Fs[0], Fs[1], Fs[2]};
    out.G = {Gs[0], Gs[1]};
    double row_scale = 1.0;
    for (const auto &row : M) {
        double n = 0.0;
        for (const auto &e : row)
            n += e.k0 * e.k0 + e.kc * e.kc + e.ks * e.ks;
        row_scale *= std::sqrt(n);
    }
    out.scale = row_scale;
    return out;
}

} // namespace detail

/// 3L1P. `line_pairs` are intersections (frame-1 line, frame-2 line); `p1` is
/// the plane in frame 1 and `p1_prime` the same plane seen from frame 2.
///
/// In canonical frames R = Rz(theta) and t = (t1, t2, 0); each constraint is
/// affine in (t1, t2) with coefficients affine in (cos, sin). Non-trivial
/// (t1, t2, 1) requires a vanishing 3x3 determinant, which on the unit circle
/// reads F(s) + c G(s) = 0; squaring with c^2 = 1 - s^2 gives the quartic
/// F(s)^2 - (1 - s^2) G(s)^2 = 0. Each real root is tried with both signs of
/// cos, the translation is the null vector of the system, and a candidate is
/// kept only if it satisfies all three original constraints.
inline PoseCandidateSet solve_3l1p(const std::array<LineIntersection, 3> &line_pairs, const Plane &p1,
                                   const Plane &p1_prime) {
    const RigidTransform C1 = canonicalize_3l1p(p1);
    const RigidTransform C2 = canonicalize_3l1p(p1_prime);
    std::array<LineIntersection, 3> canon;
    for (std::size_t i = 0; i < 3; ++i)
        canon[i] = {transform_line(C1, line_pairs[i].l), transform_line(C2, line_pairs[i].m)};

    const auto M = detail::build_3l1p_system(canon);
    const auto D = detail::reduce_determinant(M);
    const auto &F = D.F;
    const auto &G = D.G;

    Quartic q;
    q.c4 = F[2] * F[2] + G[1] * G[1];
    q.c3 = 2.0 * F[1] * F[2] + 2.0 * G[0] * G[1];
    q.c2 = F[1] * F[1] + 2.0 * F[0] * F[2] + G[0] * G[0] - G[1] * G[1];
    q.c1 = 2.0 * F[0] * F[1] - 2.0 * G[0] * G[1];
    q.c0 = F[0] * F[0] - G[0] * G[0];
    const double scale2 = D.scale * D.scale;
    if (!(q.max_abs_coeff() > 1e-12 * scale2))
        throw DegenerateInput("solve_3l1p: rotation is not constrained by the line pairs");

    double moment_scale = 1.0;
    for (const auto &p : line_pairs)
        moment_scale = std::max({moment_scale, p.l.moment.norm(), p.m.moment.norm()});
    const double tol = 1e-7 * moment_scale;

    PoseCandidateSet out;
    for (double s : solve_quartic(q)) {
        if (std::abs(s) > 1.0 + 1e-9)
            continue;
        s = std::clamp(s, -1.0, 1.0);
        const double cabs = std::sqrt(std::max(0.0, 1.0 - s * s));
        for (const double c : {cabs, -cabs}) {
            if (c == -cabs && cabs == 0.0)
                break;
            Mat3 A;
            for (int r = 0; r < 3; ++r)
                for (int k = 0; k < 3; ++k)
                    A(r, k) = M[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)].at(c, s);
            Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullV);
            const auto &sv = svd.singularValues();
            if (sv(0) > 0.0 && sv(1) < 1e-10 * sv(0))
                continue; // translation not determined by this root
            const Vec3 v = svd.matrixV().col(2);
            if (std::abs(v(2)) < 1e-12 * v.norm())
                continue;
            Mat3 Rz;
            Rz << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
            const RigidTransform canon_pose(Rz, Vec3(v(0) / v(2), v(1) / v(2), 0.0));
            RigidTransform T = C2.inverse() * canon_pose * C1;
            T.rotation = orthonormalize(T.rotation);

            bool ok = true;
            for (const auto &p : line_pairs)
                ok = ok && std::abs(epipolar_residual(p.m, p.l, T)) <= tol;
            if (!ok)
                continue;
            bool duplicate = false;
            for (const auto &prev : out.poses) {
                const auto d = pose_delta(prev, T);
                duplicate = duplicate || (d.rotation_rad < 1e-9 && d.translation < 1e-9);
            }
            if (!duplicate && out.poses.size() < 4)
                out.poses.push_back(T);
        }
    }
    return out;
}

} // namespace linereg
