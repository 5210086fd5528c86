#include <Eigen/Dense>

#include "ms/geom.hpp"

#include <algorithm>
#include <cmath>

#include "ms/errors.hpp"

namespace ms {

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0, -v.z(), v.y(),
         v.z(), 0, -v.x(),
         -v.y(), v.x(), 0;
    return s;
}

Mat3 axis_angle_to_matrix(const AxisAngle& a) {
    const double theta = a.v.norm();
    if (theta < 1e-12) return Mat3::Identity();
    const Vec3 axis = a.v / theta;
    const Mat3 k = skew(axis);
    return Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * k * k;
}

bool is_rotation(const Mat3& m, double tol) {
    const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
    return ortho <= tol && std::abs(m.determinant() - 1.0) <= tol;
}

AxisAngle matrix_to_axis_angle(const Mat3& r) {
    if (!is_rotation(r, 1e-6)) {
        throw InputError("matrix_to_axis_angle: matrix is not a rotation within 1e-6");
    }
    const double trace = r.trace();
    const double cos_theta = std::clamp((trace - 1.0) * 0.5, -1.0, 1.0);
    const double theta = std::acos(cos_theta);

    if (theta < 1e-9) {
        // First-order: r ~ I + [v]x.
        return AxisAngle(0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)));
    }
    if (theta < kPi - 1e-6) {
        const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
        return AxisAngle((theta / (2.0 * std::sin(theta))) * w);
    }

    // Near pi the antisymmetric part vanishes; recover the axis from the
    // symmetric part r = 2 a a' - I (+ O(pi - theta)).
    Vec3 axis;
    const Mat3 s = 0.5 * (r + Mat3::Identity());
    axis.x() = std::sqrt(std::max(s(0, 0), 0.0));
    axis.y() = std::sqrt(std::max(s(1, 1), 0.0));
    axis.z() = std::sqrt(std::max(s(2, 2), 0.0));
    // Off-diagonal signs relative to the largest component.
    int imax = 0;
    if (axis.y() > axis.x()) imax = 1;
    if (axis.z() > axis[imax]) imax = 2;
    for (int i = 0; i < 3; ++i) {
        if (i == imax) continue;
        if (s(imax, i) < 0) axis[i] = -axis[i];
    }
    axis.normalize();
    // Deterministic sign: largest-magnitude component positive.
    if (axis[imax] < 0) axis = -axis;

    // acos loses precision near pi; refine the angle with an atan2 probe on a
    // vector orthogonal to the axis.
    Vec3 probe = axis.cross(Vec3::UnitX());
    if (probe.norm() < 1e-3) probe = axis.cross(Vec3::UnitY());
    probe.normalize();
    const Vec3 rotated = r * probe;
    double refined = std::atan2(rotated.dot(axis.cross(probe)), rotated.dot(probe));
    if (refined < 0) refined += 2.0 * kPi;  // this branch only runs near pi
    return AxisAngle(refined * axis);
}

Vec2 project(const Intrinsics& k, const CameraPose& g, const Vec3& p_world) {
    const Vec3 p = g.r * p_world + g.t;
    if (p.z() <= 1e-9) {
        throw InputError("project: point behind camera (z <= 1e-9)");
    }
    return Vec2(k.fx * p.x() / p.z() + k.ox, k.fy * p.y() / p.z() + k.oy);
}

Mat3 yaw_matrix(double psi) {
    const double c = std::cos(psi), s = std::sin(psi);
    Mat3 m;
    m << c, 0, s,
         0, 1, 0,
         -s, 0, c;
    return m;
}

double yaw_angle(const Mat3& r) {
    return std::atan2(r(0, 2), r(2, 2));
}

AxisAngle yaw_component(const Mat3& r) {
    return AxisAngle(0.0, yaw_angle(r), 0.0);
}

double geodesic_distance(const Mat3& r1, const Mat3& r2) {
    const double trace = (r1.transpose() * r2).trace();
    const double c = std::clamp((trace - 1.0) * 0.5, -1.0, 1.0);
    if (c > 0.99) {
        // acos loses precision near identity; |R1 - R2|_F = 2*sqrt(2)*sin(theta/2).
        const double s = std::clamp((r1 - r2).norm() / (2.0 * std::sqrt(2.0)), -1.0, 1.0);
        return 2.0 * std::asin(s);
    }
    return std::acos(c);
}

}  // namespace ms
