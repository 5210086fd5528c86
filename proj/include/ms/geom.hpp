#ifndef MS_GEOM_HPP
#define MS_GEOM_HPP

#include <Eigen/Core>

namespace ms {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-angle rotation: direction = axis, norm = angle in radians.
struct AxisAngle {
    Vec3 v = Vec3::Zero();

    AxisAngle() = default;
    explicit AxisAngle(const Vec3& vec) : v(vec) {}
    AxisAngle(double x, double y, double z) : v(x, y, z) {}

    double angle() const { return v.norm(); }
};

/// World-to-camera rigid transform: x_cam = r * x_world + t.
struct CameraPose {
    Mat3 r = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    CameraPose() = default;
    CameraPose(const Mat3& rot, const Vec3& trans) : r(rot), t(trans) {}

    /// Camera center in world coordinates.
    Vec3 center() const { return -r.transpose() * t; }

    CameraPose inverse() const { return CameraPose(r.transpose(), -(r.transpose() * t)); }

    /// Composition: (this ∘ other)(x) = this(other(x)).
    CameraPose compose(const CameraPose& other) const {
        return CameraPose(r * other.r, r * other.t + t);
    }
};

/// Pinhole intrinsics, shared across all shots of one video.
struct Intrinsics {
    double fx = 1.0, fy = 1.0;
    double ox = 0.0, oy = 0.0;

    Intrinsics() = default;
    Intrinsics(double fx_, double fy_, double ox_, double oy_) : fx(fx_), fy(fy_), ox(ox_), oy(oy_) {}

    Mat3 matrix() const {
        Mat3 k;
        k << fx, 0, ox, 0, fy, oy, 0, 0, 1;
        return k;
    }

    /// Fallback when intrinsics are unknown: focal = max image dimension,
    /// principal point at image center.
    static Intrinsics fallback(double image_w, double image_h) {
        const double f = image_w > image_h ? image_w : image_h;
        return Intrinsics(f, f, image_w / 2.0, image_h / 2.0);
    }
};

Mat3 skew(const Vec3& v);

/// Rodrigues formula. The zero vector maps to identity.
Mat3 axis_angle_to_matrix(const AxisAngle& a);

/// Inverse of the Rodrigues map. Angle in [0, pi]; at angle pi the axis sign is
/// fixed so its largest-magnitude component is positive. Throws InputError when
/// r is not orthonormal within 1e-6.
AxisAngle matrix_to_axis_angle(const Mat3& r);

/// True when m' m = I and det(m) = +1 within tol.
bool is_rotation(const Mat3& m, double tol = 1e-6);

/// Pinhole projection. Throws InputError when the transformed point has
/// depth <= 1e-9 (behind or on the camera plane).
Vec2 project(const Intrinsics& k, const CameraPose& g, const Vec3& p_world);

/// Rotation by angle psi about +Y (right-handed, Y-up).
Mat3 yaw_matrix(double psi);

/// Y-axis component of a rotation: psi = atan2(m(0,2), m(2,2)).
AxisAngle yaw_component(const Mat3& r);
double yaw_angle(const Mat3& r);

/// Geodesic distance on SO(3): |angle(r1' r2)| in radians.
double geodesic_distance(const Mat3& r1, const Mat3& r2);

constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace ms

#endif
