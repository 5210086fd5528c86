#ifndef MS_ALIGN_HPP
#define MS_ALIGN_HPP

#include <array>
#include <vector>

#include "ms/epipolar.hpp"
#include "ms/geom.hpp"

namespace ms {

constexpr int kBodyJointCount = 23;   // joint rotations beyond the root
constexpr int kSkeletonJointCount = 24;
constexpr int kShapeDim = 10;

/// Per-frame body configuration: root orientation, 23 joint rotations, shape
/// coefficients, and root translation in meters.
struct BodyState {
    AxisAngle root_orient;
    std::array<AxisAngle, kBodyJointCount> body_pose{};
    std::array<double, kShapeDim> shape{};
    Vec3 translation = Vec3::Zero();
};

/// One shot's motion estimate in its own view-aligned world frame.
struct ShotMotion {
    std::vector<BodyState> states;
    std::vector<CameraPose> cameras;
    int shot_index = 0;
    int start_frame = 0;  // inclusive
    int end_frame = 0;    // exclusive

    int length() const { return end_frame - start_frame; }
};

/// Full-video motion in the first shot's world frame.
struct StitchedMotion {
    std::vector<BodyState> states;
    std::vector<Mat3> applied_offsets;  // one per transition
    std::vector<int> provenance;        // source shot index per frame
};

/// Yaw component of the measured relative camera rotation across a transition;
/// left-multiplied onto every subsequent frame's root orientation.
Mat3 orientation_offset(const BodyState& tail, const BodyState& head, const RelativePose& rel);

/// Rotates a shot rigidly about `pivot`: root orientations are pre-multiplied
/// by `offset`, translations rotate about the pivot; body pose and shape are
/// untouched.
ShotMotion apply_offset(const ShotMotion& shot, const Mat3& offset, const Vec3& pivot);

/// Spherical cross-fade over frames within +-half_window of `transition`:
/// every joint rotation is slerped between the poses just outside the window
/// with a smoothstep blend. Frames outside the window are returned bit-identical.
/// Windows are clamped at sequence ends.
std::vector<BodyState> smooth_boundary(const std::vector<BodyState>& states, int transition,
                                       int half_window);

/// Stitches the per-shot motions into one continuous sequence: shot 0 is
/// copied verbatim; each later shot is rotated by the accumulated orientation
/// offsets about its first-frame translation, then each boundary is smoothed.
StitchedMotion stitch(const std::vector<ShotMotion>& shots,
                      const std::vector<RelativePose>& rel_poses, int smoother_half_window = 5);

/// Slerp between two rotations (t in [0, 1]).
Mat3 slerp(const Mat3& r0, const Mat3& r1, double t);

}  // namespace ms

#endif
