#include <Eigen/Dense>

#include "ms/align.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ms/errors.hpp"

namespace ms {

Mat3 slerp(const Mat3& r0, const Mat3& r1, double t) {
    const AxisAngle delta = matrix_to_axis_angle(r0.transpose() * r1);
    return r0 * axis_angle_to_matrix(AxisAngle(t * delta.v));
}

Mat3 orientation_offset(const BodyState& tail, const BodyState& head, const RelativePose& rel) {
    (void)tail;
    (void)head;
    // Eq-style yaw decomposition: only the Y-axis component of the measured
    // camera rotation is applied; the full rotation stays available on rel for
    // diagnostics.
    return axis_angle_to_matrix(yaw_component(rel.r_delta));
}

ShotMotion apply_offset(const ShotMotion& shot, const Mat3& offset, const Vec3& pivot) {
    ShotMotion out = shot;
    for (BodyState& s : out.states) {
        s.root_orient = matrix_to_axis_angle(offset * axis_angle_to_matrix(s.root_orient));
        s.translation = offset * (s.translation - pivot) + pivot;
    }
    for (CameraPose& g : out.cameras) {
        // Keep cameras consistent with the rotated world: x_cam = r (O'(x)) with
        // O'(x) = offset (x - pivot) + pivot, so r' = r O^-1 adjusted for pivot.
        const Mat3 r_new = g.r * offset.transpose();
        g.t = g.t + g.r * pivot - r_new * pivot;
        g.r = r_new;
    }
    return out;
}

std::vector<BodyState> smooth_boundary(const std::vector<BodyState>& states, int transition,
                                       int half_window) {
    const int n = static_cast<int>(states.size());
    if (transition <= 0 || transition >= n) {
        throw InputError("smooth_boundary: transition outside the sequence");
    }
    if (half_window < 1) {
        throw InputError("smooth_boundary: half_window must be >= 1");
    }

    // Window frames [lo, hi] are replaced; anchors sit just outside and are
    // clamped at the sequence ends.
    const int lo = std::max(0, transition - half_window);
    const int hi = std::min(n - 1, transition + half_window);
    const int pre = std::max(0, lo - 1);
    const int post = std::min(n - 1, hi + 1);
    if (pre == post) return states;

    std::vector<BodyState> out = states;
    const BodyState& a = states[static_cast<size_t>(pre)];
    const BodyState& b = states[static_cast<size_t>(post)];
    const Mat3 a_root = axis_angle_to_matrix(a.root_orient);
    const Mat3 b_root = axis_angle_to_matrix(b.root_orient);
    std::array<Mat3, kBodyJointCount> a_joints, b_joints;
    for (int j = 0; j < kBodyJointCount; ++j) {
        a_joints[static_cast<size_t>(j)] = axis_angle_to_matrix(a.body_pose[static_cast<size_t>(j)]);
        b_joints[static_cast<size_t>(j)] = axis_angle_to_matrix(b.body_pose[static_cast<size_t>(j)]);
    }

    for (int f = lo; f <= hi; ++f) {
        const double u = static_cast<double>(f - pre) / static_cast<double>(post - pre);
        const double s = u * u * (3.0 - 2.0 * u);  // smoothstep
        BodyState& dst = out[static_cast<size_t>(f)];
        dst.root_orient = matrix_to_axis_angle(slerp(a_root, b_root, s));
        for (int j = 0; j < kBodyJointCount; ++j) {
            dst.body_pose[static_cast<size_t>(j)] = matrix_to_axis_angle(
                slerp(a_joints[static_cast<size_t>(j)], b_joints[static_cast<size_t>(j)], s));
        }
    }
    return out;
}

StitchedMotion stitch(const std::vector<ShotMotion>& shots,
                      const std::vector<RelativePose>& rel_poses, int smoother_half_window) {
    if (shots.empty()) {
        throw InputError("stitch: no shots");
    }
    if (rel_poses.size() + 1 != shots.size()) {
        throw InputError("stitch: need exactly one relative pose per transition (" +
                         std::to_string(shots.size() - 1) + " expected, " +
                         std::to_string(rel_poses.size()) + " given)");
    }
    for (size_t s = 1; s < shots.size(); ++s) {
        if (shots[s].start_frame != shots[s - 1].end_frame) {
            throw InputError("stitch: shot frame ranges must be contiguous and non-overlapping");
        }
    }

    StitchedMotion out;
    out.states.reserve(static_cast<size_t>(shots.back().end_frame - shots.front().start_frame));

    Mat3 total_offset = Mat3::Identity();
    std::vector<int> transitions;
    for (size_t s = 0; s < shots.size(); ++s) {
        ShotMotion placed = shots[s];
        if (s > 0) {
            const BodyState& tail = shots[s - 1].states.back();
            const BodyState& head = shots[s].states.front();
            const Mat3 step = orientation_offset(tail, head, rel_poses[s - 1]);
            total_offset = total_offset * step;
            out.applied_offsets.push_back(total_offset);
            transitions.push_back(shots[s].start_frame - shots.front().start_frame);
            placed = apply_offset(placed, total_offset, placed.states.front().translation);
        }
        for (const BodyState& st : placed.states) out.states.push_back(st);
        for (int f = 0; f < placed.length(); ++f) out.provenance.push_back(placed.shot_index);
    }

    for (int t : transitions) {
        out.states = smooth_boundary(out.states, t, smoother_half_window);
    }
    return out;
}

}  // namespace ms
