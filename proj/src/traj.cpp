#include <Eigen/Dense>

#include "ms/traj.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ms/errors.hpp"

namespace ms {

const std::array<int, kSkeletonJointCount>& skeleton_parents() {
    static const std::array<int, kSkeletonJointCount> parents = {
        -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
    return parents;
}

const std::array<Vec3, kSkeletonJointCount>& skeleton_offsets() {
    // Stick-figure template, Y-up, facing +Z, left side on +X. Root (pelvis)
    // rests at y = 0.96 so the ankles sit at 0.08 and toes at 0.02.
    static const std::array<Vec3, kSkeletonJointCount> offsets = {
        Vec3(0, 0, 0),            // pelvis
        Vec3(0.09, -0.06, 0),     // left hip
        Vec3(-0.09, -0.06, 0),    // right hip
        Vec3(0, 0.11, 0),         // spine1
        Vec3(0, -0.40, 0),        // left knee
        Vec3(0, -0.40, 0),        // right knee
        Vec3(0, 0.12, 0),         // spine2
        Vec3(0, -0.42, 0),        // left ankle
        Vec3(0, -0.42, 0),        // right ankle
        Vec3(0, 0.12, 0),         // spine3
        Vec3(0, -0.06, 0.13),     // left toe
        Vec3(0, -0.06, 0.13),     // right toe
        Vec3(0, 0.14, 0),         // neck
        Vec3(0.05, 0.08, 0),      // left collar
        Vec3(-0.05, 0.08, 0),     // right collar
        Vec3(0, 0.12, 0),         // head
        Vec3(0.12, 0, 0),         // left shoulder
        Vec3(-0.12, 0, 0),        // right shoulder
        Vec3(0.26, 0, 0),         // left elbow
        Vec3(-0.26, 0, 0),        // right elbow
        Vec3(0.25, 0, 0),         // left wrist
        Vec3(-0.25, 0, 0),        // right wrist
        Vec3(0.08, 0, 0),         // left hand
        Vec3(-0.08, 0, 0),        // right hand
    };
    return offsets;
}

SkeletonFrame forward_kinematics(const BodyState& state, double fps) {
    const auto& parents = skeleton_parents();
    const auto& offsets = skeleton_offsets();

    SkeletonFrame out;
    out.fps = fps;
    std::array<Mat3, kSkeletonJointCount> global_rot;

    global_rot[0] = axis_angle_to_matrix(state.root_orient);
    out.joints[0] = state.translation;
    for (int j = 1; j < kSkeletonJointCount; ++j) {
        const int p = parents[static_cast<size_t>(j)];
        const Mat3 local = axis_angle_to_matrix(state.body_pose[static_cast<size_t>(j - 1)]);
        global_rot[static_cast<size_t>(j)] = global_rot[static_cast<size_t>(p)] * local;
        out.joints[static_cast<size_t>(j)] =
            out.joints[static_cast<size_t>(p)] +
            global_rot[static_cast<size_t>(p)] * offsets[static_cast<size_t>(j)];
    }
    return out;
}

std::vector<SkeletonFrame> forward_kinematics(const std::vector<BodyState>& states, double fps) {
    std::vector<SkeletonFrame> out;
    out.reserve(states.size());
    for (const BodyState& s : states) out.push_back(forward_kinematics(s, fps));
    return out;
}

namespace {

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double idx = p * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

Vec3 central_diff(const std::vector<SkeletonFrame>& frames, int joint, int t, double fps) {
    const int n = static_cast<int>(frames.size());
    const int t0 = std::max(0, t - 1);
    const int t1 = std::min(n - 1, t + 1);
    const Vec3 d = frames[static_cast<size_t>(t1)].joints[static_cast<size_t>(joint)] -
                   frames[static_cast<size_t>(t0)].joints[static_cast<size_t>(joint)];
    return d * fps / static_cast<double>(t1 - t0);
}

}  // namespace

ContactState detect_contacts(const std::vector<SkeletonFrame>& frames, const ContactConfig& cfg) {
    const int n = static_cast<int>(frames.size());
    if (n < 2) {
        throw InputError("detect_contacts: need at least 2 frames");
    }
    const double fps = frames.front().fps;

    std::vector<double> ankle_heights;
    ankle_heights.reserve(static_cast<size_t>(2 * n));
    for (const SkeletonFrame& f : frames) {
        ankle_heights.push_back(f.joints[kLeftAnkle].y());
        ankle_heights.push_back(f.joints[kRightAnkle].y());
    }
    const double ground = percentile(ankle_heights, 0.05);

    ContactState c;
    c.left_contact.resize(static_cast<size_t>(n));
    c.right_contact.resize(static_cast<size_t>(n));
    c.root_velocity.resize(static_cast<size_t>(n));

    for (int t = 0; t < n; ++t) {
        // A planted foot is stationary relative to at least one neighboring
        // frame; one-sided speeds avoid smearing the lift-off/touch-down frame
        // the way a central difference would.
        const auto foot_speed = [&](int ankle) {
            double speed = std::numeric_limits<double>::max();
            const auto& joints = [&](int f) -> const Vec3& {
                return frames[static_cast<size_t>(f)].joints[static_cast<size_t>(ankle)];
            };
            if (t > 0) speed = std::min(speed, (joints(t) - joints(t - 1)).norm() * fps);
            if (t + 1 < n) speed = std::min(speed, (joints(t + 1) - joints(t)).norm() * fps);
            return speed;
        };
        const auto foot_contact = [&](int ankle) {
            const double h = frames[static_cast<size_t>(t)].joints[static_cast<size_t>(ankle)].y();
            if (h >= ground + cfg.height_thresh_m) return false;
            return foot_speed(ankle) < cfg.vel_thresh_mps;
        };
        c.left_contact[static_cast<size_t>(t)] = foot_contact(kLeftAnkle);
        c.right_contact[static_cast<size_t>(t)] = foot_contact(kRightAnkle);
        c.root_velocity[static_cast<size_t>(t)] = central_diff(frames, kPelvis, t, fps);
    }
    return c;
}

namespace {

struct Interval {
    int start = 0;  // inclusive
    int end = 0;    // exclusive
    int foot = 0;   // ankle joint id
};

std::vector<Interval> contact_intervals(const std::vector<bool>& contact, int foot) {
    std::vector<Interval> out;
    const int n = static_cast<int>(contact.size());
    int t = 0;
    while (t < n) {
        if (!contact[static_cast<size_t>(t)]) {
            ++t;
            continue;
        }
        int e = t;
        while (e < n && contact[static_cast<size_t>(e)]) ++e;
        out.push_back({t, e, foot});
        t = e;
    }
    return out;
}

}  // namespace

StitchedMotion refine_trajectory(const StitchedMotion& motion, const ContactState& contacts,
                                 double fps) {
    const int n = static_cast<int>(motion.states.size());
    if (static_cast<int>(contacts.size()) != n) {
        throw InputError("refine_trajectory: contacts and motion length mismatch");
    }
    if (n == 0) return motion;

    const std::vector<SkeletonFrame> skel = forward_kinematics(motion.states, fps);

    // Horizontal root correction by drift-velocity cancellation: between two
    // consecutive contact frames of the same foot, that foot's horizontal
    // displacement is subtracted from the root motion (averaged when both feet
    // qualify). The corrected foot is then constant through each interval, so
    // its refined position equals its own interval mean.
    const auto foot_xz = [&](int t, int joint) {
        const Vec3& p = skel[static_cast<size_t>(t)].joints[static_cast<size_t>(joint)];
        return Eigen::Vector2d(p.x(), p.z());
    };

    std::vector<Eigen::Vector2d> correction(static_cast<size_t>(n), Eigen::Vector2d::Zero());
    std::vector<bool> anchored(static_cast<size_t>(n), false);
    bool any_contact = false;
    for (int t = 1; t < n; ++t) {
        Eigen::Vector2d drift = Eigen::Vector2d::Zero();
        int feet = 0;
        if (contacts.left_contact[static_cast<size_t>(t)] &&
            contacts.left_contact[static_cast<size_t>(t - 1)]) {
            drift += foot_xz(t, kLeftAnkle) - foot_xz(t - 1, kLeftAnkle);
            ++feet;
        }
        if (contacts.right_contact[static_cast<size_t>(t)] &&
            contacts.right_contact[static_cast<size_t>(t - 1)]) {
            drift += foot_xz(t, kRightAnkle) - foot_xz(t - 1, kRightAnkle);
            ++feet;
        }
        correction[static_cast<size_t>(t)] = correction[static_cast<size_t>(t - 1)];
        if (feet > 0) {
            correction[static_cast<size_t>(t)] -= drift / static_cast<double>(feet);
            anchored[static_cast<size_t>(t)] = true;
            any_contact = true;
        }
    }
    if (!any_contact) return motion;

    // The corrections above hold the feet but change abruptly at interval
    // boundaries; re-shape each unanchored gap with a C1 cubic Hermite between
    // its anchored endpoints (slopes taken from the neighboring anchored steps)
    // so the root trajectory stays smooth.
    int t = 0;
    while (t < n) {
        if (anchored[static_cast<size_t>(t)] || t == 0) {
            ++t;
            continue;
        }
        const int gap_start = t;
        int gap_end = t;
        while (gap_end < n && !anchored[static_cast<size_t>(gap_end)]) ++gap_end;
        if (gap_end >= n) break;  // trailing gap keeps the constant extension

        const int a = gap_start - 1;
        const int b = gap_end;
        const Eigen::Vector2d va = correction[static_cast<size_t>(a)];
        const Eigen::Vector2d vb = correction[static_cast<size_t>(b)];
        Eigen::Vector2d sa = Eigen::Vector2d::Zero();
        if (a >= 1 && anchored[static_cast<size_t>(a)]) {
            sa = va - correction[static_cast<size_t>(a - 1)];
        }
        Eigen::Vector2d sb = Eigen::Vector2d::Zero();
        if (b + 1 < n && anchored[static_cast<size_t>(b + 1)]) {
            sb = correction[static_cast<size_t>(b + 1)] - vb;
        }
        const double len = static_cast<double>(b - a);
        for (int f = gap_start; f < gap_end; ++f) {
            const double u = static_cast<double>(f - a) / len;
            const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
            const double h10 = u * (1 - u) * (1 - u);
            const double h01 = u * u * (3 - 2 * u);
            const double h11 = u * u * (u - 1);
            correction[static_cast<size_t>(f)] =
                h00 * va + h10 * len * sa + h01 * vb + h11 * len * sb;
        }
        t = gap_end;
    }

    StitchedMotion out = motion;
    for (int f = 0; f < n; ++f) {
        out.states[static_cast<size_t>(f)].translation.x() += correction[static_cast<size_t>(f)].x();
        out.states[static_cast<size_t>(f)].translation.z() += correction[static_cast<size_t>(f)].y();
    }
    return out;
}

}  // namespace ms
